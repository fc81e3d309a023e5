//! End-to-end acceptance suite; prints one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};
use std::{env, fs};

use idslab::{execute, ExperimentConfig, ExperimentResult};
use idslab_core::operator::translate_potential;
use idslab_core::potential::check_moment_bound;
use idslab_core::spectral::{self, norm_proxy};
use idslab_core::{
    build_hamiltonian, gauge_transform, magnetic_translate, BoundaryCondition, BoxSpec, CouplingDist, EnsembleSpec,
    MagneticField, Profile,
};
use oracle::{expm_neg, hermitian_eigenvalues, random_hermitian, relative_spectral_gap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<(bool, String), String>;
type Shared = fn(&BcGap) -> Outcome;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::load(&configs().join(name)).map_err(|e| e.to_string())
}

fn run_config(name: &str) -> Result<ExperimentResult, String> {
    let c = load(name)?;
    c.validate().map_err(|e| e.to_string())?;
    execute(&c).map_err(|e| e.to_string())
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut trace_worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=64);
        let m = random_hermitian(n, &mut rng);
        let ours = spectral::eigenvalues_of(&m).map_err(|e| e.to_string())?;
        let norm = norm_proxy(&m);
        for (a, b) in ours.eigenvalues().iter().zip(hermitian_eigenvalues(&m)) {
            worst = worst.max((a - b).abs() / norm);
        }
        let trace = m.trace().re;
        trace_worst = trace_worst.max((ours.sum() - trace).abs() / trace.abs().max(norm));
    }
    Ok((worst <= 1e-8 && trace_worst <= 1e-10, format!("max |Δλ|/‖H‖ = {worst:.2e}, trace error {trace_worst:.2e}")))
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut gauge_worst = 0.0f64;
    for k in 0..100 {
        let bc = [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann, BoundaryCondition::Periodic][k % 3];
        let (bx, field) = if bc == BoundaryCondition::Periodic {
            (BoxSpec::cube(2, 6, 1.0, bc), MagneticField::planar(2, 2.0 * std::f64::consts::PI / 6.0))
        } else {
            (BoxSpec::cube(2, 6, 0.8, bc), MagneticField::planar(2, rng.random_range(-2.0..2.0)))
        };
        let (bx, field) = (bx.map_err(|e| e.to_string())?, field.map_err(|e| e.to_string())?);
        let v: Vec<f64> = (0..bx.n_sites()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let op = build_hamiltonian(&bx, &field, &v).map_err(|e| e.to_string())?;
        let chi: Vec<f64> = (0..bx.n_sites()).map(|_| rng.random_range(-10.0..10.0)).collect();
        let g = gauge_transform(&op, &chi).map_err(|e| e.to_string())?;
        let a = spectral::eigenvalues(&op).map_err(|e| e.to_string())?;
        let b = spectral::eigenvalues(&g).map_err(|e| e.to_string())?;
        let norm = norm_proxy(op.matrix());
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            gauge_worst = gauge_worst.max((x - y).abs() / norm);
        }
    }
    let bx = BoxSpec::cube(2, 6, 1.0, BoundaryCondition::Periodic).map_err(|e| e.to_string())?;
    let field = MagneticField::planar(2, 2.0 * std::f64::consts::PI / 6.0).map_err(|e| e.to_string())?;
    let mut translation_worst = 0.0f64;
    for _ in 0..20 {
        let v: Vec<f64> = (0..bx.n_sites()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let op = build_hamiltonian(&bx, &field, &v).map_err(|e| e.to_string())?;
        let shift = [rng.random_range(-5i64..6), rng.random_range(-5i64..6)];
        let moved = magnetic_translate(&op, &shift).map_err(|e| e.to_string())?;
        let shifted = translate_potential(&bx, &v, &shift).map_err(|e| e.to_string())?;
        let direct = build_hamiltonian(&bx, &field, &shifted).map_err(|e| e.to_string())?;
        let a = spectral::eigenvalues(&op).map_err(|e| e.to_string())?;
        let b = spectral::eigenvalues(&moved).map_err(|e| e.to_string())?;
        let c = spectral::eigenvalues(&direct).map_err(|e| e.to_string())?;
        translation_worst = translation_worst
            .max(relative_spectral_gap(a.eigenvalues(), b.eigenvalues()))
            .max(relative_spectral_gap(a.eigenvalues(), c.eigenvalues()));
    }
    Ok((
        gauge_worst <= 1e-10 && translation_worst <= 1e-10,
        format!("100 gauges {gauge_worst:.2e}, 20 translations {translation_worst:.2e} (relative to ‖H‖)"),
    ))
}

fn diamagnetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut excess = f64::NEG_INFINITY;
    let mut oracle_gap = 0.0f64;
    for (k, side) in [4, 6, 8, 10, 12, 4, 6, 8, 10, 12].into_iter().enumerate() {
        let b = rng.random_range(-3.0..3.0);
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let bx = BoxSpec::cube(2, side, 1.0, bc).map_err(|e| e.to_string())?;
            let zero = vec![0.0; bx.n_sites()];
            let free = build_hamiltonian(&bx, &MagneticField::zero(2), &zero).map_err(|e| e.to_string())?;
            let field = MagneticField::planar(2, b).map_err(|e| e.to_string())?;
            let op = build_hamiltonian(&bx, &field, &zero).map_err(|e| e.to_string())?;
            for t in [0.1, 0.5, 1.0, 2.0] {
                let kb = spectral::heat_kernel(&op, t).map_err(|e| e.to_string())?;
                let k0 = spectral::heat_kernel(&free, t).map_err(|e| e.to_string())?;
                if k < 2 {
                    oracle_gap = oracle_gap.max(kb.max_abs_diff(&expm_neg(op.matrix(), t)));
                }
                for (z, w) in kb.data().iter().zip(k0.data()) {
                    excess = excess.max(z.norm() - w.re);
                }
            }
        }
    }
    Ok((
        excess <= 1e-12 && oracle_gap < 1e-10,
        format!("max(|K_B| − K_0) = {excess:.2e}, heat kernel vs Taylor oracle {oracle_gap:.2e}"),
    ))
}

struct BcGap {
    violations: u64,
    gaps: Vec<f64>,
    std_mid: Vec<f64>,
}

fn bc_gap_run() -> Result<BcGap, String> {
    let r = run_config("bc-gap.toml")?;
    Ok(BcGap {
        violations: r.summary["sandwich_violations"].as_u64().ok_or("missing violations")?,
        gaps: floats(&r.summary["sup_gaps"]),
        std_mid: floats(&r.summary["dirichlet_std_mid"]),
    })
}

fn sandwich(g: &BcGap) -> Outcome {
    Ok((g.violations == 0, format!("{} (seed, E) pairs with N_D > N_N", g.violations)))
}

fn bc_trend(g: &BcGap) -> Outcome {
    let [g8, g16, g32] = g.gaps[..] else {
        return Err(format!("expected three gaps, got {:?}", g.gaps));
    };
    let ratio = g32 / g16;
    Ok((
        g8 > g16 && g16 > g32 && (0.3..=0.8).contains(&ratio),
        format!("gaps {g8:.4} > {g16:.4} > {g32:.4}, ratio {ratio:.3}"),
    ))
}

fn self_averaging(g: &BcGap) -> Outcome {
    let [_, s16, s32] = g.std_mid[..] else {
        return Err(format!("expected three deviations, got {:?}", g.std_mid));
    };
    let factor = s16 / s32;
    Ok(((1.4..=3.5).contains(&factor), format!("std 16² {s16:.4e}, 32² {s32:.4e}, factor {factor:.3}")))
}

fn truncation() -> Outcome {
    let r = run_config("truncation.toml")?;
    let ok = r.summary["decreasing_to_zero"] == Value::Bool(true) && r.summary["zero_above_max"] == Value::Bool(true);
    let devs: Vec<&String> = r.tables[0].rows.iter().map(|row| &row[1]).collect();
    Ok((ok, format!("max|V| = {}, sup deviations {devs:?}", r.summary["max_abs_potential"])))
}

fn tightness() -> Outcome {
    let r = run_config("tightness.toml")?;
    let slope = r.summary["fitted_slope"].as_f64();
    let slope_ok = slope.is_some_and(|s| s <= -0.7);
    let mut poisson = load("tightness.toml")?;
    poisson.ensemble = EnsembleSpec::Poisson { profile: Profile::unit_cube(), intensity: 1.0 };
    poisson.model.boxes = vec![vec![8, 8], vec![16, 16]];
    poisson.run.realizations = 50;
    poisson.params.energies = Some(vec![-2.0, -1.0, -0.5, -0.1, -1e-3]);
    poisson.validate().map_err(|e| e.to_string())?;
    let p = execute(&poisson).map_err(|e| e.to_string())?;
    let nonzero = p.tables[0].rows.iter().filter(|row| row[1].parse::<f64>() != Ok(0.0)).count();
    Ok((
        slope_ok && nonzero == 0 && p.summary["positivity_check"] == Value::Bool(true),
        format!(
            "Gaussian slope {slope:?} (excluded {}), Poisson negative-energy violations {nonzero}",
            r.summary["excluded"]
        ),
    ))
}

fn weyl() -> Outcome {
    let r = run_config("weyl.toml")?;
    let ratios = floats(&r.summary["ratios"]);
    let ok = !ratios.is_empty() && ratios.iter().all(|x| (x - 1.0).abs() <= 0.1);
    Ok((ok, format!("E^-1 N(E) / (1/2π) = {ratios:?}")))
}

fn gaussian_tail() -> Outcome {
    let r = run_config("gaussian-tail.toml")?;
    let rows = r.summary["rows"].as_array().cloned().unwrap_or_default();
    let Some(row) = rows.iter().find(|row| row["energy"].as_f64() == Some(-4.0)) else {
        return Ok((false, format!("no states at E = -4 (excluded {})", r.summary["excluded"])));
    };
    let ratio = row["ratio"].as_f64().unwrap_or(f64::NAN);
    Ok((
        (1.0 / 1.6..=1.6).contains(&ratio),
        format!(
            "E^-2 log N = {} vs {}, ratio {ratio:.3}, occupied realizations {}",
            row["measured"], r.summary["reference"], row["occupied_realizations"]
        ),
    ))
}

fn landau() -> Outcome {
    let r = run_config("landau.toml")?;
    let s = &r.summary;
    let err = s["relative_error"].as_f64().unwrap_or(f64::INFINITY);
    let step_match =
        (s["reference_step"].as_f64().unwrap_or(0.0) - s["expected_count"].as_f64().unwrap_or(1.0)).abs() < 1e-9;
    Ok((
        err <= 0.15 && step_match,
        format!(
            "B = {}, cluster of {} at {} (expected {}, spread {}), next level {}",
            s["field_strength"],
            s["cluster_count"],
            s["cluster_mean"],
            s["expected_count"],
            s["cluster_spread"],
            s["next_level"]
        ),
    ))
}

fn measure_demo() -> Outcome {
    let checks = idslab::demo::measure_demo(42).map_err(|e| e.to_string())?;
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.pass).map(|c| format!("{} {}", c.family, c.parameter)).collect();
    Ok((failed.is_empty(), format!("{} checks, failed {failed:?}", checks.len())))
}

fn moments() -> Outcome {
    let alloy = |coupling| EnsembleSpec::Alloy { profile: Profile::unit_cube(), coupling };
    let cases = [
        ("constant", alloy(CouplingDist::Constant { value: 1.0 }), 2.0, 2.0),
        ("uniform", alloy(CouplingDist::Uniform { low: 0.0, high: 1.0 }), 3.0, 3.0),
        ("poisson", EnsembleSpec::Poisson { profile: Profile::unit_cube(), intensity: 1.0 }, 3.0, 3.0),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, spec, q, r) in cases {
        let rep = check_moment_bound(&spec, 2, q, r, 20_000, 13).map_err(|e| e.to_string())?;
        ok &= !rep.violated;
        detail.push(format!("{name}: {:.4} ± {:.4} <= {:.4}", rep.lhs_estimate, rep.lhs_stderr, rep.rhs_bound));
    }
    Ok((ok, detail.join("; ")))
}

fn reproducibility() -> Outcome {
    let tmp = env::temp_dir().join(format!("idslab-acceptance-{}", std::process::id()));
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for name in ["ids.toml", "truncation.toml", "measure-demo.toml"] {
        let mut outputs = Vec::new();
        for (run, workers) in [("a", "1"), ("b", "2")] {
            let out = tmp.join(name).join(run);
            let status = Command::new(env!("CARGO_BIN_EXE_idslab"))
                .arg("run")
                .arg(configs().join(name))
                .arg("--out")
                .arg(&out)
                .arg("--workers")
                .arg(workers)
                .env_remove("IDSLAB_OUT")
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if !status.success() {
                return Err(format!("{name} exited with {status}"));
            }
            outputs.push(out);
        }
        for entry in fs::read_dir(&outputs[0]).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|x| x == "csv") {
                compared += 1;
                let other = outputs[1].join(path.file_name().unwrap());
                if fs::read(&path).ok() != fs::read(&other).ok() {
                    mismatched.push(path.display().to_string());
                }
            }
        }
    }
    let _ = fs::remove_dir_all(&tmp);
    Ok((compared > 0 && mismatched.is_empty(), format!("{compared} CSVs compared, mismatched {mismatched:?}")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: &Criterion, outcome: Outcome, elapsed: Duration) -> bool {
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_time = c.limit.map_or(true, |l| elapsed <= l);
    let pass = ok && in_time;
    let limit = c.limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
    println!(
        "{} {:>2} {:<22} [{:.1}s{limit}] {detail}",
        if pass { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        elapsed.as_secs_f64()
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let filter: Vec<String> = env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: u32| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());
    let mins = |m: u64| Some(Duration::from_secs(60 * m));
    let crit = |id, name, limit| Criterion { id, name, limit };
    let mut passed = 0;
    let mut ran = 0;
    let mut tally = |pass: bool| {
        ran += 1;
        passed += pass as usize;
    };

    let simple: [(Criterion, fn() -> Outcome); 3] = [
        (crit(1, "eigensolver", mins(1)), eigensolver),
        (crit(2, "gauge-translation", mins(2)), invariance),
        (crit(3, "diamagnetic", mins(2)), diamagnetic),
    ];
    for (c, f) in simple {
        if wanted(c.id) {
            let (o, t) = timed(f);
            tally(report(&c, o, t));
        }
    }

    if wanted(4) || wanted(5) || wanted(6) {
        let (g, t) = timed(bc_gap_run);
        let shared: [(Criterion, Shared); 3] = [
            (crit(4, "bc-sandwich", None), sandwich),
            (crit(5, "bc-independence", mins(20)), bc_trend),
            (crit(6, "self-averaging", None), self_averaging),
        ];
        for (c, f) in shared {
            if wanted(c.id) {
                let o = g.as_ref().map_err(Clone::clone).and_then(f);
                tally(report(&c, o, t));
            }
        }
    }

    let rest: [(Criterion, fn() -> Outcome); 8] = [
        (crit(7, "truncation", mins(10)), truncation),
        (crit(8, "tightness", mins(15)), tightness),
        (crit(9, "weyl", mins(5)), weyl),
        (crit(10, "gaussian-tail", mins(15)), gaussian_tail),
        (crit(11, "landau", mins(5)), landau),
        (crit(12, "measure-demo", mins(1)), measure_demo),
        (crit(13, "moment-bound", mins(3)), moments),
        (crit(14, "reproducibility", None), reproducibility),
    ];
    for (c, f) in rest {
        if wanted(c.id) {
            let (o, t) = timed(f);
            tally(report(&c, o, t));
        }
    }

    println!("{passed}/{ran} criteria passed");
    if passed == ran {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
