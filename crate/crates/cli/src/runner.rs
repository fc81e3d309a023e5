//! Executes one experiment and persists its results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use idslab_core::ids::{self, IDSEstimate};
use idslab_core::potential::check_moment_bound;
use idslab_core::{BoundaryCondition, BoxSpec, EnsembleSpec, MagneticField};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig, GridSpec};
use crate::demo::measure_demo;
use crate::output::{fmt_f64, OutputDir, RunManifest, Status, Table, SUMMARY};

/// Slack added to the tightness bound exponent before a fit counts as failing.
pub const TIGHTNESS_SLACK: f64 = 0.3;
/// Allowed relative deviation of the Weyl ratio from 1.
pub const WEYL_TOLERANCE: f64 = 0.1;
/// Allowed factor between the measured and reference Gaussian tail constants.
pub const TAIL_FACTOR: f64 = 1.6;
/// Allowed relative error of the lowest Landau cluster population.
pub const LANDAU_TOLERANCE: f64 = 0.15;
const DEFAULT_OUTPUT: &str = "idslab-out";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numerical(#[from] idslab_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Tables, a JSON summary and a verdict.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub status: Status,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub status: Status,
    pub manifest: RunManifest,
    pub notes: Vec<String>,
}

fn join_sides(s: &[usize]) -> String {
    s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

fn resolve_grid(config: &ExperimentConfig, bx: &BoxSpec, field: &MagneticField) -> Result<Vec<f64>, RunError> {
    Ok(match &config.run.grid {
        GridSpec::Uniform { lo, hi, points } => ids::uniform_grid(*lo, *hi, *points)?,
        GridSpec::List { energies } => energies.clone(),
        GridSpec::Pilot { points } => ids::pilot_grid(&config.ensemble, bx, field, config.run.master_seed, *points)?,
    })
}

fn sorted_energies(config: &ExperimentConfig) -> Vec<f64> {
    let mut e = config.energies().map(<[f64]>::to_vec).unwrap_or_default();
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

const IDS_COLUMNS: [(&str, &str); 5] = [
    ("bc", "boundary condition"),
    ("energy", "grid energy E"),
    ("value", "disorder mean of N(E)/|Λ|"),
    ("stderr", "standard error of the mean"),
    ("std_dev", "across-seed standard deviation of N(E)/|Λ|"),
];

fn push_estimate(table: &mut Table, label: &str, est: &IDSEstimate) {
    for i in 0..est.grid.len() {
        table.push(vec![
            label.to_string(),
            fmt_f64(est.grid[i]),
            fmt_f64(est.values[i]),
            fmt_f64(est.stderr[i]),
            fmt_f64(est.std_dev[i]),
        ]);
    }
}

fn run_ids(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let main = c.model.main_box()?;
    let grid = resolve_grid(c, &main, field)?;
    let mut table = Table::new("ids", &IDS_COLUMNS);
    let mut notes = Vec::new();
    let mut per_bc = Vec::new();
    for &bc in &c.model.bc {
        let bx = main.with_bc(bc);
        let est = match c.params.window_fraction {
            Some(f) => ids::localized_ids(&c.ensemble, &bx, f, field, &grid, c.run.realizations, c.run.master_seed)?,
            None => ids::finite_volume_ids(&c.ensemble, &bx, field, &grid, c.run.realizations, c.run.master_seed)?,
        };
        push_estimate(&mut table, bc.label(), &est);
        if !est.jump_cells.is_empty() {
            notes.push(format!("{bc}: possible discontinuities in grid cells {:?}", est.jump_cells));
        }
        notes.extend(est.warnings.iter().map(|w| format!("{bc}: {w}")));
        per_bc.push(json!({ "bc": bc, "jump_cells": est.jump_cells, "monotone": est.is_monotone() }));
    }
    let status = if notes.is_empty() { Status::Pass } else { Status::Warn };
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({ "grid_points": grid.len(), "per_bc": per_bc }),
        status,
        notes,
    })
}

fn run_bc_gap(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let boxes = c.model.box_sequence()?;
    let largest = boxes.last().expect("validated nonempty");
    let grid = resolve_grid(c, largest, field)?;
    let t = ids::bc_gap(&c.ensemble, &boxes, field, &grid, c.run.realizations, c.run.master_seed, c.run.smoothing_eps)?;
    let mid = grid.len() / 2;
    let mut gaps = Table::new(
        "bc_gap",
        &[
            ("box", "sites per axis"),
            ("volume", "|Λ|"),
            ("sup_gap", "sup_E |N_N − N_D|/|Λ| of disorder means"),
            ("smoothed_gap", "same with the Cauchy-smoothed ramp indicator"),
            ("sandwich_violations", "(seed, E) pairs with N_D > N_N"),
            ("midpoint_energy", "grid midpoint"),
            ("dirichlet_std_mid", "across-seed std of N_D/|Λ| at the grid midpoint"),
            ("neumann_std_mid", "across-seed std of N_N/|Λ| at the grid midpoint"),
        ],
    );
    let mut curves = Table::new("bc_gap_ids", &IDS_COLUMNS);
    for r in &t.rows {
        let label = join_sides(&r.sides);
        gaps.push(vec![
            label.clone(),
            fmt_f64(r.volume),
            fmt_f64(r.sup_gap),
            fmt_f64(r.smoothed_gap),
            r.sandwich_violations.to_string(),
            fmt_f64(grid[mid]),
            fmt_f64(r.dirichlet.std_dev[mid]),
            fmt_f64(r.neumann.std_dev[mid]),
        ]);
        push_estimate(&mut curves, &format!("dirichlet-{label}"), &r.dirichlet);
        push_estimate(&mut curves, &format!("neumann-{label}"), &r.neumann);
    }
    let decreasing = t.strictly_decreasing();
    let violations = t.total_sandwich_violations();
    let status = if decreasing && violations == 0 { Status::Pass } else { Status::Fail };
    let mut notes = Vec::new();
    if !decreasing {
        notes.push(format!("sup gaps not strictly decreasing: {:?}", t.sup_gaps()));
    }
    if violations > 0 {
        notes.push(format!("{violations} sandwich violations"));
    }
    Ok(ExperimentResult {
        tables: vec![gaps, curves],
        summary: json!({
            "sup_gaps": t.sup_gaps(),
            "smoothed_gaps": t.rows.iter().map(|r| r.smoothed_gap).collect::<Vec<_>>(),
            "strictly_decreasing": decreasing,
            "sandwich_violations": violations,
            "midpoint_energy": grid[mid],
            "dirichlet_std_mid": t.rows.iter().map(|r| r.dirichlet.std_dev[mid]).collect::<Vec<_>>(),
        }),
        status,
        notes,
    })
}

fn run_truncation(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let bx = c.model.main_box()?;
    let grid = resolve_grid(c, &bx, field)?;
    let levels = c.params.levels.clone().unwrap_or_default();
    let t = ids::truncation_sweep(
        &c.ensemble,
        &bx,
        field,
        &grid,
        &levels,
        c.run.realizations,
        c.run.master_seed,
        c.run.smoothing_eps,
    )?;
    let mut table = Table::new(
        "truncation",
        &[
            ("level", "truncation height n"),
            ("sup_deviation", "sup_E mean |N(E; V_n) − N(E; V)|/|Λ|"),
            ("smoothed_deviation", "same with the Cauchy-smoothed ramp indicator"),
            ("exceeds_max", "n above the largest realized |V|"),
        ],
    );
    for r in &t.rows {
        table.push(vec![
            fmt_f64(r.level),
            fmt_f64(r.sup_deviation),
            fmt_f64(r.smoothed_deviation),
            r.exceeds_max.to_string(),
        ]);
    }
    let ok = t.decreasing_to_zero() && t.zero_above_max();
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({
            "max_abs_potential": t.max_abs_potential,
            "decreasing_to_zero": t.decreasing_to_zero(),
            "zero_above_max": t.zero_above_max(),
        }),
        status: if ok { Status::Pass } else { Status::Fail },
        notes: Vec::new(),
    })
}

/// Nonnegative potential, no field, Dirichlet: the operator is positive, so
/// every negative-energy count must vanish.
fn positivity_applies(c: &ExperimentConfig, field: &MagneticField) -> bool {
    c.ensemble.is_nonnegative() && field.is_zero() && c.model.primary_bc() == BoundaryCondition::Dirichlet
}

fn run_tightness(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let energies = sorted_energies(c);
    let boxes = c.model.box_sequence()?;
    let estimates = boxes
        .iter()
        .map(|bx| ids::finite_volume_ids(&c.ensemble, bx, field, &energies, c.run.realizations, c.run.master_seed))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = ids::tightness_check(&estimates, &energies)?;
    let mut table = Table::new("tightness", &[("energy", "E < 0"), ("max_value", "maximum over volumes of N(E)/|Λ|")]);
    for (e, v) in rep.energies.iter().zip(&rep.max_values) {
        table.push(vec![fmt_f64(*e), fmt_f64(*v)]);
    }
    let mut notes = Vec::new();
    let status = if positivity_applies(c, field) {
        let nonzero = rep.max_values.iter().filter(|&&v| v != 0.0).count();
        if nonzero > 0 {
            notes.push(format!("{nonzero} negative energies with states for a positive operator"));
            Status::Fail
        } else {
            Status::Pass
        }
    } else {
        match rep.fitted_slope {
            Some(s) if s <= rep.bound_exponent + TIGHTNESS_SLACK => Status::Pass,
            Some(s) => {
                notes.push(format!("slope {s} above {}", rep.bound_exponent + TIGHTNESS_SLACK));
                Status::Fail
            }
            None => {
                notes.push("fewer than two energies with states; no fit".into());
                Status::Warn
            }
        }
    };
    if !rep.excluded.is_empty() {
        notes.push(format!("energies without states, excluded from the fit: {:?}", rep.excluded));
    }
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({
            "fitted_slope": rep.fitted_slope,
            "bound_exponent": rep.bound_exponent,
            "excluded": rep.excluded,
            "positivity_check": positivity_applies(c, field),
        }),
        status,
        notes,
    })
}

fn run_weyl(c: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let spacings = c.params.spacings.clone().unwrap_or_else(|| vec![c.model.spacing]);
    let energies = c.params.energies.clone().unwrap_or_else(|| vec![1.0]);
    let side_length =
        c.params.side_length.unwrap_or_else(|| c.model.sides.first().map_or(16.0, |&l| l as f64 * c.model.spacing));
    let rows = ids::weyl_check(c.model.d, side_length, &spacings, &energies)?;
    let mut table = Table::new(
        "weyl",
        &[
            ("spacing", "h"),
            ("sites", "sites per axis"),
            ("energy", "E"),
            ("dirichlet_count", "N_D(E)"),
            ("neumann_count", "N_N(E)"),
            ("measured", "E^{-d/2} (N_D + N_N)/(2|Λ|)"),
            ("reference", "1/(Γ(d/2+1)(2π)^{d/2})"),
            ("ratio", "measured/reference"),
            ("faithful", "E <= 0.2/h^2"),
        ],
    );
    let mut status = Status::Pass;
    let mut notes = Vec::new();
    for r in &rows {
        table.push(vec![
            fmt_f64(r.spacing),
            r.sides[0].to_string(),
            fmt_f64(r.energy),
            r.dirichlet_count.to_string(),
            r.neumann_count.to_string(),
            fmt_f64(r.measured),
            fmt_f64(r.reference),
            fmt_f64(r.ratio),
            r.faithful.to_string(),
        ]);
        if !r.faithful {
            notes.push(format!("E = {} outside the faithful band for h = {}", r.energy, r.spacing));
            status = status.worst(Status::Warn);
        } else if (r.ratio - 1.0).abs() > WEYL_TOLERANCE {
            notes.push(format!("ratio {} at h = {}, E = {}", r.ratio, r.spacing, r.energy));
            status = Status::Fail;
        }
    }
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({ "ratios": rows.iter().map(|r| r.ratio).collect::<Vec<_>>() }),
        status,
        notes,
    })
}

fn run_gaussian_tail(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let EnsembleSpec::Gaussian { covariance } = c.ensemble else {
        return Err(ConfigError::new("ensemble.kind", "gaussian-tail needs a Gaussian ensemble").into());
    };
    let bx = c.model.main_box()?;
    let energies = sorted_energies(c);
    let rep = ids::gaussian_tail_check(&covariance, &bx, field, &energies, c.run.realizations, c.run.master_seed)?;
    let mut table = Table::new(
        "gaussian_tail",
        &[
            ("energy", "E < 0"),
            ("mean_density", "disorder mean of N(E)/|Λ|"),
            ("stderr", "standard error of the mean"),
            ("occupied_realizations", "realizations with a state below E"),
            ("measured", "E^-2 log(mean N/|Λ|)"),
            ("reference", "−1/(2C(0))"),
            ("ratio", "measured/reference"),
        ],
    );
    let mut status = Status::Pass;
    let mut notes = Vec::new();
    for r in &rep.rows {
        table.push(vec![
            fmt_f64(r.energy),
            fmt_f64(r.mean_density),
            fmt_f64(r.stderr),
            r.occupied_realizations.to_string(),
            fmt_f64(r.measured),
            fmt_f64(rep.reference),
            fmt_f64(r.ratio),
        ]);
        if !(1.0 / TAIL_FACTOR..=TAIL_FACTOR).contains(&r.ratio) {
            notes.push(format!(
                "E = {}: measured {} outside a factor {TAIL_FACTOR} of {}",
                r.energy, r.measured, rep.reference
            ));
            status = Status::Fail;
        }
    }
    if !rep.excluded.is_empty() {
        notes.push(format!("no states at {:?} in any realization", rep.excluded));
        status = status.worst(Status::Warn);
    }
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({ "reference": rep.reference, "excluded": rep.excluded, "rows": rep.rows }),
        status,
        notes,
    })
}

fn run_landau(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let bx = c.model.main_box()?;
    let b = field.get(0, 1);
    let spectrum = ids::landau_spectrum(&bx, b)?;
    let rep = ids::landau_report(&bx, b, &spectrum);
    let grid = match &c.run.grid {
        GridSpec::Uniform { lo, hi, points } => ids::uniform_grid(*lo, *hi, *points)?,
        GridSpec::List { energies } => energies.clone(),
        GridSpec::Pilot { points } => ids::uniform_grid(0.0, 4.0 * b, *points)?,
    };
    let mut table = Table::new(
        "landau",
        &[("energy", "E"), ("lattice", "N(E)/|Λ| of the lattice torus"), ("reference", "continuum Landau staircase")],
    );
    for &e in &grid {
        table.push(vec![
            fmt_f64(e),
            fmt_f64(spectrum.count_below(e) as f64 / bx.volume()),
            fmt_f64(ids::landau_reference(b, e)),
        ]);
    }
    let ok = rep.relative_error <= LANDAU_TOLERANCE;
    Ok(ExperimentResult {
        tables: vec![table],
        summary: serde_json::to_value(&rep).map_err(std::io::Error::other)?,
        status: if ok { Status::Pass } else { Status::Fail },
        notes: if ok {
            vec![]
        } else {
            vec![format!("cluster holds {} states, expected {}", rep.cluster_count, rep.expected_count)]
        },
    })
}

fn run_support(c: &ExperimentConfig, field: &MagneticField) -> Result<ExperimentResult, RunError> {
    let bx = c.model.main_box()?;
    let grid = resolve_grid(c, &bx, field)?;
    let rep = ids::support_spectrum_check(&c.ensemble, &bx, field, &grid, c.run.realizations, c.run.master_seed)?;
    let mut table = Table::new("support_gaps", &[("lo", "flat cell start"), ("hi", "flat cell end")]);
    for (lo, hi) in &rep.common_gaps {
        table.push(vec![fmt_f64(*lo), fmt_f64(*hi)]);
    }
    let mut notes = Vec::new();
    let mut status = if rep.consistent() { Status::Pass } else { Status::Fail };
    if rep.outside_grid > 0 {
        notes.push(format!("{} eigenvalues outside the grid", rep.outside_grid));
        status = status.worst(Status::Warn);
    }
    Ok(ExperimentResult {
        tables: vec![table],
        summary: serde_json::to_value(&rep).map_err(std::io::Error::other)?,
        status,
        notes,
    })
}

fn run_moment(c: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let q = c.params.q.unwrap_or(2.0);
    let r = c.params.r.unwrap_or(2.0);
    let samples = c.params.samples.unwrap_or(2000);
    let rep = check_moment_bound(&c.ensemble, c.model.d, q, r, samples, c.run.master_seed)?;
    let mut table = Table::new(
        "moment",
        &[
            ("q", "local L^q exponent"),
            ("r", "moment order"),
            ("samples", "Monte Carlo samples"),
            ("lhs", "E[(∫_Λ(0) |V|^q)^{r/q}]^{1/r}"),
            ("lhs_stderr", "delta-method standard error"),
            ("rhs", "analytic bound"),
            ("violated", "lhs − 3 stderr > rhs"),
        ],
    );
    table.push(vec![
        fmt_f64(q),
        fmt_f64(r),
        samples.to_string(),
        fmt_f64(rep.lhs_estimate),
        fmt_f64(rep.lhs_stderr),
        fmt_f64(rep.rhs_bound),
        rep.violated.to_string(),
    ]);
    Ok(ExperimentResult {
        tables: vec![table],
        summary: serde_json::to_value(&rep).map_err(std::io::Error::other)?,
        status: if rep.violated { Status::Fail } else { Status::Pass },
        notes: Vec::new(),
    })
}

fn run_demo(c: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let checks = measure_demo(c.run.master_seed)?;
    let mut table = Table::new(
        "measure_demo",
        &[
            ("family", "synthetic family"),
            ("parameter", "member or sample description"),
            ("value", "computed value"),
            ("reference", "closed-form value"),
            ("tolerance", "allowed absolute deviation"),
            ("pass", "within tolerance"),
        ],
    );
    for ch in &checks {
        table.push(vec![
            ch.family.to_string(),
            ch.parameter.clone(),
            fmt_f64(ch.value),
            fmt_f64(ch.reference),
            fmt_f64(ch.tolerance),
            ch.pass.to_string(),
        ]);
    }
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.pass).map(|c| format!("{} {}", c.family, c.parameter)).collect();
    Ok(ExperimentResult {
        tables: vec![table],
        summary: json!({ "checks": checks.len(), "failed": failed }),
        status: if failed.is_empty() { Status::Pass } else { Status::Fail },
        notes: failed,
    })
}

/// Runs the experiment without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let field = config.field()?;
    match config.experiment {
        Experiment::Ids => run_ids(config, &field),
        Experiment::BcGap => run_bc_gap(config, &field),
        Experiment::Truncation => run_truncation(config, &field),
        Experiment::Tightness => run_tightness(config, &field),
        Experiment::Weyl => run_weyl(config),
        Experiment::GaussianTail => run_gaussian_tail(config, &field),
        Experiment::Landau => run_landau(config, &field),
        Experiment::SupportSpectrum => run_support(config, &field),
        Experiment::MomentCheck => run_moment(config),
        Experiment::MeasureDemo => run_demo(config),
    }
}

/// `--out` (or `IDSLAB_OUT`), then the config's `output`, then `idslab-out`.
pub fn output_dir(config: &ExperimentConfig, out_override: Option<&Path>) -> PathBuf {
    out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn columns_doc(tables: &[Table]) -> Value {
    let map: BTreeMap<String, BTreeMap<&str, &str>> =
        tables.iter().map(|t| (t.file_name(), t.columns.iter().copied().collect())).collect();
    json!(map)
}

/// Validates, executes inside a pool of `workers` threads, and writes the
/// result directory. A numerical error leaves an error record and no manifest.
pub fn run(config: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<RunReport, RunError> {
    let mut notes = config.validate()?;
    let mut out = OutputDir::prepare(out_dir)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers.or(config.run.workers) {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let result = match pool.install(|| execute(config)) {
        Ok(r) => r,
        Err(e) => {
            out.write_error(&e.to_string())?;
            return Err(e);
        }
    };
    for table in &result.tables {
        out.write_table(table)?;
    }
    out.write_bytes("config.toml", config.to_toml().as_bytes())?;
    notes.extend(result.notes.iter().cloned());
    let summary = json!({
        "experiment": config.experiment,
        "status": result.status,
        "master_seed": config.run.master_seed,
        "columns": columns_doc(&result.tables),
        "results": result.summary,
        "notes": notes,
    });
    out.write_json(SUMMARY, &summary)?;
    let diagnostics = BTreeMap::from([(config.experiment.name().to_string(), result.status)]);
    let manifest = out.finish(config, diagnostics)?;
    Ok(RunReport { out_dir: out_dir.to_path_buf(), status: result.status, manifest, notes })
}
