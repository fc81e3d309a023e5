//! Synthetic measure families with closed-form answers.

use std::f64::consts::PI;

use idslab_core::measure::{
    adaptive_simpson, default_stieltjes_grid, indicator_hat, smoothing_kernel, tightness_profile, upsilon,
    vague_distance,
};
use idslab_core::{AtomicMeasure, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const EXACT_TOLERANCE: f64 = 1e-8;
const RANDOM_MEASURES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoCheck {
    pub family: &'static str,
    pub parameter: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DemoCheck {
    fn close(family: &'static str, parameter: String, value: f64, reference: f64) -> Self {
        DemoCheck {
            family,
            parameter,
            value,
            reference,
            tolerance: EXACT_TOLERANCE,
            pass: (value - reference).abs() <= EXACT_TOLERANCE,
        }
    }

    fn count(family: &'static str, parameter: String, violations: usize) -> Self {
        DemoCheck { family, parameter, value: violations as f64, reference: 0.0, tolerance: 0.0, pass: violations == 0 }
    }
}

fn random_measure(rng: &mut ChaCha8Rng) -> Result<AtomicMeasure> {
    let n = rng.random_range(0..30);
    AtomicMeasure::new((0..n).map(|_| (rng.random_range(-20.0..20.0), rng.random_range(0.01..5.0))).collect())
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// `δ_{1/n} → δ_0`: distance on `{(i, 2)}` is `1/(n² + 1)`, and the default
/// grid distance shrinks monotonically.
fn shrinking_atom(out: &mut Vec<DemoCheck>) -> Result<()> {
    let delta0 = AtomicMeasure::dirac(0.0, 1.0)?;
    let mut previous = f64::INFINITY;
    let mut monotone = 0;
    for k in 0..=10 {
        let n = 2f64.powi(k);
        let atom = AtomicMeasure::dirac(1.0 / n, 1.0)?;
        let d = vague_distance(&atom, &delta0, &[(i(), 2.0)])?;
        out.push(DemoCheck::close("shrinking-atom", format!("n={n}"), d, 1.0 / (n * n + 1.0)));
        let full = vague_distance(&atom, &delta0, &default_stieltjes_grid())?;
        if full >= previous {
            monotone += 1;
        }
        previous = full;
    }
    out.push(DemoCheck::count("shrinking-atom", "default-grid-non-decrease".into(), monotone));
    Ok(())
}

/// `δ_{−n}` against the zero measure: transforms vanish like `1/(n² + 1)` while
/// the tightness profile stays at 1.
fn escaping_mass(out: &mut Vec<DemoCheck>) -> Result<()> {
    let zero = AtomicMeasure::empty();
    let seq: Vec<AtomicMeasure> = (1..=40).map(|n| AtomicMeasure::dirac(-(n as f64), 1.0)).collect::<Result<_>>()?;
    for n in [1usize, 10, 40] {
        let d = vague_distance(&seq[n - 1], &zero, &[(i(), 2.0)])?;
        out.push(DemoCheck::close("escaping-mass", format!("n={n}"), d, 1.0 / ((n * n) as f64 + 1.0)));
    }
    let energies = [-1.0, -2.0, -4.0];
    for (e, v) in energies.iter().zip(tightness_profile(&seq, &energies)?) {
        out.push(DemoCheck::close("escaping-mass", format!("tightness E={e}"), v, 1.0));
    }
    let positive: Vec<AtomicMeasure> = (1..=10).map(|n| AtomicMeasure::dirac(n as f64, 1.0)).collect::<Result<_>>()?;
    for (e, v) in energies.iter().zip(tightness_profile(&positive, &energies)?) {
        out.push(DemoCheck::close("tight-family", format!("tightness E={e}"), v, 0.0));
    }
    Ok(())
}

fn squeeze(out: &mut Vec<DemoCheck>, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut violations = 0;
    for _ in 0..RANDOM_MEASURES {
        let mu = random_measure(rng)?;
        let e = rng.random_range(-25.0..25.0);
        let mid = mu.integrate(indicator_hat(e))?;
        if mu.distribution_function(e) > mid + 1e-12 || mid > mu.distribution_function(e + 1.0) + 1e-12 {
            violations += 1;
        }
    }
    out.push(DemoCheck::count("indicator-squeeze", format!("{RANDOM_MEASURES} random measures"), violations));
    Ok(())
}

/// Normalizers against `1/Υ_p = √π Γ((p−1)/2) / Γ(p/2)` for integer `p`, and
/// unit mass of the kernel by the substitution `E = ε tan φ`.
fn kernels(out: &mut Vec<DemoCheck>) -> Result<()> {
    for (p, closed) in [(2.0, 1.0 / PI), (3.0, 0.5), (4.0, 2.0 / PI), (5.0, 3.0 / 4.0)] {
        out.push(DemoCheck::close("kernel-normalizer", format!("p={p}"), upsilon(p)?, closed));
        for eps in [0.1, 1.0, 3.0] {
            let k = smoothing_kernel(p, eps)?;
            let h = PI / 2.0;
            let mass = adaptive_simpson(
                |phi: f64| {
                    let c = phi.cos();
                    if c <= 0.0 {
                        0.0
                    } else {
                        k.eval(eps * phi.tan()) * eps / (c * c)
                    }
                },
                -h,
                h,
                1e-13,
            );
            out.push(DemoCheck::close("kernel-mass", format!("p={p} eps={eps}"), mass, 1.0));
        }
    }
    Ok(())
}

fn domination(out: &mut Vec<DemoCheck>, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut violations = 0;
    for _ in 0..RANDOM_MEASURES {
        let mu = random_measure(rng)?;
        let e: f64 = rng.random_range(-10.0..10.0);
        let eps: f64 = rng.random_range(0.05..3.0);
        let p: f64 = rng.random_range(1.1..6.0);
        let shifted = mu.stieltjes(Complex64::new(e, eps), p)?;
        let centred = mu.stieltjes(Complex64::new(0.0, eps), p)?;
        if shifted > (1.0 + e.abs() / eps).powf(p) * centred * (1.0 + 1e-12) + 1e-300 {
            violations += 1;
        }
    }
    out.push(DemoCheck::count("stieltjes-domination", format!("{RANDOM_MEASURES} random measures"), violations));
    Ok(())
}

pub fn measure_demo(seed: u64) -> Result<Vec<DemoCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    shrinking_atom(&mut out)?;
    escaping_mass(&mut out)?;
    squeeze(&mut out, &mut rng)?;
    kernels(&mut out)?;
    domination(&mut out, &mut rng)?;
    Ok(out)
}
