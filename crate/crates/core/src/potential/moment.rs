//! Local moment bound for convolution-type potentials `V = ∫ μ(dy) u(· − y)`.
//!
//! `E[(∫_{Λ(0)} |V|^q)^{r/q}]^{1/r} <= 3^{d/q} sup_l E[|μ|(Λ(l))^r]^{1/r} Σ_k (∫_{Λ(k)} |u|^q)^{1/q}`
//! with `Λ(k)` the open unit cube centred at `k ∈ Z^d`.

use serde::{Deserialize, Serialize};

use super::{poisson_points, EnsembleSpec, Profile};
use crate::error::{Error, Result};
use crate::rng::{realization_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub q: f64,
    pub r: f64,
    pub samples: usize,
    pub lhs_estimate: f64,
    pub lhs_stderr: f64,
    pub rhs_bound: f64,
    /// Smallest integer `θ > d/4`.
    pub theta_used: u32,
    /// `lhs − 3 stderr > rhs`.
    pub violated: bool,
}

/// `E[N^r]` for `N ~ Poisson(ρ)`, by direct summation.
pub fn poisson_raw_moment(rho: f64, r: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut log_p = -rho;
    let mut n = 0u64;
    loop {
        if n > 0 {
            log_p += rho.ln() - (n as f64).ln();
            let term = (r * (n as f64).ln() + log_p).exp();
            total += term;
            if n as f64 > rho && term < 1e-17 * total {
                break;
            }
        }
        n += 1;
    }
    total
}

fn quadrature_points_per_axis(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 32,
        _ => 12,
    }
}

/// Midpoint nodes of the unit cube centred at `centre`.
fn cube_nodes(centre: &[f64], m: usize) -> Vec<Vec<f64>> {
    let d = centre.len();
    let total = m.pow(d as u32);
    (0..total)
        .map(|mut i| {
            (0..d)
                .map(|k| {
                    let c = i % m;
                    i /= m;
                    centre[k] - 0.5 + (c as f64 + 0.5) / m as f64
                })
                .collect()
        })
        .collect()
}

fn integer_cube(dim: usize, extent: i64) -> Vec<Vec<f64>> {
    let side = (2 * extent + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut i| {
            (0..dim)
                .map(|_| {
                    let c = (i % side) as i64 - extent;
                    i /= side;
                    c as f64
                })
                .collect()
        })
        .collect()
}

fn offset(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// `Σ_k (∫_{Λ(k)} |u|^q)^{1/q}`.
fn profile_norm_sum(profile: &Profile, dim: usize, q: f64) -> f64 {
    let m = quadrature_points_per_axis(dim);
    let cell = 1.0 / m.pow(dim as u32) as f64;
    let extent = (profile.reach() + 0.5).ceil() as i64;
    integer_cube(dim, extent)
        .iter()
        .map(|k| {
            let integral: f64 = cube_nodes(k, m).iter().map(|x| profile.value(x).abs().powf(q)).sum::<f64>() * cell;
            integral.powf(1.0 / q)
        })
        .sum()
}

/// `(∫_{Λ(0)} |V|^q)` for one realization of the measure near the origin.
fn local_norm(atoms: &[(Vec<f64>, f64)], profile: &Profile, nodes: &[Vec<f64>], q: f64) -> f64 {
    let cell = 1.0 / nodes.len() as f64;
    nodes
        .iter()
        .map(|x| {
            let v: f64 = atoms.iter().map(|(y, w)| w * profile.value(&offset(x, y))).sum();
            v.abs().powf(q)
        })
        .sum::<f64>()
        * cell
}

fn local_atoms(spec: &EnsembleSpec, dim: usize, rng: &mut Rng) -> Result<Vec<(Vec<f64>, f64)>> {
    match spec {
        EnsembleSpec::Alloy { profile, coupling } => {
            let extent = (profile.reach() + 0.5).ceil() as i64;
            Ok(integer_cube(dim, extent).into_iter().map(|j| (j, coupling.sample(rng))).collect())
        }
        EnsembleSpec::Poisson { profile, intensity } => {
            let reach = profile.reach() + 0.5;
            let lower = vec![-reach; dim];
            let upper = vec![reach; dim];
            Ok(poisson_points(*intensity, &lower, &upper, rng)?.into_iter().map(|p| (p, 1.0)).collect())
        }
        EnsembleSpec::Gaussian { .. } => unreachable!("rejected by caller"),
    }
}

fn measure_moment(spec: &EnsembleSpec, r: f64) -> f64 {
    match spec {
        EnsembleSpec::Alloy { coupling, .. } => coupling.abs_moment(r),
        EnsembleSpec::Poisson { intensity, .. } => poisson_raw_moment(*intensity, r),
        EnsembleSpec::Gaussian { .. } => unreachable!("rejected by caller"),
    }
}

pub fn check_moment_bound(
    spec: &EnsembleSpec,
    dim: usize,
    q: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    if let EnsembleSpec::Gaussian { .. } = spec {
        return Err(Error::UnsupportedEnsemble {
            kind: "gaussian",
            reason: "the moment bound needs a convolution of a random measure with a profile".into(),
        });
    }
    spec.validate()?;
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::param("q", "must be a finite real >= 1"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::param("r", "must be a finite real >= 1"));
    }
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2 samples"));
    }
    let profile = match spec {
        EnsembleSpec::Alloy { profile, .. } | EnsembleSpec::Poisson { profile, .. } => profile,
        EnsembleSpec::Gaussian { .. } => unreachable!(),
    };

    let nodes = cube_nodes(&vec![0.0; dim], quadrature_points_per_axis(dim));
    let values: Vec<f64> = (0..samples)
        .map(|s| {
            let mut rng = realization_rng(seed, s as u64);
            let atoms = local_atoms(spec, dim, &mut rng)?;
            Ok(local_norm(&atoms, profile, &nodes, q).powf(r / q))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let lhs_estimate = mean.powf(1.0 / r);
    // delta method for mean^{1/r}
    let lhs_stderr = if mean > 0.0 { (var / n).sqrt() * mean.powf(1.0 / r - 1.0) / r } else { 0.0 };
    let rhs_bound =
        3f64.powf(dim as f64 / q) * measure_moment(spec, r).powf(1.0 / r) * profile_norm_sum(profile, dim, q);
    Ok(MomentReport {
        q,
        r,
        samples,
        lhs_estimate,
        lhs_stderr,
        rhs_bound,
        theta_used: (dim / 4) as u32 + 1,
        violated: lhs_estimate - 3.0 * lhs_stderr > rhs_bound,
    })
}
