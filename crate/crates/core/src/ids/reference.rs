//! Comparisons with closed-form asymptotics: Weyl law, Gaussian low-energy
//! tail, Landau levels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{moments, per_realization};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, BoxSpec, MagneticField};
use crate::operator::{build_hamiltonian, HermitianOperator};
use crate::potential::{Covariance, EnsembleSpec, Sampler};
use crate::spectral::{self, Spectrum};

/// Energies up to this multiple of `1/h²` count as resolved by the lattice.
pub const FAITHFUL_BAND: f64 = 0.2;

/// `1 / (Γ(d/2 + 1) (2π)^{d/2})`.
pub fn weyl_constant(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    1.0 / (gamma(half + 1.0) * (2.0 * PI).powf(half))
}

/// Inertia count below `energy`, retried once at the suggested shift when a
/// pivot is too small. Returns the count and whether the shift was used.
fn robust_count(op: &HermitianOperator, energy: f64) -> Result<(usize, bool)> {
    match spectral::count_below_inertia(op, energy) {
        Ok(k) => Ok((k, false)),
        Err(Error::NearSingularPivot { suggested_shift, .. }) => {
            Ok((spectral::count_below_inertia(op, energy + suggested_shift)?, true))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRow {
    pub spacing: f64,
    pub sides: Vec<usize>,
    pub energy: f64,
    pub dirichlet_count: usize,
    pub neumann_count: usize,
    /// `E^{−d/2} (N_D + N_N) / (2|Λ|)`.
    pub measured: f64,
    pub reference: f64,
    pub ratio: f64,
    /// `E ≤ 0.2/h²`.
    pub faithful: bool,
    pub shifted: bool,
}

/// Free operator counts on a cube of physical side `side_length` for every
/// spacing and energy, averaged over Dirichlet and Neumann.
pub fn weyl_check(dim: usize, side_length: f64, spacings: &[f64], energies: &[f64]) -> Result<Vec<WeylRow>> {
    if !(side_length > 0.0 && side_length.is_finite()) {
        return Err(Error::param("side_length", "must be positive"));
    }
    if energies.is_empty() || energies.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::param("energies", "Weyl energies must be positive"));
    }
    if spacings.is_empty() {
        return Err(Error::param("spacings", "need at least one spacing"));
    }
    let reference = weyl_constant(dim);
    let field = MagneticField::zero(dim);
    let mut rows = Vec::new();
    for &h in spacings {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("spacings", "must be positive"));
        }
        let side = (side_length / h).round().max(1.0) as usize;
        let dir = BoxSpec::cube(dim, side, h, BoundaryCondition::Dirichlet)?;
        let neu = dir.with_bc(BoundaryCondition::Neumann);
        let zero = vec![0.0; dir.n_sites()];
        let hd = build_hamiltonian(&dir, &field, &zero)?;
        let hn = build_hamiltonian(&neu, &field, &zero)?;
        for &e in energies {
            let (cd, sd) = robust_count(&hd, e)?;
            let (cn, sn) = robust_count(&hn, e)?;
            let measured = (cd + cn) as f64 / (2.0 * dir.volume()) / e.powf(dim as f64 / 2.0);
            rows.push(WeylRow {
                spacing: h,
                sides: dir.sides().to_vec(),
                energy: e,
                dirichlet_count: cd,
                neumann_count: cn,
                measured,
                reference,
                ratio: measured / reference,
                faithful: e <= FAITHFUL_BAND / (h * h),
                shifted: sd || sn,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTailRow {
    pub energy: f64,
    /// Disorder mean of `N(E)/|Λ|`.
    pub mean_density: f64,
    pub stderr: f64,
    /// Realizations with at least one state below `E`.
    pub occupied_realizations: usize,
    /// `E^{−2} log(mean N/|Λ|)`.
    pub measured: f64,
    /// `measured` evaluated at `mean ± stderr`, when both are positive.
    pub measured_range: Option<(f64, f64)>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTailReport {
    pub rows: Vec<GaussianTailRow>,
    /// Energies with zero counts in every realization.
    pub excluded: Vec<f64>,
    pub variance: f64,
    /// `−1/(2 C(0))`.
    pub reference: f64,
    pub realizations: usize,
    pub box_spec: BoxSpec,
}

impl GaussianTailReport {
    pub fn row(&self, energy: f64) -> Option<&GaussianTailRow> {
        self.rows.iter().find(|r| r.energy == energy)
    }
}

/// Low-energy counts of a Gaussian ensemble by inertia. Energies at or below
/// `min V` give zero without factorization since the kinetic part is
/// nonnegative.
pub fn gaussian_tail_check(
    covariance: &Covariance,
    bx: &BoxSpec,
    field: &MagneticField,
    energies: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<GaussianTailReport> {
    if energies.is_empty() || energies.iter().any(|&e| !(e < 0.0 && e.is_finite())) {
        return Err(Error::param("energies", "tail energies must be strictly negative"));
    }
    let ensemble = EnsembleSpec::Gaussian { covariance: *covariance };
    let sampler = Sampler::new(&ensemble, bx)?;
    let per_seed = per_realization(realizations, master_seed, |_, seed| {
        let v = sampler.sample(seed)?.values;
        let min_v = v.iter().copied().fold(f64::INFINITY, f64::min);
        if energies.iter().all(|&e| e <= min_v) {
            return Ok(vec![0usize; energies.len()]);
        }
        let op = build_hamiltonian(bx, field, &v)?;
        energies
            .iter()
            .map(|&e| if e <= min_v { Ok(0) } else { robust_count(&op, e).map(|c| c.0) })
            .collect::<Result<Vec<usize>>>()
    })?;
    let volume = bx.volume();
    let reference = -1.0 / (2.0 * covariance.variance());
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (i, &e) in energies.iter().enumerate() {
        let column: Vec<f64> = per_seed.iter().map(|c| c[i] as f64 / volume).collect();
        let occupied = per_seed.iter().filter(|c| c[i] > 0).count();
        if occupied == 0 {
            excluded.push(e);
            continue;
        }
        let (mean, se, _) = moments(&column);
        let measured = mean.ln() / (e * e);
        let measured_range = (mean - se > 0.0).then(|| ((mean - se).ln() / (e * e), (mean + se).ln() / (e * e)));
        rows.push(GaussianTailRow {
            energy: e,
            mean_density: mean,
            stderr: se,
            occupied_realizations: occupied,
            measured,
            measured_range,
            ratio: measured / reference,
        });
    }
    Ok(GaussianTailReport {
        rows,
        excluded,
        variance: covariance.variance(),
        reference,
        realizations,
        box_spec: bx.clone(),
    })
}

/// Continuum Landau IDS `(B/2π) #{k ≥ 0 : B(k + 1/2) ≤ E}`.
pub fn landau_reference(b: f64, energy: f64) -> f64 {
    if !(b > 0.0) || energy < b / 2.0 {
        return 0.0;
    }
    let levels = ((energy / b - 0.5).floor() + 1.0).max(0.0);
    b / (2.0 * PI) * levels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandauReport {
    pub field_strength: f64,
    pub sides: Vec<usize>,
    pub spacing: f64,
    pub volume: f64,
    /// Eigenvalues below `B`, the lowest Landau cluster.
    pub cluster_count: usize,
    /// `B |Λ| / 2π`.
    pub expected_count: f64,
    pub relative_error: f64,
    pub cluster_mean: f64,
    pub cluster_spread: f64,
    /// First eigenvalue above the cluster.
    pub next_level: Option<f64>,
    /// `landau_reference(B, B) |Λ|`, the height of the first step in states.
    pub reference_step: f64,
}

/// Spectrum of the free magnetic operator on a 2D torus with planar field `b`.
pub fn landau_spectrum(bx: &BoxSpec, b: f64) -> Result<Spectrum> {
    if bx.dim() != 2 || bx.bc() != BoundaryCondition::Periodic {
        return Err(Error::param("box", "Landau check needs a 2D periodic box"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::param("field", "must be positive"));
    }
    let field = MagneticField::planar(2, b)?;
    spectral::eigenvalues(&build_hamiltonian(bx, &field, &vec![0.0; bx.n_sites()])?)
}

/// Population of the lowest cluster of a spectrum from [`landau_spectrum`].
pub fn landau_report(bx: &BoxSpec, b: f64, spectrum: &Spectrum) -> LandauReport {
    let values = spectrum.eigenvalues();
    let cluster: Vec<f64> = values.iter().copied().filter(|&l| l < b).collect();
    let (cluster_mean, _, cluster_spread) = if cluster.is_empty() { (f64::NAN, 0.0, 0.0) } else { moments(&cluster) };
    let volume = bx.volume();
    let expected_count = b * volume / (2.0 * PI);
    LandauReport {
        field_strength: b,
        sides: bx.sides().to_vec(),
        spacing: bx.spacing(),
        volume,
        cluster_count: cluster.len(),
        expected_count,
        relative_error: (cluster.len() as f64 - expected_count).abs() / expected_count,
        cluster_mean,
        cluster_spread,
        next_level: values.get(cluster.len()).copied(),
        reference_step: landau_reference(b, b) * volume,
    }
}

pub fn landau_check(bx: &BoxSpec, b: f64) -> Result<LandauReport> {
    Ok(landau_report(bx, b, &landau_spectrum(bx, b)?))
}
