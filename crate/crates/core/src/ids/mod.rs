//! Disorder-averaged integrated density of states on finite boxes and the
//! experiments built on it.

mod diagnostics;
mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, MagneticField};
use crate::measure::AtomicMeasure;
use crate::operator::build_hamiltonian;
use crate::potential::{EnsembleSpec, Sampler};
use crate::rng::realization_seed;
use crate::spectral::{self, Spectrum};

pub use diagnostics::{
    bc_gap, support_spectrum_check, tightness_check, truncation_sweep, BcGapRow, BcGapTable, SupportReport,
    TightnessReport, TruncationRow, TruncationTable,
};
pub use reference::{
    gaussian_tail_check, landau_check, landau_reference, landau_report, landau_spectrum, weyl_check, weyl_constant,
    GaussianTailReport, GaussianTailRow, LandauReport, WeylRow, FAITHFUL_BAND,
};

/// A per-seed count increase above this fraction of `n` inside one grid cell
/// marks a possible discontinuity of `N`.
pub const JUMP_FRACTION: f64 = 0.05;

/// Exponents fixed by the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub d: usize,
    /// Smallest integer `θ > d/4`.
    pub theta: usize,
    /// `p(d) = 2` for `d <= 3`, otherwise the smallest integer above `d/2`.
    pub p_of_d: usize,
}

impl ModelDims {
    pub fn for_dim(d: usize) -> Self {
        ModelDims { d, theta: d / 4 + 1, p_of_d: if d <= 3 { 2 } else { d / 2 + 1 } }
    }

    /// Exponent `d/2 − 2θ` of the low-energy bound `N(E) <= C |E|^{d/2−2θ}`.
    pub fn tail_exponent(&self) -> f64 {
        self.d as f64 / 2.0 - 2.0 * self.theta as f64
    }
}

/// Disorder average of `N_{Λ,X}(E)/|Λ|` on an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IDSEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Across-seed standard deviation of `N(E)/|Λ|`.
    pub std_dev: Vec<f64>,
    pub box_spec: BoxSpec,
    pub ensemble: EnsembleSpec,
    pub realizations: usize,
    pub master_seed: u64,
    /// Grid cells `[E_i, E_{i+1})` where some seed gains more than 5% of `n` states.
    pub jump_cells: Vec<usize>,
    pub warnings: Vec<String>,
}

impl IDSEstimate {
    fn index_near(&self, energy: f64) -> usize {
        self.grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
            .map_or(0, |(i, _)| i)
    }

    /// Value at the grid point nearest to `energy`.
    pub fn value_at(&self, energy: f64) -> f64 {
        self.values[self.index_near(energy)]
    }

    pub fn std_dev_at(&self, energy: f64) -> f64 {
        self.std_dev[self.index_near(energy)]
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Mean, standard error and standard deviation, summed in index order.
pub(crate) fn moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), var.sqrt())
}

/// Runs `f(index, seed)` for every realization concurrently and returns the
/// results in index order.
pub(crate) fn per_realization<T, F>(realizations: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    if realizations == 0 {
        return Err(Error::param("realizations", "need at least one realization"));
    }
    (0..realizations)
        .into_par_iter()
        .map(|i| f(i, realization_seed(master_seed, i as u64)).map_err(|e| e.in_realization(i)))
        .collect()
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "energy grid must be nonempty"));
    }
    if grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::param("grid", "energies must be finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid", "energies must be strictly ascending"));
    }
    Ok(())
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("grid", "need lo < hi and at least two points"));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + i as f64 * step }).collect())
}

/// Default grid: `points` energies spanning `[min − 1, max + 1]` of the
/// spectrum of a pilot realization.
pub fn pilot_grid(
    ensemble: &EnsembleSpec,
    bx: &BoxSpec,
    field: &MagneticField,
    master_seed: u64,
    points: usize,
) -> Result<Vec<f64>> {
    let sample = Sampler::new(ensemble, bx)?.sample(realization_seed(master_seed, 0))?;
    let spectrum = spectral::eigenvalues(&build_hamiltonian(bx, field, &sample.values)?)?;
    let (lo, hi) = (spectrum.min().unwrap_or(0.0), spectrum.max().unwrap_or(0.0));
    uniform_grid(lo - 1.0, hi + 1.0, points)
}

pub(crate) fn counts_on_grid(spectrum: &Spectrum, grid: &[f64]) -> Vec<usize> {
    grid.iter().map(|&e| spectrum.count_below(e)).collect()
}

pub(crate) fn jump_cells(per_seed: &[Vec<usize>], n: usize) -> Vec<usize> {
    let threshold = JUMP_FRACTION * n as f64;
    let cells = per_seed.first().map_or(0, |c| c.len().saturating_sub(1));
    (0..cells).filter(|&i| per_seed.iter().any(|c| (c[i + 1] - c[i]) as f64 > threshold)).collect()
}

/// Assembles an estimate from per-seed values of `N(E)/|Λ|`.
pub(crate) fn estimate_from_counts(
    per_seed: &[Vec<f64>],
    grid: &[f64],
    bx: &BoxSpec,
    ensemble: &EnsembleSpec,
    master_seed: u64,
) -> IDSEstimate {
    let m = grid.len();
    let mut values = Vec::with_capacity(m);
    let mut stderr = Vec::with_capacity(m);
    let mut std_dev = Vec::with_capacity(m);
    let mut column = vec![0.0; per_seed.len()];
    for i in 0..m {
        for (c, row) in column.iter_mut().zip(per_seed) {
            *c = row[i];
        }
        let (mean, se, sd) = moments(&column);
        values.push(mean);
        stderr.push(se);
        std_dev.push(sd);
    }
    IDSEstimate {
        grid: grid.to_vec(),
        values,
        stderr,
        std_dev,
        box_spec: bx.clone(),
        ensemble: *ensemble,
        realizations: per_seed.len(),
        master_seed,
        jump_cells: Vec::new(),
        warnings: Vec::new(),
    }
}

/// Spectrum of one realization: sample `V` with `seed`, build `H`, diagonalize.
pub fn realization_spectrum(sampler: &Sampler, field: &MagneticField, seed: u64) -> Result<Spectrum> {
    let sample = sampler.sample(seed)?;
    spectral::eigenvalues(&build_hamiltonian(sampler.box_spec(), field, &sample.values)?)
}

/// Normalized density-of-states measure `ν_{Λ,X}/|Λ|` of one spectrum.
pub fn dos_measure(spectrum: &Spectrum, bx: &BoxSpec) -> Result<AtomicMeasure> {
    AtomicMeasure::from_eigenvalues(spectrum.eigenvalues(), 1.0 / bx.volume())
}

/// Disorder-averaged `N_{Λ,X}(E)/|Λ|` with `X` the boundary condition of `bx`.
pub fn finite_volume_ids(
    ensemble: &EnsembleSpec,
    bx: &BoxSpec,
    field: &MagneticField,
    grid: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<IDSEstimate> {
    check_grid(grid)?;
    let sampler = Sampler::new(ensemble, bx)?;
    let counts = per_realization(realizations, master_seed, |_, seed| {
        Ok(counts_on_grid(&realization_spectrum(&sampler, field, seed)?, grid))
    })?;
    let volume = bx.volume();
    let scaled: Vec<Vec<f64>> = counts.iter().map(|c| c.iter().map(|&k| k as f64 / volume).collect()).collect();
    let mut est = estimate_from_counts(&scaled, grid, bx, ensemble, master_seed);
    est.jump_cells = jump_cells(&counts, bx.n_sites());
    Ok(est)
}

/// Centred sub-box with `round(fraction * L_k)` sites per axis (at least one);
/// returns the site indices of the big box that lie in the window.
pub fn window_sites(bx: &BoxSpec, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("window_fraction", "must lie in (0, 1]"));
    }
    let bounds: Vec<(usize, usize)> = bx
        .sides()
        .iter()
        .map(|&l| {
            let w = ((fraction * l as f64).round() as usize).clamp(1, l);
            let start = (l - w) / 2;
            (start, start + w)
        })
        .collect();
    Ok((0..bx.n_sites()).filter(|&i| bx.coords(i).iter().zip(&bounds).all(|(&c, &(a, b))| a <= c && c < b)).collect())
}

/// `(1/|Γ|) E Tr[χ_Γ Θ(E − H) χ_Γ]` with the window `Γ` a centred sub-box of
/// `bx`; `bx` plays the role of the infinite-volume operator.
pub fn localized_ids(
    ensemble: &EnsembleSpec,
    bx: &BoxSpec,
    window_fraction: f64,
    field: &MagneticField,
    grid: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<IDSEstimate> {
    check_grid(grid)?;
    let window = window_sites(bx, window_fraction)?;
    let whole = window.len() == bx.n_sites();
    let window_volume = window.len() as f64 * bx.cell_volume();
    let sampler = Sampler::new(ensemble, bx)?;

    let per_seed = per_realization(realizations, master_seed, |_, seed| {
        let sample = sampler.sample(seed)?;
        let op = build_hamiltonian(bx, field, &sample.values)?;
        let mut warnings = Vec::new();
        if whole {
            // χ_Γ = 1: the trace of the projector is the eigenvalue count
            let spectrum = spectral::eigenvalues(&op)?;
            let vals = grid.iter().map(|&e| spectrum.count_below(e) as f64 / window_volume).collect();
            return Ok((vals, warnings));
        }
        let eig = spectral::eigen_decomposition(&op)?;
        let spectrum = &eig.spectrum;
        // local weight of every eigenvector on the window
        let weights: Vec<f64> = (0..spectrum.source_dim())
            .map(|k| {
                let col = eig.vectors.col(k);
                window.iter().map(|&x| col[x].norm_sqr()).sum()
            })
            .collect();
        let guard_shift = 1e-9 * spectral::norm_proxy(op.matrix());
        let mut vals = Vec::with_capacity(grid.len());
        for &e in grid {
            let energy = match spectral::check_separation(spectrum, e) {
                Ok(()) => e,
                Err(Error::NearEigenvalue { .. }) => {
                    let shifted = e + guard_shift;
                    spectral::check_separation(spectrum, shifted)?;
                    warnings.push(format!("energy {e} perturbed to {shifted} (near an eigenvalue)"));
                    shifted
                }
                Err(other) => return Err(other),
            };
            let k = spectrum.eigenvalues().partition_point(|&l| l < energy);
            vals.push(weights[..k].iter().sum::<f64>() / window_volume);
        }
        Ok((vals, warnings))
    })?;

    let rows: Vec<Vec<f64>> = per_seed.iter().map(|(v, _)| v.clone()).collect();
    let mut est = estimate_from_counts(&rows, grid, bx, ensemble, master_seed);
    est.warnings = per_seed
        .into_iter()
        .enumerate()
        .flat_map(|(i, (_, w))| w.into_iter().map(move |m| format!("realization {i}: {m}")))
        .collect();
    Ok(est)
}
