//! Boundary-condition gap, truncation sweep, tightness profile and the
//! support/spectrum consistency check.

use serde::{Deserialize, Serialize};

use super::{check_grid, counts_on_grid, estimate_from_counts, moments, per_realization, IDSEstimate, ModelDims};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, BoxSpec, MagneticField};
use crate::measure::smoothed_indicator;
use crate::operator::build_hamiltonian;
use crate::potential::{truncate, EnsembleSpec, Sampler};
use crate::spectral::{self, Spectrum, TIE_TOLERANCE};

/// `(1/|Λ|) Σ_λ f_E(λ)` for every grid energy, `f_E` the Cauchy-smoothed ramp indicator.
fn smoothed_functionals(spectrum: &Spectrum, grid: &[f64], eps: f64, volume: f64) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&e| {
            let f = smoothed_indicator(e, eps)?;
            Ok(spectrum.eigenvalues().iter().map(|&l| f(l)).sum::<f64>() / volume)
        })
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param("smoothing_eps", "must be positive and finite"))
    }
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.first().map_or(0, Vec::len);
    (0..m).map(|i| moments(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()).0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcGapRow {
    pub sides: Vec<usize>,
    pub volume: f64,
    /// `sup_E |N_N(E) − N_D(E)| / |Λ|` of the disorder means.
    pub sup_gap: f64,
    /// `sup_E |∫ (ν_N − ν_D)(dλ) f_E(λ)| / |Λ|` of the disorder means.
    pub smoothed_gap: f64,
    /// Number of (seed, E) pairs with `N_D(E) > N_N(E)`.
    pub sandwich_violations: usize,
    pub dirichlet: IDSEstimate,
    pub neumann: IDSEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcGapTable {
    pub rows: Vec<BcGapRow>,
    pub smoothing_eps: f64,
}

impl BcGapTable {
    pub fn sup_gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup_gap).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap)
    }

    pub fn total_sandwich_violations(&self) -> usize {
        self.rows.iter().map(|r| r.sandwich_violations).sum()
    }
}

/// Dirichlet versus Neumann IDS on increasing boxes, with the same potential
/// samples for both boundary conditions.
pub fn bc_gap(
    ensemble: &EnsembleSpec,
    boxes: &[BoxSpec],
    field: &MagneticField,
    grid: &[f64],
    realizations: usize,
    master_seed: u64,
    smoothing_eps: f64,
) -> Result<BcGapTable> {
    check_grid(grid)?;
    check_eps(smoothing_eps)?;
    if boxes.is_empty() {
        return Err(Error::param("boxes", "need at least one box"));
    }
    if boxes.windows(2).any(|w| w[0].n_sites() >= w[1].n_sites()) {
        return Err(Error::param("boxes", "boxes must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(boxes.len());
    for bx in boxes {
        let dir = bx.with_bc(BoundaryCondition::Dirichlet);
        let neu = bx.with_bc(BoundaryCondition::Neumann);
        let sampler = Sampler::new(ensemble, &dir)?;
        let volume = bx.volume();
        let per_seed = per_realization(realizations, master_seed, |_, seed| {
            let v = sampler.sample(seed)?.values;
            let sd = spectral::eigenvalues(&build_hamiltonian(&dir, field, &v)?)?;
            let sn = spectral::eigenvalues(&build_hamiltonian(&neu, field, &v)?)?;
            let cd = counts_on_grid(&sd, grid);
            let cn = counts_on_grid(&sn, grid);
            let fd = smoothed_functionals(&sd, grid, smoothing_eps, volume)?;
            let fn_ = smoothed_functionals(&sn, grid, smoothing_eps, volume)?;
            Ok((cd, cn, fd, fn_))
        })?;

        let violations = per_seed.iter().map(|(cd, cn, _, _)| cd.iter().zip(cn).filter(|(d, n)| d > n).count()).sum();
        let scale = |c: &Vec<usize>| c.iter().map(|&k| k as f64 / volume).collect::<Vec<f64>>();
        let d_rows: Vec<Vec<f64>> = per_seed.iter().map(|p| scale(&p.0)).collect();
        let n_rows: Vec<Vec<f64>> = per_seed.iter().map(|p| scale(&p.1)).collect();
        let dirichlet = estimate_from_counts(&d_rows, grid, &dir, ensemble, master_seed);
        let neumann = estimate_from_counts(&n_rows, grid, &neu, ensemble, master_seed);
        let sup_gap = dirichlet.values.iter().zip(&neumann.values).fold(0.0f64, |m, (d, n)| m.max((n - d).abs()));
        let fd = column_means(&per_seed.iter().map(|p| p.2.clone()).collect::<Vec<_>>());
        let fnn = column_means(&per_seed.iter().map(|p| p.3.clone()).collect::<Vec<_>>());
        let smoothed_gap = fd.iter().zip(&fnn).fold(0.0f64, |m, (d, n)| m.max((n - d).abs()));
        rows.push(BcGapRow {
            sides: bx.sides().to_vec(),
            volume,
            sup_gap,
            smoothed_gap,
            sandwich_violations: violations,
            dirichlet,
            neumann,
        });
    }
    Ok(BcGapTable { rows, smoothing_eps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub level: f64,
    /// `sup_E E_ω |N(E; V_n) − N(E; V)| / |Λ|`.
    pub sup_deviation: f64,
    /// Same with the smoothed indicator in place of the sharp count.
    pub smoothed_deviation: f64,
    /// `level` exceeds the largest `|V|` seen in any realization.
    pub exceeds_max: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationTable {
    pub rows: Vec<TruncationRow>,
    pub max_abs_potential: f64,
    pub realizations: usize,
}

impl TruncationTable {
    /// Strictly decreasing in the level until it reaches zero, zero afterwards.
    pub fn decreasing_to_zero(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].sup_deviation < w[0].sup_deviation || (w[0].sup_deviation == 0.0 && w[1].sup_deviation == 0.0)
        })
    }

    /// Levels above the realized maximum must give exactly zero deviation.
    pub fn zero_above_max(&self) -> bool {
        self.rows.iter().filter(|r| r.exceeds_max).all(|r| r.sup_deviation == 0.0 && r.smoothed_deviation == 0.0)
    }
}

/// Deviation of the IDS under `V ↦ V_n` for each truncation height, reusing
/// the same samples across levels.
#[allow(clippy::too_many_arguments)]
pub fn truncation_sweep(
    ensemble: &EnsembleSpec,
    bx: &BoxSpec,
    field: &MagneticField,
    grid: &[f64],
    levels: &[f64],
    realizations: usize,
    master_seed: u64,
    smoothing_eps: f64,
) -> Result<TruncationTable> {
    check_grid(grid)?;
    check_eps(smoothing_eps)?;
    if levels.is_empty() || levels.iter().any(|&n| !(n > 0.0)) {
        return Err(Error::param("levels", "need positive truncation heights"));
    }
    let sampler = Sampler::new(ensemble, bx)?;
    let volume = bx.volume();
    // per seed: max |V|, per level (count deviations, smoothed deviations)
    let per_seed = per_realization(realizations, master_seed, |_, seed| {
        let sample = sampler.sample(seed)?;
        let full = spectral::eigenvalues(&build_hamiltonian(bx, field, &sample.values)?)?;
        let c_full = counts_on_grid(&full, grid);
        let f_full = smoothed_functionals(&full, grid, smoothing_eps, volume)?;
        let mut out = Vec::with_capacity(levels.len());
        for &n in levels {
            let cut = truncate(&sample, n)?;
            if cut.values == sample.values {
                out.push((vec![0.0; grid.len()], vec![0.0; grid.len()]));
                continue;
            }
            let s = spectral::eigenvalues(&build_hamiltonian(bx, field, &cut.values)?)?;
            let dc = counts_on_grid(&s, grid)
                .iter()
                .zip(&c_full)
                .map(|(&a, &b)| (a as f64 - b as f64).abs() / volume)
                .collect();
            let df = smoothed_functionals(&s, grid, smoothing_eps, volume)?
                .iter()
                .zip(&f_full)
                .map(|(a, b)| (a - b).abs())
                .collect();
            out.push((dc, df));
        }
        Ok((sample.max_abs(), out))
    })?;

    let max_abs_potential = per_seed.iter().fold(0.0f64, |m, p| m.max(p.0));
    let rows = levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let dc = column_means(&per_seed.iter().map(|p| p.1[li].0.clone()).collect::<Vec<_>>());
            let df = column_means(&per_seed.iter().map(|p| p.1[li].1.clone()).collect::<Vec<_>>());
            TruncationRow {
                level,
                sup_deviation: dc.iter().fold(0.0, |m: f64, &x| m.max(x)),
                smoothed_deviation: df.iter().fold(0.0, |m: f64, &x| m.max(x)),
                exceeds_max: level > max_abs_potential,
            }
        })
        .collect();
    Ok(TruncationTable { rows, max_abs_potential, realizations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub energies: Vec<f64>,
    /// Across-volume maximum of `N(E)/|Λ|` at each energy.
    pub max_values: Vec<f64>,
    /// Least-squares slope of `log N` against `log |E|`, if two or more
    /// energies have positive values.
    pub fitted_slope: Option<f64>,
    /// Bound exponent `d/2 − 2θ`.
    pub bound_exponent: f64,
    /// Energies left out of the fit because every volume gave zero.
    pub excluded: Vec<f64>,
}

/// Low-energy profile of a volume sequence of estimates. Every energy must be
/// strictly negative and present on the grid of every estimate.
pub fn tightness_check(estimates: &[IDSEstimate], energies: &[f64]) -> Result<TightnessReport> {
    let Some(first) = estimates.first() else {
        return Err(Error::param("estimates", "need at least one estimate"));
    };
    if energies.is_empty() || energies.iter().any(|&e| !(e < 0.0)) {
        return Err(Error::param("energies", "tightness energies must be strictly negative"));
    }
    let dims = ModelDims::for_dim(first.box_spec.dim());
    let mut max_values = Vec::with_capacity(energies.len());
    for &e in energies {
        let mut m = 0.0f64;
        for est in estimates {
            let i = est
                .grid
                .iter()
                .position(|&g| g == e)
                .ok_or_else(|| Error::param("energies", format!("energy {e} is not on an estimate grid")))?;
            m = m.max(est.values[i]);
        }
        max_values.push(m);
    }
    let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (&e, &v) in energies.iter().zip(&max_values) {
        if v > 0.0 {
            xs.push(e.abs().ln());
            ys.push(v.ln());
        } else {
            excluded.push(e);
        }
    }
    Ok(TightnessReport {
        energies: energies.to_vec(),
        max_values,
        fitted_slope: least_squares_slope(&xs, &ys),
        bound_exponent: dims.tail_exponent(),
        excluded,
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub realizations: usize,
    /// Eigenvalues (over all realizations) that fall in a grid cell where the
    /// averaged `N` is flat.
    pub eigenvalues_in_flat_cells: usize,
    /// Grid cells where the averaged `N` grows although no eigenvalue of any
    /// realization falls inside.
    pub growth_without_eigenvalues: usize,
    /// Eigenvalues outside the grid range (cannot be checked).
    pub outside_grid: usize,
    /// Flat cells between the lowest and highest eigenvalue: spectral gaps
    /// common to all realizations, up to grid resolution.
    pub common_gaps: Vec<(f64, f64)>,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
}

impl SupportReport {
    pub fn consistent(&self) -> bool {
        self.eigenvalues_in_flat_cells == 0 && self.growth_without_eigenvalues == 0
    }
}

/// Compares where the averaged IDS grows with the union of the per-realization
/// spectra. Cells are `[E_i, E_{i+1})` with the same tie convention as counting.
pub fn support_spectrum_check(
    ensemble: &EnsembleSpec,
    bx: &BoxSpec,
    field: &MagneticField,
    grid: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<SupportReport> {
    check_grid(grid)?;
    if grid.len() < 2 {
        return Err(Error::param("grid", "need at least two energies"));
    }
    let sampler = Sampler::new(ensemble, bx)?;
    let spectra =
        per_realization(realizations, master_seed, |_, seed| super::realization_spectrum(&sampler, field, seed))?;
    let volume = bx.volume();
    let rows: Vec<Vec<f64>> =
        spectra.iter().map(|s| counts_on_grid(s, grid).iter().map(|&k| k as f64 / volume).collect()).collect();
    let avg = estimate_from_counts(&rows, grid, bx, ensemble, master_seed).values;
    let cells = grid.len() - 1;
    let growing: Vec<bool> = (0..cells).map(|i| avg[i + 1] > avg[i]).collect();
    let mut occupied = vec![false; cells];
    let (mut in_flat, mut outside) = (0, 0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &spectra {
        let tol = TIE_TOLERANCE * s.scale();
        for &l in s.eigenvalues() {
            lo = lo.min(l);
            hi = hi.max(l);
            // first grid point at which λ is counted
            let first = grid.partition_point(|&g| l >= g - tol);
            if first == 0 || first > cells {
                outside += 1;
                continue;
            }
            let cell = first - 1;
            occupied[cell] = true;
            if !growing[cell] {
                in_flat += 1;
            }
        }
    }
    let growth_without = (0..cells).filter(|&i| growing[i] && !occupied[i]).count();
    let common_gaps = (0..cells)
        .filter(|&i| !growing[i] && grid[i] > lo && grid[i + 1] < hi)
        .map(|i| (grid[i], grid[i + 1]))
        .collect();
    Ok(SupportReport {
        realizations,
        eigenvalues_in_flat_cells: in_flat,
        growth_without_eigenvalues: growth_without,
        outside_grid: outside,
        common_gaps,
        spectrum_min: lo,
        spectrum_max: hi,
    })
}
