//! Dense Hermitian eigensolver, eigenvalue counting and matrix functions.
//!
//! Everything here works on full spectra of dense matrices. Complex input
//! whose imaginary parts all vanish (zero field) is routed through a real
//! symmetric path with identical arithmetic structure.

mod dense;
mod inertia;
mod scalar;
mod tridiag;

pub use dense::{CMatrix, DenseMatrix, RMatrix};
pub use scalar::Scalar;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

/// Relative tie tolerance used when counting eigenvalues against an energy.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Sorted eigenvalues of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    scale: f64,
    residual_bound: Option<f64>,
}

impl Spectrum {
    /// Wraps an already known list of eigenvalues; the counting scale is the
    /// largest eigenvalue magnitude.
    pub fn from_values(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let scale = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Spectrum { eigenvalues, scale, residual_bound: None }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn into_eigenvalues(self) -> Vec<f64> {
        self.eigenvalues
    }

    pub fn source_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Norm proxy of the source matrix (`n * max |entry|`).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `max ||H v - λ v|| / ||H||` over the checked eigenpairs, when
    /// eigenvectors were computed.
    pub fn residual_bound(&self) -> Option<f64> {
        self.residual_bound
    }

    pub fn min(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Number of eigenvalues strictly below `energy`. Eigenvalues within
    /// `1e-12 * scale` of `energy` do not count.
    pub fn count_below(&self, energy: f64) -> usize {
        let cut = energy - TIE_TOLERANCE * self.scale;
        self.eigenvalues.partition_point(|&l| l < cut)
    }
}

pub fn count_below(spectrum: &Spectrum, energy: f64) -> usize {
    spectrum.count_below(energy)
}

/// Eigenvalues together with orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    pub vectors: CMatrix,
}

/// `n * max |a_ij|`, the norm proxy used for all relative tolerances.
pub fn norm_proxy(matrix: &CMatrix) -> f64 {
    matrix.rows() as f64 * matrix.max_abs()
}

fn check_input(matrix: &CMatrix) -> Result<()> {
    if !matrix.is_square() || matrix.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    for j in 0..matrix.cols() {
        if let Some(i) = matrix.col(j).iter().position(|z| !Scalar::is_finite(*z)) {
            return Err(Error::NonFiniteMatrix { row: i, col: j });
        }
    }
    Ok(())
}

fn solve<T: Scalar>(a: DenseMatrix<T>, with_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix<T>>)> {
    let t = tridiag::tridiagonalize(a);
    if with_vectors {
        let mut q = t.form_q();
        let vals = tridiag::tql(t.diag, t.off, Some(&mut q))?;
        Ok((vals, Some(q)))
    } else {
        let vals = tridiag::tql::<T>(t.diag, t.off, None)?;
        Ok((vals, None))
    }
}

/// Full spectrum of a Hermitian matrix (only the lower triangle is read).
pub fn eigenvalues_of(matrix: &CMatrix) -> Result<Spectrum> {
    check_input(matrix)?;
    let scale = norm_proxy(matrix);
    let vals = match matrix.to_real_if_real() {
        Some(real) => solve(real, false)?.0,
        None => solve(matrix.clone(), false)?.0,
    };
    Ok(Spectrum { eigenvalues: vals, scale, residual_bound: None })
}

pub fn eigenvalues(op: &HermitianOperator) -> Result<Spectrum> {
    eigenvalues_of(op.matrix())
}

const RESIDUAL_CHECKS: usize = 16;

pub fn eigen_decomposition_of(matrix: &CMatrix) -> Result<EigenDecomposition> {
    check_input(matrix)?;
    let scale = norm_proxy(matrix);
    let (vals, vectors) = match matrix.to_real_if_real() {
        Some(real) => {
            let (v, z) = solve(real, true)?;
            (v, z.expect("vectors requested").to_complex())
        }
        None => {
            let (v, z) = solve(matrix.clone(), true)?;
            (v, z.expect("vectors requested"))
        }
    };
    let n = vals.len();
    let step = (n / RESIDUAL_CHECKS).max(1);
    let mut worst: f64 = 0.0;
    for k in (0..n).step_by(step).chain(std::iter::once(n - 1)) {
        let hv = matrix.mat_vec(vectors.col(k));
        let r = hv.iter().zip(vectors.col(k)).map(|(a, v)| (a - v * vals[k]).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    let residual = if scale > 0.0 { worst / scale } else { worst };
    Ok(EigenDecomposition { spectrum: Spectrum { eigenvalues: vals, scale, residual_bound: Some(residual) }, vectors })
}

pub fn eigen_decomposition(op: &HermitianOperator) -> Result<EigenDecomposition> {
    eigen_decomposition_of(op.matrix())
}

/// Number of eigenvalues below `energy` from the inertia of `H - E`, without
/// computing the spectrum.
pub fn count_below_inertia_of(matrix: &CMatrix, energy: f64) -> Result<usize> {
    check_input(matrix)?;
    let scale = norm_proxy(matrix);
    let tol = TIE_TOLERANCE * scale.max(energy.abs());
    let n = matrix.rows();
    let result = match matrix.to_real_if_real() {
        Some(mut real) => {
            for i in 0..n {
                real[(i, i)] -= energy;
            }
            inertia::inertia(real, tol)
        }
        None => {
            let mut shifted = matrix.clone();
            for i in 0..n {
                shifted[(i, i)] -= Complex64::new(energy, 0.0);
            }
            inertia::inertia(shifted, tol)
        }
    };
    match result {
        Some(i) => Ok(i.negative),
        None => Err(Error::NearSingularPivot { energy, suggested_shift: 1e-10 * scale.max(f64::MIN_POSITIVE) }),
    }
}

pub fn count_below_inertia(op: &HermitianOperator, energy: f64) -> Result<usize> {
    count_below_inertia_of(op.matrix(), energy)
}

fn weighted_outer(vectors: &CMatrix, weights: &[f64]) -> CMatrix {
    let n = vectors.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = vectors.col(k);
        for j in 0..n {
            let vj = v[j].conj() * w;
            if vj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = out.col_mut(j);
            for (o, vi) in col.iter_mut().zip(v) {
                *o += vi * vj;
            }
        }
    }
    out
}

/// `exp(-t H)` through the eigendecomposition.
pub fn heat_kernel_of(matrix: &CMatrix, t: f64) -> Result<CMatrix> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    let eig = eigen_decomposition_of(matrix)?;
    let weights: Vec<f64> = eig.spectrum.eigenvalues().iter().map(|l| (-t * l).exp()).collect();
    Ok(weighted_outer(&eig.vectors, &weights))
}

pub fn heat_kernel(op: &HermitianOperator, t: f64) -> Result<CMatrix> {
    heat_kernel_of(op.matrix(), t)
}

/// Checks that `energy` is separated from every eigenvalue by more than
/// `1e-12 * scale`.
pub fn check_separation(spectrum: &Spectrum, energy: f64) -> Result<()> {
    let guard = TIE_TOLERANCE * spectrum.scale();
    let vals = spectrum.eigenvalues();
    let idx = vals.partition_point(|&l| l < energy);
    let mut distance = f64::INFINITY;
    if idx < vals.len() {
        distance = distance.min((vals[idx] - energy).abs());
    }
    if idx > 0 {
        distance = distance.min((energy - vals[idx - 1]).abs());
    }
    if distance <= guard {
        return Err(Error::NearEigenvalue { energy, distance, guard });
    }
    Ok(())
}

/// Spectral projector `Θ(E - H)` onto eigenvalues strictly below `energy`.
pub fn spectral_projector_of(matrix: &CMatrix, energy: f64) -> Result<CMatrix> {
    let eig = eigen_decomposition_of(matrix)?;
    check_separation(&eig.spectrum, energy)?;
    let weights: Vec<f64> = eig.spectrum.eigenvalues().iter().map(|&l| if l < energy { 1.0 } else { 0.0 }).collect();
    Ok(weighted_outer(&eig.vectors, &weights))
}

pub fn spectral_projector(op: &HermitianOperator, energy: f64) -> Result<CMatrix> {
    spectral_projector_of(op.matrix(), energy)
}
