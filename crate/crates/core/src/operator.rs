//! Finite-difference magnetic Schrödinger operator `(1/2)(i∇ + A)^2 + V` on a
//! lattice box, with Peierls phases for a constant field in symmetric gauge.
//!
//! The bond from site `x` to `y = x + h e_k` carries the hopping
//! `-exp(i φ_xy) / (2h^2)` with `φ_xy = -∫_x^y A·dl`. For the linear symmetric
//! gauge the line integral equals `h A_k` at the bond midpoint, so the phase is
//! exact and every plaquette in the `(j,k)` plane picks up `exp(-i B_jk h^2)`.
//!
//! Kinetic diagonals:
//! * Dirichlet: `d / h^2` everywhere (hard wall, missing neighbours dropped);
//! * Neumann: `(coordination) / (2h^2)` (free ends);
//! * Periodic: `d / h^2`, wrap-around bonds use magnetic boundary conditions
//!   `ψ(y + L_j h e_j) = exp(-(i/2) y·B (L_j h e_j)) ψ(y)`, which requires an
//!   integer number of flux quanta through every coordinate plane.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, BoxSpec, MagneticField};
use crate::spectral::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    box_spec: BoxSpec,
    field: MagneticField,
}

impl HermitianOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    pub fn field(&self) -> &MagneticField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Diagonal entries (kinetic diagonal plus potential).
    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().into_iter().map(|z| z.re).collect()
    }
}

#[inline]
fn unit_phase(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

/// Phase `φ = -h A_k(midpoint)` of the bond leaving `coords` along `axis`.
fn peierls_phase(field: &MagneticField, coords: &[i64], axis: usize, h: f64) -> f64 {
    let s: f64 = coords.iter().enumerate().map(|(j, &n)| n as f64 * field.get(j, axis)).sum();
    -0.5 * h * h * s
}

/// Phase of the magnetic translation by the physical vector `a`, evaluated at
/// physical position `y`: `exp(-(i/2) Σ_jk y_j B_jk a_k)`.
fn translation_phase(field: &MagneticField, y: &[f64], a: &[f64]) -> Complex64 {
    let d = y.len();
    let mut s = 0.0;
    for j in 0..d {
        for k in 0..d {
            s += y[j] * field.get(j, k) * a[k];
        }
    }
    unit_phase(-0.5 * s)
}

/// Maps a lattice point outside the torus fundamental domain back inside,
/// returning the site index and the phase `c` with `ψ(z) = c ψ(site)`.
fn wrap(bx: &BoxSpec, field: &MagneticField, z: &[i64]) -> (usize, Complex64) {
    let h = bx.spacing();
    let d = bx.dim();
    let mut z = z.to_vec();
    let mut phase = Complex64::new(1.0, 0.0);
    let mut period = vec![0.0; d];
    for axis in 0..d {
        let l = bx.sides()[axis] as i64;
        period.iter_mut().for_each(|p| *p = 0.0);
        period[axis] = l as f64 * h;
        while z[axis] >= l {
            let y: Vec<f64> = z.iter().map(|&c| c as f64 * h).collect();
            phase *= translation_phase(field, &y, &period);
            z[axis] -= l;
        }
        while z[axis] < 0 {
            z[axis] += l;
            let y: Vec<f64> = z.iter().map(|&c| c as f64 * h).collect();
            phase *= translation_phase(field, &y, &period).conj();
        }
    }
    let coords: Vec<usize> = z.iter().map(|&c| c as usize).collect();
    (bx.index(&coords), phase)
}

/// Assembles `H_{Λ,X}(A, V)` for the boundary condition stored in `bx`.
/// Largest box stored as a dense matrix (2 GiB of complex entries).
pub const MAX_DENSE_SITES: usize = 16_384;

pub fn build_hamiltonian(bx: &BoxSpec, field: &MagneticField, potential: &[f64]) -> Result<HermitianOperator> {
    let n = bx.n_sites();
    let d = bx.dim();
    if n > MAX_DENSE_SITES {
        return Err(Error::InvalidBox(format!("{n} sites exceeds the dense limit of {MAX_DENSE_SITES}")));
    }
    if field.dim() != d {
        return Err(Error::FieldDimension { expected: d, found: field.dim() });
    }
    if potential.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: potential.len() });
    }
    if let Some(site) = potential.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePotential { site, value: potential[site] });
    }
    if bx.bc() == BoundaryCondition::Periodic {
        field.check_torus_flux(bx)?;
    }

    let h = bx.spacing();
    let hop = 1.0 / (2.0 * h * h);
    let mut m = CMatrix::zeros(n, n);

    for x in 0..n {
        let coords = bx.coords(x);
        let kinetic = match bx.bc() {
            BoundaryCondition::Dirichlet | BoundaryCondition::Periodic => d as f64 / (h * h),
            BoundaryCondition::Neumann => bx.coordination(&coords) as f64 * hop,
        };
        m[(x, x)] += Complex64::new(kinetic + potential[x], 0.0);

        let icoords: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
        for axis in 0..d {
            let phase = unit_phase(peierls_phase(field, &icoords, axis, h));
            let mut target = icoords.clone();
            target[axis] += 1;
            let (y, entry) = if coords[axis] + 1 < bx.sides()[axis] {
                (x + stride(bx, axis), -phase * hop)
            } else if bx.bc() == BoundaryCondition::Periodic {
                let (y, c) = wrap(bx, field, &target);
                (y, -phase * c * hop)
            } else {
                continue;
            };
            m[(x, y)] += entry;
            m[(y, x)] += entry.conj();
        }
    }
    Ok(HermitianOperator { matrix: m, box_spec: bx.clone(), field: field.clone() })
}

fn stride(bx: &BoxSpec, axis: usize) -> usize {
    bx.sides()[..axis].iter().product()
}

/// `U^* H U` with `U = diag(exp(i chi))`.
pub fn gauge_transform(op: &HermitianOperator, chi: &[f64]) -> Result<HermitianOperator> {
    let n = op.dim();
    if chi.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: chi.len() });
    }
    if chi.iter().any(|c| !c.is_finite()) {
        return Err(Error::param("chi", "gauge function must be finite"));
    }
    let u: Vec<Complex64> = chi.iter().map(|&c| unit_phase(c)).collect();
    let mut m = op.matrix.clone();
    for j in 0..n {
        let uj = u[j];
        for (i, entry) in m.col_mut(j).iter_mut().enumerate() {
            if i == j {
                continue;
            }
            *entry = u[i].conj() * *entry * uj;
        }
    }
    Ok(HermitianOperator { matrix: m, box_spec: op.box_spec.clone(), field: op.field.clone() })
}

fn check_shift(bx: &BoxSpec, shift: &[i64]) -> Result<()> {
    if shift.len() != bx.dim() {
        return Err(Error::ShiftDimension { expected: bx.dim(), found: shift.len() });
    }
    Ok(())
}

/// For every site `y`, the site `σ(y)` representing `y - a` on the torus and the
/// matrix element `t_y` of the discrete magnetic translation `T_a`,
/// `(T_a ψ)(y) = t_y ψ(σ(y))`.
fn translation_action(bx: &BoxSpec, field: &MagneticField, shift: &[i64]) -> Vec<(usize, Complex64)> {
    let h = bx.spacing();
    let a: Vec<f64> = shift.iter().map(|&s| s as f64 * h).collect();
    (0..bx.n_sites())
        .map(|y| {
            let coords = bx.coords(y);
            let pos: Vec<f64> = coords.iter().map(|&c| c as f64 * h).collect();
            let back: Vec<i64> = coords.iter().zip(shift).map(|(&c, &s)| c as i64 - s).collect();
            let (site, c) = wrap(bx, field, &back);
            (site, translation_phase(field, &pos, &a) * c)
        })
        .collect()
}

/// `T_a^* H T_a` for the magnetic translation by the lattice vector `shift`
/// (in units of `h`). For `H = H(A, V)` the result is `H(A, V(· + a))`.
pub fn magnetic_translate(op: &HermitianOperator, shift: &[i64]) -> Result<HermitianOperator> {
    let bx = &op.box_spec;
    if bx.bc() != BoundaryCondition::Periodic {
        return Err(Error::NotPeriodic);
    }
    check_shift(bx, shift)?;
    op.field.check_translation_flux(bx)?;

    let action = translation_action(bx, &op.field, shift);
    let n = op.dim();
    // column u of T has its single entry in the row y with σ(y) = u
    let mut preimage = vec![(0usize, Complex64::new(0.0, 0.0)); n];
    for (y, &(u, t)) in action.iter().enumerate() {
        preimage[u] = (y, t);
    }
    let m = CMatrix::from_fn(n, n, |u, v| {
        let (y1, t1) = preimage[u];
        let (y2, t2) = preimage[v];
        t1.conj() * op.matrix[(y1, y2)] * t2
    });
    Ok(HermitianOperator { matrix: m, box_spec: bx.clone(), field: op.field.clone() })
}

/// `V'(u) = V(u + a)` with cyclic indices: the potential whose Hamiltonian
/// equals the magnetic translate of `H(A, V)` by `shift`.
pub fn translate_potential(bx: &BoxSpec, values: &[f64], shift: &[i64]) -> Result<Vec<f64>> {
    check_shift(bx, shift)?;
    if values.len() != bx.n_sites() {
        return Err(Error::SizeMismatch { expected: bx.n_sites(), found: values.len() });
    }
    Ok((0..bx.n_sites())
        .map(|u| {
            let coords: Vec<usize> = bx
                .coords(u)
                .iter()
                .zip(shift)
                .zip(bx.sides())
                .map(|((&c, &s), &l)| (c as i64 + s).rem_euclid(l as i64) as usize)
                .collect();
            values[bx.index(&coords)]
        })
        .collect())
}
