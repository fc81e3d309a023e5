//! Lattice geometry and the constant magnetic field.
//!
//! Sites of a box with sides `L_1..L_d` and spacing `h` sit at the physical
//! positions `x = n h`, `n_j = 0..L_j - 1`. The linear site index runs with
//! axis 0 fastest.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn label(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    sides: Vec<usize>,
    spacing: f64,
    bc: BoundaryCondition,
}

impl BoxSpec {
    pub fn new(sides: Vec<usize>, spacing: f64, bc: BoundaryCondition) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidBox("dimension must be at least 1".into()));
        }
        if let Some(axis) = sides.iter().position(|&l| l == 0) {
            return Err(Error::InvalidBox(format!("side {axis} has zero sites")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidBox(format!("spacing must be positive and finite, got {spacing}")));
        }
        Ok(BoxSpec { sides, spacing, bc })
    }

    /// Cube with `side` sites per axis.
    pub fn cube(dim: usize, side: usize, spacing: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(vec![side; dim], spacing, bc)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn with_bc(&self, bc: BoundaryCondition) -> Self {
        BoxSpec { bc, ..self.clone() }
    }

    pub fn n_sites(&self) -> usize {
        self.sides.iter().product()
    }

    /// Volume `n h^d` of the region covered by the site cells.
    pub fn volume(&self) -> f64 {
        self.n_sites() as f64 * self.cell_volume()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Physical edge length `L_j h` along each axis.
    pub fn extent(&self, axis: usize) -> f64 {
        self.sides[axis] as f64 * self.spacing
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for &l in &self.sides {
            out.push(index % l);
            index /= l;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim());
        let mut idx = 0;
        for (axis, &c) in coords.iter().enumerate().rev() {
            debug_assert!(c < self.sides[axis]);
            idx = idx * self.sides[axis] + c;
        }
        idx
    }

    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords(index).into_iter().map(|c| c as f64 * self.spacing).collect()
    }

    /// Positions of all sites in index order.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.n_sites()).map(|i| self.position(i)).collect()
    }

    /// Number of nearest-neighbour bonds of a site inside the box (open boundaries).
    pub fn coordination(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.sides).map(|(&c, &l)| usize::from(c > 0) + usize::from(c + 1 < l)).sum()
    }
}

/// Constant magnetic field given by a skew-symmetric tensor `B_jk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MagneticField {
    dim: usize,
    tensor: Vec<f64>,
}

impl MagneticField {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::param("field", "tensor must be at least 1x1"));
        }
        let mut tensor = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::param("field", "tensor must be square"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("field", "tensor entries must be finite"));
            }
            tensor.extend_from_slice(row);
        }
        for j in 0..dim {
            for k in j..dim {
                let upper = tensor[j * dim + k];
                let lower = tensor[k * dim + j];
                if upper != -lower {
                    return Err(Error::NotSkewSymmetric { row: j, col: k, upper, lower });
                }
            }
        }
        Ok(MagneticField { dim, tensor })
    }

    pub fn zero(dim: usize) -> Self {
        MagneticField { dim, tensor: vec![0.0; dim * dim] }
    }

    /// Field `B_12 = b`, `B_21 = -b`, all other components zero (`dim >= 2`).
    pub fn planar(dim: usize, b: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("field", "a planar field needs dim >= 2"));
        }
        let mut f = Self::zero(dim);
        f.tensor[1] = b;
        f.tensor[dim] = -b;
        if !b.is_finite() {
            return Err(Error::param("field", "field strength must be finite"));
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.tensor[j * self.dim + k]
    }

    pub fn is_zero(&self) -> bool {
        self.tensor.iter().all(|&b| b == 0.0)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.tensor.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// Symmetric gauge `A_k(x) = 1/2 sum_j x_j B_jk`.
    pub fn vector_potential(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|k| 0.5 * (0..self.dim).map(|j| x[j] * self.get(j, k)).sum::<f64>()).collect()
    }

    /// Checks that the total flux through every coordinate plane of a torus is
    /// an integer number of flux quanta, the condition for periodic boundary
    /// conditions to be consistent.
    pub fn check_torus_flux(&self, bx: &BoxSpec) -> Result<()> {
        let h2 = bx.spacing() * bx.spacing();
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                let flux = self.get(a, b) * h2 * (bx.sides()[a] * bx.sides()[b]) as f64;
                check_quantized(flux, a, b, "total flux B_ab h^2 L_a L_b")?;
            }
        }
        Ok(())
    }

    /// Checks that single-site magnetic translations commute with the torus
    /// boundary conditions: `B_ab h^2 L_b` and `B_ab h^2 L_a` are multiples of 2π.
    pub fn check_translation_flux(&self, bx: &BoxSpec) -> Result<()> {
        let h2 = bx.spacing() * bx.spacing();
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                let plaquette = self.get(a, b) * h2;
                check_quantized(plaquette * bx.sides()[b] as f64, a, b, "plaquette flux times L_b")?;
                check_quantized(plaquette * bx.sides()[a] as f64, a, b, "plaquette flux times L_a")?;
            }
        }
        Ok(())
    }
}

fn check_quantized(value: f64, axis_a: usize, axis_b: usize, what: &'static str) -> Result<()> {
    let quantum = 2.0 * PI;
    let ratio = value / quantum;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::IncommensurateFlux { axis_a, axis_b, what, value, quantum });
    }
    Ok(())
}

impl TryFrom<Vec<Vec<f64>>> for MagneticField {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        MagneticField::new(rows)
    }
}

impl From<MagneticField> for Vec<Vec<f64>> {
    fn from(f: MagneticField) -> Self {
        f.rows()
    }
}
