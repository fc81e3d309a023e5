//! Fixtures shared by the benchmarks.

use idslab_core::{build_hamiltonian, BoundaryCondition, BoxSpec, HermitianOperator, MagneticField};

/// Magnetic Dirichlet square with a deterministic pseudo-random potential.
pub fn square(side: usize, b: f64) -> HermitianOperator {
    let bx = BoxSpec::cube(2, side, 1.0, BoundaryCondition::Dirichlet).expect("valid box");
    let field = MagneticField::planar(2, b).expect("planar field");
    let v: Vec<f64> = (0..bx.n_sites()).map(|i| ((i * 7919) % 13) as f64 / 6.5 - 1.0).collect();
    build_hamiltonian(&bx, &field, &v).expect("finite potential")
}
