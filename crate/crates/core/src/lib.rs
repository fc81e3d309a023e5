//! Numerical lab for the integrated density of states of magnetic
//! Schrödinger operators with random potentials.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ids;
pub mod lattice;
pub mod measure;
pub mod operator;
pub mod potential;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use ids::{IDSEstimate, ModelDims};
pub use lattice::{BoundaryCondition, BoxSpec, MagneticField};
pub use measure::{AtomicMeasure, SmoothingKernel};
pub use operator::{build_hamiltonian, gauge_transform, magnetic_translate, HermitianOperator, MAX_DENSE_SITES};
pub use potential::{CouplingDist, Covariance, EnsembleSpec, PotentialSample, Profile, Sampler};
pub use spectral::{CMatrix, EigenDecomposition, RMatrix, Spectrum};
