//! Hard-core bosons on an infinite-range lattice coupled to local phonons:
//! model construction, polaron-frame perturbation theory, master-equation
//! dynamics and coherence analysis.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! below fix the common instantiations.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod perturbation;
pub mod scalar;

pub use error::{Error, Result};
pub use hilbert::CompositeSpace;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Complex64 = num_complex::Complex<f64>;
pub type Matrix64 = linalg::CMatrix<f64>;
pub type Operator = hilbert::OperatorMatrix<f64>;
pub type Params = models::ModelParams<f64>;
pub type Density = dynamics::DensityMatrix<f64>;
pub type Grid = dynamics::TimeGrid<f64>;
pub type Labeled = analysis::LabeledState<f64>;

pub type Complex32 = num_complex::Complex<f32>;
pub type Matrix32 = linalg::CMatrix<f32>;
pub type Operator32 = hilbert::OperatorMatrix<f32>;
pub type Params32 = models::ModelParams<f32>;
pub type Density32 = dynamics::DensityMatrix<f32>;
