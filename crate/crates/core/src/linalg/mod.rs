//! Dense linear algebra kernels generic over the scalar type.

mod eigh;
mod expm;
mod matrix;

pub use eigh::{eigh, HermitianEigen};
pub use expm::expm;
pub use matrix::{CMatrix, Matrix};
