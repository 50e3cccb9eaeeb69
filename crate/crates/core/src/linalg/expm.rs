//! Matrix exponential by scaling and squaring with a Taylor core.
//!
//! The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
//! Taylor series is summed until the next term falls below machine epsilon
//! relative to the partial sum, and the result is squared `s` times. For the
//! operators used here (anti-Hermitian generators and nilpotent ladder
//! combinations) this reaches ~1e-14 relative accuracy.

use num_complex::Complex;
use num_traits::One;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::RealScalar;

const MAX_TAYLOR_TERMS: usize = 60;

pub fn expm<T: RealScalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.dim();
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix in expm".into()));
    }
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm = scaled_norm * half;
        squarings += 1;
    }
    let factor = T::lit(0.5).powi(squarings as i32);
    let b = a.scale(&Complex::new(factor, T::zero()));

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=MAX_TAYLOR_TERMS {
        term = term.try_matmul(&b)?;
        term = term.scale(&Complex::new(T::one() / T::from_usize(k), T::zero()));
        sum.add_scaled(&Complex::one(), &term);
        let term_norm = term.norm_one();
        if term_norm <= T::epsilon() * sum.norm_one().max(T::one()) * T::lit(0.25) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.try_matmul(&sum)?;
    }
    Ok(sum)
}
