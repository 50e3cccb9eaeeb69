//! The polaron series `f1(g) = Σ_n g^{2n}/(n! n)` and
//! `f2(g) = Σ_{n,m} g^{2(n+m)}/(n! m! (n+m))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::RealScalar;

/// Largest coupling accepted before the terms risk overflow.
pub const MAX_COUPLING: f64 = 10.0;

/// Starting edge of the rectangle truncation of `f2`.
pub const F2_RECTANGLE: usize = 60;

const MAX_TERMS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue<T: RealScalar = f64> {
    pub value: T,
    pub terms: usize,
}

/// Default relative tolerance: `1e-14`, or a few ulps for low-precision scalars.
pub fn default_tolerance<T: RealScalar>() -> T {
    T::lit(1e-14).max(T::epsilon() * T::lit(4.0))
}

fn check_args<T: RealScalar>(g: T, tol: T) -> Result<()> {
    if !(g.is_finite() && g >= T::zero()) {
        return Err(Error::InvalidArgument(format!("coupling g = {g} must be non-negative")));
    }
    if !(tol.is_finite() && tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    if g > T::lit(MAX_COUPLING) {
        return Err(Error::Overflow(format!(
            "g = {g} exceeds the series guard g <= {MAX_COUPLING}"
        )));
    }
    Ok(())
}

/// `f1(g)`, summed until the next term drops below `tol·(1 + |partial|)`.
pub fn f1_series<T: RealScalar>(g: T, tol: T) -> Result<SeriesValue<T>> {
    check_args(g, tol)?;
    let g2 = g * g;
    if g2 == T::zero() {
        return Ok(SeriesValue {
            value: T::zero(),
            terms: 0,
        });
    }
    let mut power = T::one();
    let mut sum = T::zero();
    for n in 1..=MAX_TERMS {
        let nf = T::from_usize(n);
        // power = g^{2n}/n!
        power = power * g2 / nf;
        let term = power / nf;
        if !term.is_finite() || !sum.is_finite() {
            return Err(Error::Overflow(format!("f1 terms overflow at n = {n}")));
        }
        sum = sum + term;
        let next = power * g2 / (nf + T::one()) / (nf + T::one());
        if nf >= g2 && next < tol * (T::one() + sum.abs()) {
            return Ok(SeriesValue { value: sum, terms: n });
        }
    }
    Err(Error::NoConvergence(MAX_TERMS))
}

/// `g^{2n}/n!` for `n = 0..=len-1`.
fn scaled_powers<T: RealScalar>(g2: T, len: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(len);
    let mut p = T::one();
    for n in 0..len {
        if n > 0 {
            p = p * g2 / T::from_usize(n);
        }
        if !p.is_finite() {
            return Err(Error::Overflow(format!("g^(2n)/n! overflows at n = {n}")));
        }
        out.push(p);
    }
    Ok(out)
}

/// `f2(g)` as a rectangle sum `n, m <= R` starting from `R = 60`. The tail
/// outside the rectangle is bounded by `2·tail_R(e^{g²})·(e^{g²} − 1)/(R + 1)`,
/// and `R` is doubled until that bound is below `tol·(1 + |sum|)`.
pub fn f2_series<T: RealScalar>(g: T, tol: T) -> Result<SeriesValue<T>> {
    check_args(g, tol)?;
    let g2 = g * g;
    if g2 == T::zero() {
        return Ok(SeriesValue {
            value: T::zero(),
            terms: 0,
        });
    }
    let mut r = F2_RECTANGLE;
    loop {
        // Terms up to 2R + 1 so the tail of e^{g²} beyond R can be bounded.
        let powers = scaled_powers(g2, 4 * r + 2)?;
        let mut sum = T::zero();
        for n in 1..=r {
            for m in 1..=r {
                sum = sum + powers[n] * powers[m] / T::from_usize(n + m);
            }
        }
        if !sum.is_finite() {
            return Err(Error::Overflow("f2 rectangle sum overflows".into()));
        }
        let exp_minus_one: T = powers[1..].iter().copied().sum();
        let tail: T = powers[r + 1..].iter().copied().sum();
        // The truncated tail sum is itself bounded by a geometric majorant.
        let last = powers[powers.len() - 1];
        let ratio = g2 / T::from_usize(powers.len());
        let tail = tail + if ratio < T::one() { last * ratio / (T::one() - ratio) } else { T::infinity() };
        let bound = T::lit(2.0) * tail * exp_minus_one / T::from_usize(r + 1);
        if bound <= tol * (T::one() + sum.abs()) {
            return Ok(SeriesValue {
                value: sum,
                terms: r * r,
            });
        }
        if r > 4096 {
            return Err(Error::NoConvergence(r * r));
        }
        r *= 2;
    }
}
