//! Dense Hermitian eigensolver.
//!
//! Householder reduction to Hermitian tridiagonal form, a diagonal phase
//! similarity that makes the off-diagonal real, then implicit QL iterations
//! on the real tridiagonal matrix (after the EISPACK `tql2` routine).
//! Eigenvalues come back in ascending order with eigenvectors as columns.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::RealScalar;

#[derive(Clone, Debug)]
pub struct HermitianEigen<T: RealScalar> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: CMatrix<T>,
}

impl<T: RealScalar> HermitianEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<Complex<T>> {
        self.vectors.column(k)
    }

    /// Rebuilds `V diag(f(λ)) V†`.
    pub fn spectral_map(&self, f: impl Fn(T) -> Complex<T>) -> CMatrix<T> {
        let n = self.values.len();
        let scaled = CMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        scaled.try_matmul(&self.vectors.adjoint()).expect("square")
    }
}

/// Full eigendecomposition of a Hermitian matrix. Only the lower triangle is
/// trusted; callers are expected to pass a Hermitian argument.
pub fn eigh<T: RealScalar>(a: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let mut work = a.clone();
    work.symmetrize();
    let (diag, sub, q) = tridiagonalize(work);

    // Phase similarity: T = D T_r D†, with T_r having real subdiagonal |β_k|.
    let mut phases = vec![Complex::<T>::one(); n];
    let mut e = vec![T::zero(); n];
    for k in 0..n - 1 {
        let beta = sub[k];
        let mag = beta.norm();
        e[k + 1] = mag;
        phases[k + 1] = if mag > T::zero() {
            phases[k] * beta.unscale(mag)
        } else {
            phases[k]
        };
    }
    let mut d = diag;
    let z = tql2(&mut d, &mut e)?;

    // Eigenvectors of A: Q D Z.
    let qd = CMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j]);
    let mut vectors = CMatrix::zeros(n, n);
    for i in 0..n {
        for (k, zk) in z.iter().enumerate() {
            let a = qd[(i, k)];
            if a.is_zero() {
                continue;
            }
            for j in 0..n {
                let zkj = zk[j];
                if zkj != T::zero() {
                    vectors[(i, j)] = vectors[(i, j)] + a.scale(zkj);
                }
            }
        }
    }
    Ok(HermitianEigen { values: d, vectors })
}

/// Returns (diagonal, subdiagonal, Q) with A = Q T Q†.
fn tridiagonalize<T: RealScalar>(mut a: CMatrix<T>) -> (Vec<T>, Vec<Complex<T>>, CMatrix<T>) {
    let n = a.dim();
    let mut q = CMatrix::<T>::identity(n);
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Complex<T>> = (0..m).map(|i| a[(k + 1 + i, k)]).collect();
        let xnorm = x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > T::zero() {
            x0.unscale(x0.norm())
        } else {
            Complex::one()
        };
        let alpha = -phase.scale(xnorm);
        let mut v = x.clone();
        v[0] = v[0] - alpha;
        let vnorm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = z.unscale(vnorm);
        }
        // p = A22 v
        let mut p = vec![Complex::<T>::zero(); m];
        for (i, pi) in p.iter_mut().enumerate() {
            let mut acc = Complex::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc + a[(k + 1 + i, k + 1 + j)] * vj;
            }
            *pi = acc;
        }
        let c = v
            .iter()
            .zip(&p)
            .fold(Complex::<T>::zero(), |acc, (vi, pi)| acc + vi.conj() * pi)
            .re;
        let qv: Vec<Complex<T>> = p.iter().zip(&v).map(|(pi, vi)| pi - vi.scale(c)).collect();
        // A22 -= 2 (v q† + q v†)
        for i in 0..m {
            for j in 0..m {
                let delta = (v[i] * qv[j].conj() + qv[i] * v[j].conj()).scale(two);
                a[(k + 1 + i, k + 1 + j)] = a[(k + 1 + i, k + 1 + j)] - delta;
            }
        }
        // Column k below the diagonal becomes (alpha, 0, ..., 0).
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 1..m {
            a[(k + 1 + i, k)] = Complex::zero();
            a[(k, k + 1 + i)] = Complex::zero();
        }
        // Q <- Q H
        for r in 0..n {
            let mut acc = Complex::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc + q[(r, k + 1 + j)] * vj;
            }
            if acc.is_zero() {
                continue;
            }
            let s = acc.scale(two);
            for (j, vj) in v.iter().enumerate() {
                q[(r, k + 1 + j)] = q[(r, k + 1 + j)] - s * vj.conj();
            }
        }
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    let sub = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect();
    (diag, sub, q)
}

/// Symmetric tridiagonal QL with implicit shifts. `e[i]` holds the
/// subdiagonal entry (i, i-1); `e[0]` is ignored. Returns the eigenvector
/// matrix row by row (`z[row][col]`, eigenvectors in columns).
fn tql2<T: RealScalar>(d: &mut [T], e: &mut [T]) -> Result<Vec<Vec<T>>> {
    let n = d.len();
    let mut z: Vec<Vec<T>> = (0..n)
        .map(|k| {
            let mut col = vec![T::zero(); n];
            col[k] = T::one();
            col
        })
        .collect();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let max_iter = 50 * n.max(1);
    let mut iterations = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::NoConvergence(iterations));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = z.split_at_mut(i + 1);
                    let zi = &mut left[i];
                    let zi1 = &mut right[0];
                    for k in 0..n {
                        let hk = zi1[k];
                        zi1[k] = s * zi[k] + c * hk;
                        zi[k] = c * zi[k] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }

    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_d: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let sorted_z: Vec<Vec<T>> = order.iter().map(|&i| z[i].clone()).collect();
    d.copy_from_slice(&sorted_d);
    // Internally z[k] is column k; transpose to rows for the caller.
    let mut rows = vec![vec![T::zero(); n]; n];
    for (col, zc) in sorted_z.iter().enumerate() {
        for (row, v) in zc.iter().enumerate() {
            rows[row][col] = *v;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = CMatrix::from_fn(n, n, |_, _| Complex::new(next(), next()));
        a.symmetrize();
        a
    }

    fn residual(a: &CMatrix<f64>, eig: &HermitianEigen<f64>) -> f64 {
        let rebuilt = eig.spectral_map(|x| x.into());
        (&rebuilt - a).max_abs()
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (60, 5)] {
            let a = random_hermitian(n, seed);
            let eig = eigh(&a).unwrap();
            assert!(residual(&a, &eig) < 1e-12, "n={n}");
            assert!(eig.vectors.unitarity_error() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let a = CMatrix::diagonal(&[cplx(2.0, 0.0), cplx(-1.0, 0.0), cplx(2.0, 0.0), cplx(0.0, 0.0)]);
        let eig = eigh(&a).unwrap();
        assert_eq!(eig.values, vec![-1.0, 0.0, 2.0, 2.0]);
        assert!(residual(&a, &eig) < 1e-14);
        let z = CMatrix::<f64>::zeros(3, 3);
        assert_eq!(eigh(&z).unwrap().values, vec![0.0; 3]);
    }

    #[test]
    fn pauli_y() {
        let a = CMatrix::<f64>::from_row_major(2, 2, vec![cplx(0.0, 0.0), cplx(0.0, -1.0), cplx(0.0, 1.0), cplx(0.0, 0.0)])
            .unwrap();
        let eig = eigh(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15 && (eig.values[1] - 1.0).abs() < 1e-15);
        assert!(residual(&a, &eig) < 1e-15);
    }

    #[test]
    fn single_precision() {
        let a = random_hermitian(8, 9).map(|z| Complex::new(z.re as f32, z.im as f32));
        let eig = eigh(&a).unwrap();
        let rebuilt = eig.spectral_map(|x| x.into());
        assert!((&rebuilt - &a).max_abs() < 1e-5);
    }
}
