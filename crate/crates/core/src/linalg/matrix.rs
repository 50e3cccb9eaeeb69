use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{Modulus, RealScalar, Ring};

/// Work (rows * inner * cols) above which products are split across threads.
const PARALLEL_WORK: usize = 1 << 20;

/// Dense row-major matrix over an arbitrary ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Complex matrix, the carrier for every quantum operator.
pub type CMatrix<T> = Matrix<Complex<T>>;

impl<S: Ring> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(values: &[S]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<R: Ring>(&self, f: impl Fn(&S) -> R) -> Matrix<R> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a.clone() + b.clone()))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a.clone() - b.clone()))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// `self += s * other`, shapes must agree.
    pub fn add_scaled(&mut self, s: &S, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.clone() + s.clone() * b.clone();
        }
    }

    pub fn add_identity(&mut self, s: &S) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)].clone() + s.clone();
        }
    }

    /// Matrix product. Zero entries of the left factor are skipped, which keeps
    /// products with sparse or block-diagonal operators cheap.
    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![S::zero(); n * m];
        let kernel = |(i, out_row): (usize, &mut [S])| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (p, a) in a_row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (c, b) in out_row.iter_mut().zip(b_row) {
                    *c = c.clone() + a.clone() * b.clone();
                }
            }
        };
        if n * k * m >= PARALLEL_WORK && m > 0 {
            out.par_chunks_mut(m).enumerate().for_each(kernel);
        } else if m > 0 {
            out.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`; the right factor varies fastest.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] =
                            a.clone() * other[(p, q)].clone();
                    }
                }
            }
        }
        out
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_matmul(other)?.try_sub(&other.try_matmul(self)?)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.try_matmul(other)?.try_add(&other.try_matmul(self)?)
    }

    /// Principal submatrix on the given index list.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }
}

impl<S: Ring + Modulus> Matrix<S> {
    /// Largest entry magnitude (zero for an empty matrix).
    pub fn max_abs(&self) -> S::Real
    where
        S::Real: Zero,
    {
        self.data.iter().fold(S::Real::zero(), |acc, x| {
            let m = x.modulus();
            if m > acc {
                m
            } else {
                acc
            }
        })
    }
}

impl<T: RealScalar> CMatrix<T> {
    pub fn from_real(m: &Matrix<T>) -> Self {
        m.map(|x| Complex::new(*x, T::zero()))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    /// `max |A - A†|` entrywise.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |A†A - I|` entrywise.
    pub fn unitarity_error(&self) -> T {
        let mut p = self.adjoint().try_matmul(self).expect("square matrix");
        p.add_identity(&-Complex::one());
        p.max_abs()
    }

    /// Replaces the matrix by `(A + A†)/2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in i..self.cols {
                let avg = (self[(i, j)] + self[(j, i)].conj()).scale(half);
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    pub fn inner(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
        u.iter()
            .zip(v)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `⟨u|A|v⟩`.
    pub fn sandwich(&self, u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
        Self::inner(u, &self.matvec(v))
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `U† A U` for a matrix whose columns are basis vectors.
    pub fn in_basis(&self, basis: &Self) -> Result<Self> {
        basis.adjoint().try_matmul(&self.try_matmul(basis)?)
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Ring> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: Self) -> Matrix<S> {
        self.try_add(rhs).expect("matrix shapes agree")
    }
}

impl<S: Ring> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: Self) -> Matrix<S> {
        self.try_sub(rhs).expect("matrix shapes agree")
    }
}

impl<S: Ring> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: Self) -> Matrix<S> {
        self.try_matmul(rhs).expect("inner dimensions agree")
    }
}

impl<S: Ring> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        self.map(|x| -x.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_product_and_kron() {
        let a = Matrix::from_row_major(2, 2, vec![1i64, 2, 3, 4]).unwrap();
        let b = Matrix::from_row_major(2, 2, vec![0i64, 1, 1, 0]).unwrap();
        assert_eq!((&a * &b).as_slice(), &[2, 1, 4, 3]);
        let k = a.kron(&Matrix::identity(2));
        assert_eq!(k[(2, 0)], 3);
        assert_eq!(k[(2, 2)], 4);
        assert_eq!(k[(1, 3)], 2);
        assert_eq!(k[(0, 1)], 0);
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::<i64>::zeros(2, 3);
        assert!(a.try_matmul(&a).is_err());
        assert!(a.try_add(&Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn pauli_commutator_frobenius() {
        let i = Complex::new(0.0, 1.0);
        let sx = CMatrix::from_row_major(2, 2, vec![0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()])
            .unwrap();
        let sy = CMatrix::from_row_major(2, 2, vec![0.0.into(), -i, i, 0.0.into()]).unwrap();
        let c = sx.commutator(&sy).unwrap();
        assert!((c.frobenius_norm() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parallel_product_matches_serial() {
        let n = 110;
        let a = CMatrix::<f64>::from_fn(n, n, |i, j| Complex::new((i * 7 + j) as f64 % 5.0, (i as f64 - j as f64) * 0.1));
        let b = a.adjoint();
        let c = &a * &b;
        let mut worst = 0.0f64;
        for i in (0..n).step_by(13) {
            for j in (0..n).step_by(11) {
                let direct: Complex<f64> = (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum();
                worst = worst.max((direct - c[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-9);
    }
}
