//! Bases and elementary operators for hard-core bosons (spin-1/2 sites) and
//! truncated phonon modes, embedded into the composite Hilbert space.
//!
//! Flat index convention: `index = spin_bits + 2^N * phonon_index`, where
//! `spin_bits` has site 0 as the least significant bit (bit set = occupied,
//! i.e. spin up) and `phonon_index = Σ_i occ_i (M+1)^i`. Composite operators
//! are therefore `phonon_part ⊗ spin_part` with the spin factor varying
//! fastest.

use std::ops::Deref;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::RealScalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    pub n_sites: usize,
    /// Maximum phonon occupation per site; zero means no phonon factor.
    pub phonon_cutoff: usize,
}

/// Decoded basis label of a composite index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub spin_bits: usize,
    pub phonon_occ: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(n_sites: usize, phonon_cutoff: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("need at least one site".into()));
        }
        if n_sites > 16 {
            return Err(Error::InvalidArgument(format!(
                "{n_sites} sites exceed the dense-matrix budget"
            )));
        }
        Ok(Self {
            n_sites,
            phonon_cutoff,
        })
    }

    /// The spin (hard-core boson) factor alone.
    pub fn spin_only(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 0)
    }

    pub fn local_phonon_dim(&self) -> usize {
        self.phonon_cutoff + 1
    }

    pub fn dim_spin(&self) -> usize {
        1 << self.n_sites
    }

    pub fn dim_phonon(&self) -> usize {
        self.local_phonon_dim().pow(self.n_sites as u32)
    }

    pub fn dim_total(&self) -> usize {
        self.dim_spin() * self.dim_phonon()
    }

    pub fn has_phonons(&self) -> bool {
        self.phonon_cutoff > 0
    }

    pub fn encode(&self, b: &BasisIndex) -> Result<usize> {
        if b.spin_bits >= self.dim_spin() {
            return Err(Error::InvalidArgument(format!(
                "spin bitstring {:#b} out of range",
                b.spin_bits
            )));
        }
        Ok(b.spin_bits + self.dim_spin() * self.phonon_index(&b.phonon_occ)?)
    }

    pub fn decode(&self, index: usize) -> Result<BasisIndex> {
        if index >= self.dim_total() {
            return Err(Error::InvalidArgument(format!(
                "index {index} out of range for dimension {}",
                self.dim_total()
            )));
        }
        Ok(BasisIndex {
            spin_bits: index % self.dim_spin(),
            phonon_occ: self.phonon_occupations(index / self.dim_spin()),
        })
    }

    pub fn phonon_index(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: occ.len(),
            });
        }
        let d = self.local_phonon_dim();
        let mut idx = 0;
        for (site, &m) in occ.iter().enumerate().rev() {
            if m > self.phonon_cutoff {
                return Err(Error::InvalidArgument(format!(
                    "occupation {m} at site {site} exceeds cutoff {}",
                    self.phonon_cutoff
                )));
            }
            idx = idx * d + m;
        }
        Ok(idx)
    }

    pub fn phonon_occupations(&self, mut phonon_index: usize) -> Vec<usize> {
        let d = self.local_phonon_dim();
        (0..self.n_sites)
            .map(|_| {
                let m = phonon_index % d;
                phonon_index /= d;
                m
            })
            .collect()
    }

    /// Total phonon number of a phonon-factor basis state.
    pub fn phonon_total(&self, phonon_index: usize) -> usize {
        self.phonon_occupations(phonon_index).iter().sum()
    }

    /// Indices, in this (larger) space, of the basis states of `smaller`, in
    /// the order of `smaller`'s flat index.
    pub fn restriction_indices(&self, smaller: &CompositeSpace) -> Result<Vec<usize>> {
        if smaller.n_sites != self.n_sites || smaller.phonon_cutoff > self.phonon_cutoff {
            return Err(Error::InvalidArgument(
                "restriction target must have the same sites and a lower cutoff".into(),
            ));
        }
        (0..smaller.dim_total())
            .map(|i| self.encode(&smaller.decode(i)?))
            .collect()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range for {} sites",
                self.n_sites
            )));
        }
        Ok(())
    }
}

/// Operator with advisory Hermitian/unitary flags, checked by [`OperatorMatrix::verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<T: RealScalar> {
    matrix: CMatrix<T>,
    pub hermitian: bool,
    pub unitary: bool,
}

impl<T: RealScalar> OperatorMatrix<T> {
    pub fn new(matrix: CMatrix<T>) -> Self {
        Self {
            matrix,
            hermitian: false,
            unitary: false,
        }
    }

    pub fn hermitian(matrix: CMatrix<T>) -> Self {
        Self {
            matrix,
            hermitian: true,
            unitary: false,
        }
    }

    pub fn unitary(matrix: CMatrix<T>) -> Self {
        Self {
            matrix,
            hermitian: false,
            unitary: true,
        }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn hermitian_tolerance() -> T {
        T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
    }

    pub fn unitary_tolerance() -> T {
        T::lit(1e-10).max(T::epsilon() * T::lit(256.0))
    }

    /// Checks every flag that is set.
    pub fn verify(&self) -> Result<()> {
        if self.hermitian {
            let err = self.matrix.hermiticity_error();
            if err > Self::hermitian_tolerance() * self.matrix.max_abs().max(T::one()) {
                return Err(Error::NotHermitian(err.as_f64()));
            }
        }
        if self.unitary {
            let err = self.matrix.unitarity_error();
            if err > Self::unitary_tolerance() {
                return Err(Error::InvalidArgument(format!(
                    "not unitary: max |U†U - I| = {:.3e}",
                    err.as_f64()
                )));
            }
        }
        Ok(())
    }
}

impl<T: RealScalar> Deref for OperatorMatrix<T> {
    type Target = CMatrix<T>;
    fn deref(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

/// Which tensor factor a local operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Spin,
    Phonon,
}

/// A single-site operator to be embedded into the composite space.
#[derive(Clone, Debug)]
pub struct LocalOp<'a, T: RealScalar> {
    pub factor: Factor,
    pub site: usize,
    pub op: &'a CMatrix<T>,
}

impl<'a, T: RealScalar> LocalOp<'a, T> {
    pub fn spin(site: usize, op: &'a CMatrix<T>) -> Self {
        Self {
            factor: Factor::Spin,
            site,
            op,
        }
    }

    pub fn phonon(site: usize, op: &'a CMatrix<T>) -> Self {
        Self {
            factor: Factor::Phonon,
            site,
            op,
        }
    }
}

/// Kronecker embedding of single-site operators; identity on every other factor.
pub fn embed_product<T: RealScalar>(ops: &[LocalOp<'_, T>], space: &CompositeSpace) -> Result<CMatrix<T>> {
    let mut seen = std::collections::HashSet::new();
    for op in ops {
        space.check_site(op.site)?;
        if !seen.insert((op.factor, op.site)) {
            return Err(Error::InvalidArgument(format!(
                "site {} of the {:?} factor appears twice",
                op.site, op.factor
            )));
        }
        let expected = match op.factor {
            Factor::Spin => 2,
            Factor::Phonon => {
                if !space.has_phonons() {
                    return Err(Error::Unsupported("no phonon factor at cutoff 0".into()));
                }
                space.local_phonon_dim()
            }
        };
        if !op.op.is_square() || op.op.rows() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: op.op.rows(),
            });
        }
    }
    let find = |factor: Factor, site: usize| ops.iter().find(|o| o.factor == factor && o.site == site);

    // Most significant factor first: phonon sites N-1..0, then spin sites N-1..0.
    let mut factors: Vec<CMatrix<T>> = Vec::new();
    if space.has_phonons() {
        for site in (0..space.n_sites).rev() {
            factors.push(match find(Factor::Phonon, site) {
                Some(o) => o.op.clone(),
                None => CMatrix::identity(space.local_phonon_dim()),
            });
        }
    }
    for site in (0..space.n_sites).rev() {
        factors.push(match find(Factor::Spin, site) {
            Some(o) => o.op.clone(),
            None => CMatrix::identity(2),
        });
    }
    Ok(kron_chain(&factors))
}

/// Kronecker product of a list, folding identity stretches in one step.
pub(crate) fn kron_chain<T: RealScalar>(factors: &[CMatrix<T>]) -> CMatrix<T> {
    let mut out = CMatrix::<T>::identity(1);
    for f in factors {
        out = out.kron(f);
    }
    out
}

/// Operator acting on the spin factor only: `I_phonon ⊗ spin_op`.
pub fn lift_spin_operator<T: RealScalar>(spin_op: &CMatrix<T>, space: &CompositeSpace) -> Result<CMatrix<T>> {
    if spin_op.rows() != space.dim_spin() || !spin_op.is_square() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_spin(),
            found: spin_op.rows(),
        });
    }
    Ok(CMatrix::identity(space.dim_phonon()).kron(spin_op))
}

/// Operator acting on the phonon factor only: `phonon_op ⊗ I_spin`.
pub fn lift_phonon_operator<T: RealScalar>(phonon_op: &CMatrix<T>, space: &CompositeSpace) -> Result<CMatrix<T>> {
    if phonon_op.rows() != space.dim_phonon() || !phonon_op.is_square() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_phonon(),
            found: phonon_op.rows(),
        });
    }
    Ok(phonon_op.kron(&CMatrix::identity(space.dim_spin())))
}

pub mod local {
    //! Single-site matrices.

    use super::*;

    /// `b = |0⟩⟨1|` on one hard-core-boson site.
    pub fn hcb_lowering<T: RealScalar>() -> CMatrix<T> {
        let mut b = CMatrix::zeros(2, 2);
        b[(0, 1)] = Complex::one();
        b
    }

    pub fn hcb_number<T: RealScalar>() -> CMatrix<T> {
        CMatrix::diagonal(&[Complex::zero(), Complex::one()])
    }

    /// Truncated ladder operator with `⟨m-1|a|m⟩ = √m`, m ≤ cutoff.
    pub fn phonon_lowering<T: RealScalar>(cutoff: usize) -> CMatrix<T> {
        let mut a = CMatrix::zeros(cutoff + 1, cutoff + 1);
        for m in 1..=cutoff {
            a[(m - 1, m)] = Complex::new(T::from_usize(m).sqrt(), T::zero());
        }
        a
    }

    pub fn phonon_number<T: RealScalar>(cutoff: usize) -> CMatrix<T> {
        CMatrix::diagonal(
            &(0..=cutoff)
                .map(|m| Complex::new(T::from_usize(m), T::zero()))
                .collect::<Vec<_>>(),
        )
    }

    /// Spin-1/2 operators S = σ/2 in the occupation basis (occupied = up).
    pub fn spin_x<T: RealScalar>() -> CMatrix<T> {
        let h = Complex::new(T::lit(0.5), T::zero());
        CMatrix::from_fn(2, 2, |i, j| if i != j { h } else { Complex::zero() })
    }

    pub fn spin_y<T: RealScalar>() -> CMatrix<T> {
        let h = T::lit(0.5);
        let mut s = CMatrix::zeros(2, 2);
        // ⟨up|S_y|down⟩ = i/2 with up = index 1.
        s[(1, 0)] = Complex::new(T::zero(), h);
        s[(0, 1)] = Complex::new(T::zero(), -h);
        s
    }

    pub fn spin_z<T: RealScalar>() -> CMatrix<T> {
        let h = T::lit(0.5);
        CMatrix::diagonal(&[Complex::new(-h, T::zero()), Complex::new(h, T::zero())])
    }

    /// `exp(c a†)` on the truncated Fock space, exact since `a†` is nilpotent there:
    /// `⟨m|exp(c a†)|n⟩ = c^(m-n) √(m!/n!) / (m-n)!`.
    pub fn exp_creation<T: RealScalar>(cutoff: usize, c: T) -> CMatrix<T> {
        let mut e = CMatrix::zeros(cutoff + 1, cutoff + 1);
        for n in 0..=cutoff {
            let mut val = T::one();
            e[(n, n)] = Complex::new(val, T::zero());
            for m in n + 1..=cutoff {
                val = val * c * T::from_usize(m).sqrt() / T::from_usize(m - n);
                e[(m, n)] = Complex::new(val, T::zero());
            }
        }
        e
    }

    /// Normal-ordered displacement `exp(c a†) exp(-c a)`.
    pub fn normal_ordered_displacement<T: RealScalar>(cutoff: usize, c: T) -> CMatrix<T> {
        let create = exp_creation(cutoff, c);
        let annihilate = exp_creation(cutoff, -c).adjoint();
        create.try_matmul(&annihilate).expect("square factors")
    }
}

/// Product of single-site operators on the phonon factor alone (dimension `(M+1)^N`).
pub fn phonon_factor_product<T: RealScalar>(ops: &[(usize, &CMatrix<T>)], space: &CompositeSpace) -> Result<CMatrix<T>> {
    let d = space.local_phonon_dim();
    for (k, (site, op)) in ops.iter().enumerate() {
        space.check_site(*site)?;
        if op.rows() != d || !op.is_square() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.rows(),
            });
        }
        if ops[..k].iter().any(|(s, _)| s == site) {
            return Err(Error::InvalidArgument(format!("phonon site {site} appears twice")));
        }
    }
    let factors: Vec<CMatrix<T>> = (0..space.n_sites)
        .rev()
        .map(|site| match ops.iter().find(|(s, _)| *s == site) {
            Some((_, op)) => (*op).clone(),
            None => CMatrix::identity(d),
        })
        .collect();
    Ok(kron_chain(&factors))
}

/// Applies a single-site operator to a phonon-factor vector in place of a dense product.
pub fn apply_phonon_local<T: RealScalar>(
    space: &CompositeSpace,
    site: usize,
    op: &CMatrix<T>,
    v: &[Complex<T>],
) -> Vec<Complex<T>> {
    let d = space.local_phonon_dim();
    assert_eq!(v.len(), space.dim_phonon());
    assert_eq!(op.rows(), d);
    let stride = d.pow(site as u32);
    let mut out = vec![Complex::zero(); v.len()];
    for base in 0..v.len() {
        if !(base / stride).is_multiple_of(d) {
            continue;
        }
        for m in 0..d {
            let mut acc = Complex::zero();
            for n in 0..d {
                let a = op[(m, n)];
                if !a.is_zero() {
                    acc = acc + a * v[base + n * stride];
                }
            }
            out[base + m * stride] = acc;
        }
    }
    out
}

/// Hard-core-boson annihilator `b_site` on the composite space.
pub fn hcb_lowering<T: RealScalar>(space: &CompositeSpace, site: usize) -> Result<OperatorMatrix<T>> {
    space.check_site(site)?;
    let b = local::hcb_lowering();
    Ok(OperatorMatrix::new(embed_product(&[LocalOp::spin(site, &b)], space)?))
}

/// Truncated phonon annihilator `a_site` on the composite space.
pub fn phonon_lowering<T: RealScalar>(space: &CompositeSpace, site: usize) -> Result<OperatorMatrix<T>> {
    if !space.has_phonons() {
        return Err(Error::Unsupported("phonon operators need cutoff M >= 1".into()));
    }
    space.check_site(site)?;
    let a = local::phonon_lowering(space.phonon_cutoff);
    Ok(OperatorMatrix::new(embed_product(&[LocalOp::phonon(site, &a)], space)?))
}

pub fn hcb_number<T: RealScalar>(space: &CompositeSpace, site: usize) -> Result<OperatorMatrix<T>> {
    space.check_site(site)?;
    let n = local::hcb_number();
    Ok(OperatorMatrix::hermitian(embed_product(&[LocalOp::spin(site, &n)], space)?))
}

/// `Σ_j n_j`, diagonal in the occupation basis.
pub fn total_hcb_number<T: RealScalar>(space: &CompositeSpace) -> OperatorMatrix<T> {
    let ds = space.dim_spin();
    let diag: Vec<Complex<T>> = (0..space.dim_total())
        .map(|i| Complex::new(T::from_usize((i % ds).count_ones() as usize), T::zero()))
        .collect();
    OperatorMatrix::hermitian(CMatrix::diagonal(&diag))
}

/// `Σ_j a†_j a_j`, diagonal in the Fock basis.
pub fn total_phonon_number<T: RealScalar>(space: &CompositeSpace) -> OperatorMatrix<T> {
    let ds = space.dim_spin();
    let diag: Vec<Complex<T>> = (0..space.dim_total())
        .map(|i| Complex::new(T::from_usize(space.phonon_total(i / ds)), T::zero()))
        .collect();
    OperatorMatrix::hermitian(CMatrix::diagonal(&diag))
}

/// Total spin components `S^α_total` on the composite space.
pub fn total_spin<T: RealScalar>(space: &CompositeSpace) -> Result<[CMatrix<T>; 3]> {
    let locals = [local::spin_x(), local::spin_y(), local::spin_z()];
    let dim = space.dim_total();
    let mut out = [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)];
    for (component, op) in locals.iter().enumerate() {
        for site in 0..space.n_sites {
            let e = embed_product(&[LocalOp::spin(site, op)], space)?;
            out[component].add_scaled(&Complex::one(), &e);
        }
    }
    Ok(out)
}

/// `S²_total`.
pub fn total_spin_squared<T: RealScalar>(space: &CompositeSpace) -> Result<OperatorMatrix<T>> {
    let [sx, sy, sz] = total_spin::<T>(space)?;
    let mut s2 = sx.try_matmul(&sx)?;
    s2.add_scaled(&Complex::one(), &sy.try_matmul(&sy)?);
    s2.add_scaled(&Complex::one(), &sz.try_matmul(&sz)?);
    Ok(OperatorMatrix::hermitian(s2))
}

/// System-space block `⟨m_ph| op |n_ph⟩` of a composite operator.
pub fn phonon_block<T: RealScalar>(op: &CMatrix<T>, space: &CompositeSpace, m: usize, n: usize) -> CMatrix<T> {
    let ds = space.dim_spin();
    CMatrix::from_fn(ds, ds, |r, c| op[(r + ds * m, c + ds * n)])
}

/// Frobenius norm of `AB − BA`.
pub fn commutator_norm<T: RealScalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<T> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    Ok(a.commutator(b)?.frobenius_norm())
}
