//! Schrieffer–Wolff sums over phonon intermediate states.
//!
//! `H_I = Σ_t s_t ⊗ Y_t` with `s_t = amplitude·b†_i b_j` and `Y_t = X_ij − 1`.
//! With `Q = Σ_{m≠0} |m⟩⟨m| / ω_m` on the phonon factor,
//! `H2 = −Σ_{t,t'} ⟨0|Y_t Q Y_t'|0⟩ s_t s_t'` and
//! `H3 = Σ_{t1,t2,t3} ⟨0|Y_t1 Q Y_t2 Q Y_t3|0⟩ s_t1 s_t2 s_t3`.
//! The coefficients only need phonon-factor vectors, so the composite matrix
//! is never formed. The `_composite` variants extract the blocks
//! `⟨m|H_I|n⟩` from the dense composite `H_I` instead.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hilbert::{self, CompositeSpace, OperatorMatrix};
use crate::linalg::CMatrix;
use crate::models::{build_interaction, interaction_terms, InteractionTerm, ModelParams};
use crate::scalar::{real, RealScalar};

type Vector<T> = Vec<Complex<T>>;

fn require_cutoff<T: RealScalar>(p: &ModelParams<T>, required: usize) -> Result<CompositeSpace> {
    p.validate()?;
    if p.phonon_cutoff < required {
        return Err(Error::InsufficientCutoff {
            cutoff: p.phonon_cutoff,
            required,
        });
    }
    p.space()
}

/// `ω_m = ω · (total occupation of m)` for every phonon-factor basis state.
pub fn phonon_energies<T: RealScalar>(p: &ModelParams<T>, space: &CompositeSpace) -> Vec<T> {
    (0..space.dim_phonon())
        .map(|m| p.omega * T::from_usize(space.phonon_total(m)))
        .collect()
}

struct TermAlgebra<T: RealScalar> {
    space: CompositeSpace,
    terms: Vec<InteractionTerm<T>>,
    adjoint_factors: Vec<(CMatrix<T>, CMatrix<T>)>,
    energies: Vec<T>,
}

impl<T: RealScalar> TermAlgebra<T> {
    fn new(p: &ModelParams<T>, space: CompositeSpace) -> Result<Self> {
        let terms = interaction_terms(p)?;
        let adjoint_factors = terms.iter().map(|t| (t.left.adjoint(), t.right.adjoint())).collect();
        Ok(Self {
            energies: phonon_energies(p, &space),
            space,
            terms,
            adjoint_factors,
        })
    }

    fn vacuum(&self) -> Vector<T> {
        let mut v = vec![Complex::zero(); self.space.dim_phonon()];
        v[0] = Complex::one();
        v
    }

    /// `Y_t v`.
    fn apply(&self, t: usize, v: &[Complex<T>]) -> Vector<T> {
        let mut out = self.terms[t].apply_bath(&self.space, v);
        for (o, x) in out.iter_mut().zip(v) {
            *o = *o - *x;
        }
        out
    }

    /// `Y_t† v`.
    fn apply_adjoint(&self, t: usize, v: &[Complex<T>]) -> Vector<T> {
        let term = &self.terms[t];
        let (left, right) = &self.adjoint_factors[t];
        let w = hilbert::apply_phonon_local(&self.space, term.i, left, v);
        let mut out = hilbert::apply_phonon_local(&self.space, term.j, right, &w);
        for (o, x) in out.iter_mut().zip(v) {
            *o = *o - *x;
        }
        out
    }

    /// `Q v`: drop the vacuum component and divide by `ω_m`.
    fn resolve(&self, mut v: Vector<T>) -> Vector<T> {
        v[0] = Complex::zero();
        for (x, e) in v.iter_mut().zip(&self.energies).skip(1) {
            *x = x.unscale(*e);
        }
        v
    }

    fn system(&self, t: usize) -> CMatrix<T> {
        self.terms[t].system_operator(self.space.n_sites)
    }
}

/// `C2[t][t'] = ⟨0|Y_t Q Y_t'|0⟩`.
fn second_order_coefficients<T: RealScalar>(alg: &TermAlgebra<T>) -> Vec<Vec<Complex<T>>> {
    let vac = alg.vacuum();
    let bras: Vec<Vector<T>> = (0..alg.terms.len()).map(|t| alg.apply_adjoint(t, &vac)).collect();
    let kets: Vec<Vector<T>> = (0..alg.terms.len()).map(|t| alg.resolve(alg.apply(t, &vac))).collect();
    bras.iter()
        .map(|b| kets.iter().map(|k| CMatrix::inner(b, k)).collect())
        .collect()
}

/// Second-order effective Hamiltonian on the spin factor from the SW sum.
pub fn build_h2_sw<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = require_cutoff(p, 2)?;
    let alg = TermAlgebra::new(p, space)?;
    let c2 = second_order_coefficients(&alg);
    let systems: Vec<CMatrix<T>> = (0..alg.terms.len()).map(|t| alg.system(t)).collect();
    let ds = space.dim_spin();
    let mut h = CMatrix::zeros(ds, ds);
    for (t1, row) in c2.iter().enumerate() {
        for (t2, c) in row.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            h.add_scaled(&-*c, &systems[t1].try_matmul(&systems[t2])?);
        }
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// `H3` coefficients `C3[t1][t2][t3] = ⟨0|Y_t1 Q Y_t2 Q Y_t3|0⟩`.
#[allow(clippy::needless_range_loop)]
fn third_order_coefficients<T: RealScalar>(alg: &TermAlgebra<T>) -> Vec<Vec<Vec<Complex<T>>>> {
    let n = alg.terms.len();
    let vac = alg.vacuum();
    let bras: Vec<Vector<T>> = (0..n).map(|t| alg.apply_adjoint(t, &vac)).collect();
    let first: Vec<Vector<T>> = (0..n).map(|t| alg.resolve(alg.apply(t, &vac))).collect();
    let mut c3 = vec![vec![vec![Complex::zero(); n]; n]; n];
    for (t3, w) in first.iter().enumerate() {
        for t2 in 0..n {
            let z = alg.resolve(alg.apply(t2, w));
            for (t1, b) in bras.iter().enumerate() {
                c3[t1][t2][t3] = CMatrix::inner(b, &z);
            }
        }
    }
    c3
}

/// Third-order effective Hamiltonian on the spin factor from the SW sum.
pub fn build_h3_sw<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = require_cutoff(p, 3)?;
    let alg = TermAlgebra::new(p, space)?;
    let c3 = third_order_coefficients(&alg);
    let systems: Vec<CMatrix<T>> = (0..alg.terms.len()).map(|t| alg.system(t)).collect();
    let ds = space.dim_spin();
    let mut h = CMatrix::zeros(ds, ds);
    for (t1, plane) in c3.iter().enumerate() {
        for (t2, row) in plane.iter().enumerate() {
            let pair = systems[t1].try_matmul(&systems[t2])?;
            if pair.is_zero() {
                continue;
            }
            for (t3, c) in row.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                h.add_scaled(c, &pair.try_matmul(&systems[t3])?);
            }
        }
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// [`build_h2_sw`] by extracting `A_m = ⟨0|H_I|m⟩` from the dense composite `H_I`.
pub fn build_h2_sw_composite<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = require_cutoff(p, 2)?;
    let h_i = build_interaction(p)?.into_matrix();
    let energies = phonon_energies(p, &space);
    let ds = space.dim_spin();
    let mut h = CMatrix::zeros(ds, ds);
    for (m, &e_m) in energies.iter().enumerate().skip(1) {
        let a = hilbert::phonon_block(&h_i, &space, 0, m);
        let a_dag = hilbert::phonon_block(&h_i, &space, m, 0);
        h.add_scaled(&real(-T::one() / e_m), &a.try_matmul(&a_dag)?);
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// [`build_h3_sw`] by extracting every block `⟨m|H_I|n⟩` from the dense composite `H_I`.
pub fn build_h3_sw_composite<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = require_cutoff(p, 3)?;
    let h_i = build_interaction(p)?.into_matrix();
    let energies = phonon_energies(p, &space);
    let (ds, dp) = (space.dim_spin(), space.dim_phonon());
    let mut h = CMatrix::zeros(ds, ds);
    let from_vacuum: Vec<CMatrix<T>> = (0..dp).map(|m| hilbert::phonon_block(&h_i, &space, 0, m)).collect();
    let to_vacuum: Vec<CMatrix<T>> = (0..dp).map(|n| hilbert::phonon_block(&h_i, &space, n, 0)).collect();
    for m in 1..dp {
        if from_vacuum[m].is_zero() {
            continue;
        }
        for n in 1..dp {
            if to_vacuum[n].is_zero() {
                continue;
            }
            let middle = hilbert::phonon_block(&h_i, &space, m, n);
            if middle.is_zero() {
                continue;
            }
            let chain = from_vacuum[m].try_matmul(&middle)?.try_matmul(&to_vacuum[n])?;
            h.add_scaled(&real(T::one() / (energies[m] * energies[n])), &chain);
        }
    }
    Ok(OperatorMatrix::hermitian(h))
}
