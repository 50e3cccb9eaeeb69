//! Physical Hamiltonians: the infinite-range Heisenberg model, its coupling to
//! local optical phonons, and the Lang–Firsov (polaron) frame split into
//! `H_s + H_env + H_I`.

use num_complex::Complex;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, embed_product, lift_spin_operator, local, phonon_factor_product, CompositeSpace,
    LocalOp, OperatorMatrix,
};
use crate::linalg::{expm, CMatrix};
use crate::scalar::{real, RealScalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T: RealScalar = f64> {
    pub n_sites: usize,
    /// Total exchange scale; the pair coupling is `J = J*/(N-1)`.
    pub j_star: T,
    pub delta: T,
    pub g: T,
    pub omega: T,
    pub phonon_cutoff: usize,
}

impl<T: RealScalar> ModelParams<T> {
    pub fn new(n_sites: usize, j_star: T, delta: T, g: T, omega: T, phonon_cutoff: usize) -> Result<Self> {
        let p = Self {
            n_sites,
            j_star,
            delta,
            g,
            omega,
            phonon_cutoff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.n_sites < 2 {
            return bad("n_sites must be at least 2");
        }
        if self.n_sites > 12 {
            return bad("n_sites above 12 is beyond dense exact diagonalization");
        }
        if !(self.j_star.is_finite() && self.j_star > T::zero()) {
            return bad("j_star must be positive and finite");
        }
        if !(self.delta.is_finite() && self.delta >= T::zero()) {
            return bad("delta must be non-negative and finite");
        }
        if !(self.g.is_finite() && self.g >= T::zero()) {
            return bad("g must be non-negative and finite");
        }
        if !(self.omega.is_finite() && self.omega > T::zero()) {
            return bad("omega must be positive and finite");
        }
        Ok(())
    }

    /// Pair exchange `J = J*/(N-1)`.
    pub fn j(&self) -> T {
        self.j_star / T::from_usize(self.n_sites - 1)
    }

    pub fn strong_coupling(&self) -> bool {
        self.g > T::one()
    }

    pub fn non_adiabatic(&self) -> bool {
        self.j_star / self.omega <= T::one()
    }

    /// Polaron band-narrowing factor `e^{-g²}`.
    pub fn narrowing(&self) -> T {
        (-self.g * self.g).exp()
    }

    pub fn space(&self) -> Result<CompositeSpace> {
        CompositeSpace::new(self.n_sites, self.phonon_cutoff)
    }

    pub fn spin_space(&self) -> Result<CompositeSpace> {
        CompositeSpace::spin_only(self.n_sites)
    }

    pub fn with_cutoff(&self, phonon_cutoff: usize) -> Self {
        Self { phonon_cutoff, ..*self }
    }

    pub fn with_g(&self, g: T) -> Self {
        Self { g, ..*self }
    }

    fn require_phonons(&self) -> Result<CompositeSpace> {
        self.validate()?;
        if self.phonon_cutoff == 0 {
            return Err(Error::Unsupported("phonon cutoff M must be at least 1".into()));
        }
        self.space()
    }
}

/// `b†_i b_j` on the spin factor (`2^N` dimensional).
pub fn hop_operator<T: RealScalar>(n_sites: usize, i: usize, j: usize) -> CMatrix<T> {
    let dim = 1usize << n_sites;
    let mut m = CMatrix::zeros(dim, dim);
    for bits in 0..dim {
        if i == j {
            if bits >> i & 1 == 1 {
                m[(bits, bits)] = Complex::one();
            }
        } else if bits >> j & 1 == 1 && bits >> i & 1 == 0 {
            m[(bits ^ (1 << i) ^ (1 << j), bits)] = Complex::one();
        }
    }
    m
}

/// `Σ_{i<j} [hop (b†_i b_j + H.c.) + zz (n_i − ½)(n_j − ½)]` on the spin factor.
pub fn pair_hamiltonian<T: RealScalar>(n_sites: usize, hop: T, zz: T) -> CMatrix<T> {
    let dim = 1usize << n_sites;
    let half = T::lit(0.5);
    let mut h = CMatrix::zeros(dim, dim);
    for bits in 0..dim {
        let occ = |k: usize| T::from_usize(bits >> k & 1);
        let mut diag = T::zero();
        for i in 0..n_sites {
            for j in i + 1..n_sites {
                diag = diag + zz * (occ(i) - half) * (occ(j) - half);
                if (bits >> i & 1) != (bits >> j & 1) {
                    let flipped = bits ^ (1 << i) ^ (1 << j);
                    h[(flipped, bits)] = h[(flipped, bits)] + real(hop);
                }
            }
        }
        h[(bits, bits)] = real(diag);
    }
    h
}

/// `H_IRHM = J Σ_{i<j} [S_i·S_j + (Δ−1) S^z_i S^z_j]` in hard-core-boson form.
pub fn build_irhm<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    p.validate()?;
    Ok(OperatorMatrix::hermitian(pair_hamiltonian(
        p.n_sites,
        T::lit(0.5) * p.j(),
        p.delta * p.j(),
    )))
}

/// The same model assembled literally from spin-1/2 operators.
pub fn build_irhm_spin_form<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    p.validate()?;
    let space = p.spin_space()?;
    let ops = [local::spin_x::<T>(), local::spin_y(), local::spin_z()];
    let dim = space.dim_total();
    let mut h = CMatrix::zeros(dim, dim);
    let j = real(p.j());
    for i in 0..p.n_sites {
        for k in i + 1..p.n_sites {
            for (c, op) in ops.iter().enumerate() {
                let term = embed_product(&[LocalOp::spin(i, op), LocalOp::spin(k, op)], &space)?;
                let weight = if c == 2 { j * p.delta } else { j };
                h.add_scaled(&weight, &term);
            }
        }
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// IRHM with the anisotropic term written as `Δ[n_i n_j − ½(n_i + n_j)]`, which
/// drops the c-number [`irhm_expansion_constant`].
pub fn build_irhm_expanded<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    p.validate()?;
    let n = p.n_sites;
    let half = T::lit(0.5);
    let mut h = pair_hamiltonian(n, half * p.j(), T::zero());
    for bits in 0..1usize << n {
        let occ = |k: usize| T::from_usize(bits >> k & 1);
        let mut diag = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                diag = diag + p.delta * p.j() * (occ(i) * occ(j) - half * (occ(i) + occ(j)));
            }
        }
        h[(bits, bits)] = real(diag);
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// `Δ J N(N−1)/8`, the constant separating the expanded and symmetric forms.
pub fn irhm_expansion_constant<T: RealScalar>(p: &ModelParams<T>) -> T {
    p.delta * p.j() * T::from_usize(p.n_sites * (p.n_sites - 1)) / T::lit(8.0)
}

fn phonon_energy<T: RealScalar>(p: &ModelParams<T>, space: &CompositeSpace) -> CMatrix<T> {
    hilbert::total_phonon_number::<T>(space)
        .into_matrix()
        .scale(&real(p.omega))
}

/// `gω Σ_j c_j ⊗ (a_j + a†_j)` with `c_j` a diagonal single-site spin operator.
fn linear_coupling<T: RealScalar>(p: &ModelParams<T>, space: &CompositeSpace, c: &CMatrix<T>) -> Result<CMatrix<T>> {
    let a = local::phonon_lowering::<T>(p.phonon_cutoff);
    let x = a.try_add(&a.adjoint())?;
    let dim = space.dim_total();
    let mut h = CMatrix::zeros(dim, dim);
    for site in 0..p.n_sites {
        let term = embed_product(&[LocalOp::spin(site, c), LocalOp::phonon(site, &x)], space)?;
        h.add_scaled(&real(p.g * p.omega), &term);
    }
    Ok(h)
}

fn shifted_number<T: RealScalar>() -> CMatrix<T> {
    let mut n = local::hcb_number::<T>();
    n.add_identity(&real(-T::lit(0.5)));
    n
}

/// `H_T` in hard-core-boson form:
/// `H_IRHM + ω Σ a†a + gω Σ (n_j − ½)(a_j + a†_j)`.
pub fn build_total_hamiltonian<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = p.require_phonons()?;
    let mut h = lift_spin_operator(build_irhm(p)?.matrix(), &space)?;
    h.add_scaled(&Complex::one(), &phonon_energy(p, &space));
    h.add_scaled(&Complex::one(), &linear_coupling(p, &space, &shifted_number())?);
    Ok(OperatorMatrix::hermitian(h))
}

/// `H_T` in spin form: `H_IRHM + gω Σ S^z_i (a_i + a†_i) + ω Σ a†a`.
pub fn build_total_hamiltonian_spin_form<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = p.require_phonons()?;
    let mut h = lift_spin_operator(build_irhm_spin_form(p)?.matrix(), &space)?;
    h.add_scaled(&Complex::one(), &linear_coupling(p, &space, &local::spin_z())?);
    h.add_scaled(&Complex::one(), &phonon_energy(p, &space));
    Ok(OperatorMatrix::hermitian(h))
}

/// Lang–Firsov generator `S = −g Σ_i (n_i − ½)(a_i − a†_i)`, anti-Hermitian.
pub fn lf_generator<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = p.require_phonons()?;
    let a = local::phonon_lowering::<T>(p.phonon_cutoff);
    let x = a.try_sub(&a.adjoint())?;
    let c = shifted_number::<T>();
    let dim = space.dim_total();
    let mut s = CMatrix::zeros(dim, dim);
    for site in 0..p.n_sites {
        let term = embed_product(&[LocalOp::spin(site, &c), LocalOp::phonon(site, &x)], &space)?;
        s.add_scaled(&real(-p.g), &term);
    }
    Ok(OperatorMatrix::new(s))
}

/// `e^S H e^{−S}` by dense matrix exponentials.
pub fn lf_transform<T: RealScalar>(h: &CMatrix<T>, s: &CMatrix<T>) -> Result<OperatorMatrix<T>> {
    if h.rows() != s.rows() || !h.is_square() || !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: s.rows(),
        });
    }
    let forward = expm(s)?;
    let backward = expm(&s.scale(&real(-T::one())))?;
    Ok(OperatorMatrix::new(forward.try_matmul(h)?.try_matmul(&backward)?))
}

/// Per-spin-configuration phonon blocks of `e^S`: block `s` is
/// `⊗_i exp(−g (n_i − ½)(a_i − a†_i))` for the occupations `n_i` of `s`.
pub fn lf_unitary_blocks<T: RealScalar>(p: &ModelParams<T>) -> Result<Vec<CMatrix<T>>> {
    let space = p.require_phonons()?;
    let a = local::phonon_lowering::<T>(p.phonon_cutoff);
    let x = a.try_sub(&a.adjoint())?;
    let half = T::lit(0.5);
    let occupied = expm(&x.scale(&real(-p.g * half)))?;
    let empty = expm(&x.scale(&real(p.g * half)))?;
    (0..space.dim_spin())
        .map(|bits| {
            let locals: Vec<(usize, &CMatrix<T>)> = (0..p.n_sites)
                .map(|i| (i, if bits >> i & 1 == 1 { &occupied } else { &empty }))
                .collect();
            phonon_factor_product(&locals, &space)
        })
        .collect()
}

/// `e^S` assembled from its spin-diagonal blocks.
pub fn lf_unitary<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = p.require_phonons()?;
    let blocks = lf_unitary_blocks(p)?;
    let ds = space.dim_spin();
    let mut u = CMatrix::zeros(space.dim_total(), space.dim_total());
    for (s, block) in blocks.iter().enumerate() {
        for r in 0..space.dim_phonon() {
            for c in 0..space.dim_phonon() {
                u[(s + ds * r, s + ds * c)] = block[(r, c)];
            }
        }
    }
    Ok(OperatorMatrix::unitary(u))
}

/// `U H U†` for `U` block diagonal in the spin configuration.
fn conjugate_spin_diagonal<T: RealScalar>(
    h: &CMatrix<T>,
    blocks: &[CMatrix<T>],
    space: &CompositeSpace,
) -> Result<CMatrix<T>> {
    let (ds, dp) = (space.dim_spin(), space.dim_phonon());
    let adjoints: Vec<CMatrix<T>> = blocks.iter().map(|b| b.adjoint()).collect();
    let mut out = CMatrix::zeros(h.rows(), h.cols());
    for s in 0..ds {
        for t in 0..ds {
            let block = CMatrix::from_fn(dp, dp, |r, c| h[(s + ds * r, t + ds * c)]);
            if block.is_zero() {
                continue;
            }
            let conj = blocks[s].try_matmul(&block)?.try_matmul(&adjoints[t])?;
            for r in 0..dp {
                for c in 0..dp {
                    out[(s + ds * r, t + ds * c)] = conj[(r, c)];
                }
            }
        }
    }
    Ok(out)
}

/// Reference for the polaron-frame Hamiltonian at cutoff `M`: `H_T` and `e^S`
/// are built at the larger `working_cutoff`, transformed there, and the
/// result is restricted to states with every occupation at most `M`. This
/// removes the Fock-ceiling artifacts of transforming at `M` directly.
pub fn lf_reference<T: RealScalar>(p: &ModelParams<T>, working_cutoff: usize) -> Result<OperatorMatrix<T>> {
    let target = p.require_phonons()?;
    if working_cutoff < p.phonon_cutoff {
        return Err(Error::InvalidArgument(
            "working cutoff must not be below the target cutoff".into(),
        ));
    }
    let big = p.with_cutoff(working_cutoff);
    let space = big.space()?;
    let h = build_total_hamiltonian(&big)?;
    let transformed = conjugate_spin_diagonal(h.matrix(), &lf_unitary_blocks(&big)?, &space)?;
    let idx = space.restriction_indices(&target)?;
    Ok(OperatorMatrix::hermitian(transformed.select(&idx, &idx)))
}

/// One ordered-pair term `amplitude · b†_i b_j ⊗ (X_ij − 1)` of `H_I`, with
/// `X_ij = exp[g(a†_i − a†_j)] exp[−g(a_i − a_j)] = E_i(g) E_j(−g)` and
/// `E(c) = exp(c a†) exp(−c a)`.
#[derive(Clone, Debug)]
pub struct InteractionTerm<T: RealScalar> {
    pub i: usize,
    pub j: usize,
    pub amplitude: T,
    /// `E(g)` on site `i`.
    pub left: CMatrix<T>,
    /// `E(−g)` on site `j`.
    pub right: CMatrix<T>,
}

impl<T: RealScalar> InteractionTerm<T> {
    /// `amplitude · b†_i b_j` on the spin factor.
    pub fn system_operator(&self, n_sites: usize) -> CMatrix<T> {
        hop_operator::<T>(n_sites, self.i, self.j).scale(&real(self.amplitude))
    }

    /// Dense `X_ij` on the phonon factor.
    pub fn bath_operator(&self, space: &CompositeSpace) -> Result<CMatrix<T>> {
        phonon_factor_product(&[(self.i, &self.left), (self.j, &self.right)], space)
    }

    /// `X_ij v` for a phonon-factor vector.
    pub fn apply_bath(&self, space: &CompositeSpace, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let w = hilbert::apply_phonon_local(space, self.j, &self.right, v);
        hilbert::apply_phonon_local(space, self.i, &self.left, &w)
    }
}

/// The `N(N−1)` ordered-pair terms of `H_I` (the `H.c.` part is the `(j, i)` term).
pub fn interaction_terms<T: RealScalar>(p: &ModelParams<T>) -> Result<Vec<InteractionTerm<T>>> {
    p.require_phonons()?;
    let amplitude = T::lit(0.5) * p.j() * p.narrowing();
    let left = local::normal_ordered_displacement(p.phonon_cutoff, p.g);
    let right = local::normal_ordered_displacement(p.phonon_cutoff, -p.g);
    let mut terms = Vec::new();
    for i in 0..p.n_sites {
        for j in 0..p.n_sites {
            if i != j {
                terms.push(InteractionTerm {
                    i,
                    j,
                    amplitude,
                    left: left.clone(),
                    right: right.clone(),
                });
            }
        }
    }
    Ok(terms)
}

/// Composite `H_I`.
pub fn build_interaction<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let space = p.require_phonons()?;
    let dim = space.dim_total();
    let mut h = CMatrix::zeros(dim, dim);
    for term in interaction_terms(p)? {
        let mut bath = term.bath_operator(&space)?;
        bath.add_identity(&real(-T::one()));
        h.add_scaled(&Complex::one(), &bath.kron(&term.system_operator(p.n_sites)));
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// Polaron-frame split. `h_s + h_env + h_i + polaron_shift` equals
/// `e^S h_total e^{−S}`; the constant `polaron_shift = −N g² ω / 4` is kept
/// separate from `h0`.
#[derive(Clone, Debug)]
pub struct HamiltonianSplit<T: RealScalar> {
    pub space: CompositeSpace,
    pub h_total: OperatorMatrix<T>,
    pub h0: OperatorMatrix<T>,
    pub h_s: OperatorMatrix<T>,
    pub h_env: OperatorMatrix<T>,
    pub h_i: OperatorMatrix<T>,
    pub polaron_shift: T,
}

impl<T: RealScalar> HamiltonianSplit<T> {
    /// `h0 + h_i + polaron_shift`.
    pub fn transformed(&self) -> CMatrix<T> {
        let mut t = self.h0.try_add(&self.h_i).expect("equal dimensions");
        t.add_identity(&real(self.polaron_shift));
        t
    }
}

/// System Hamiltonian `H_s` on the spin factor (hopping reduced by `e^{−g²}`).
pub fn build_system_hamiltonian<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    p.validate()?;
    Ok(OperatorMatrix::hermitian(pair_hamiltonian(
        p.n_sites,
        T::lit(0.5) * p.j() * p.narrowing(),
        p.delta * p.j(),
    )))
}

pub fn polaron_shift<T: RealScalar>(p: &ModelParams<T>) -> T {
    -T::from_usize(p.n_sites) * p.g * p.g * p.omega / T::lit(4.0)
}

pub fn build_split<T: RealScalar>(p: &ModelParams<T>) -> Result<HamiltonianSplit<T>> {
    let space = p.require_phonons()?;
    let h_total = build_total_hamiltonian(p)?;
    let h_s = lift_spin_operator(build_system_hamiltonian(p)?.matrix(), &space)?;
    let h_env = phonon_energy(p, &space);
    let h0 = h_s.try_add(&h_env)?;
    let h_i = build_interaction(p)?;
    Ok(HamiltonianSplit {
        space,
        h_total,
        h0: OperatorMatrix::hermitian(h0),
        h_s: OperatorMatrix::hermitian(h_s),
        h_env: OperatorMatrix::hermitian(h_env),
        h_i,
        polaron_shift: polaron_shift(p),
    })
}

/// `‖(h_s + h_env + h_i + shift) − reference‖_F / ‖H_T‖_F` with the reference
/// transformed at twice the cutoff.
pub fn split_residual<T: RealScalar>(p: &ModelParams<T>) -> Result<T> {
    let split = build_split(p)?;
    let reference = lf_reference(p, 2 * p.phonon_cutoff)?;
    let diff = split.transformed().try_sub(reference.matrix())?;
    Ok(diff.frobenius_norm() / split.h_total.frobenius_norm())
}

/// `‖⟨0_ph| h_i |0_ph⟩‖_F`.
pub fn vacuum_interaction_norm<T: RealScalar>(p: &ModelParams<T>) -> Result<T> {
    let space = p.require_phonons()?;
    let h_i = build_interaction(p)?;
    Ok(hilbert::phonon_block(h_i.matrix(), &space, 0, 0).frobenius_norm())
}

/// Single-particle spectrum of the reduced hopping term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSpectrum<T: RealScalar = f64> {
    pub epsilon_0: T,
    /// `ε_k` for every `k ≠ 0` (degenerate, `N − 1` copies).
    pub epsilon_k: T,
    /// Uniform offset `−0.5 J e^{−g²}` common to every `k`.
    pub shift: T,
    /// `ε_0 − ε_k`.
    pub gap: T,
}

pub fn hcb_excitation_spectrum<T: RealScalar>(p: &ModelParams<T>) -> Result<ExcitationSpectrum<T>> {
    p.validate()?;
    let half = T::lit(0.5);
    let n = T::from_usize(p.n_sites);
    let nm1 = T::from_usize(p.n_sites - 1);
    let shift = -half * p.j() * p.narrowing();
    let epsilon_0 = half * p.j_star * (n / nm1) * p.narrowing() + shift;
    let epsilon_k = shift;
    Ok(ExcitationSpectrum {
        epsilon_0,
        epsilon_k,
        shift,
        gap: epsilon_0 - epsilon_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{commutator_norm, total_hcb_number, total_spin, total_spin_squared};
    use crate::linalg::eigh;

    fn params(n: usize, j_star: f64, delta: f64, g: f64, m: usize) -> ModelParams<f64> {
        ModelParams::new(n, j_star, delta, g, 1.0, m).unwrap()
    }

    fn sorted_eigs(m: &CMatrix<f64>) -> Vec<f64> {
        eigh(m).unwrap().values
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(1, 1.0, 1.0, 1.0, 1.0, 2).is_err());
        assert!(ModelParams::new(3, 0.0, 1.0, 1.0, 1.0, 2).is_err());
        assert!(ModelParams::new(3, 1.0, -0.1, 1.0, 1.0, 2).is_err());
        assert!(ModelParams::new(3, 1.0, 1.0, f64::NAN, 1.0, 2).is_err());
        let p = params(3, 0.1, 1.0, 2.0, 2);
        assert!((p.j() - 0.05).abs() < 1e-16);
        assert!(p.strong_coupling() && p.non_adiabatic());
        assert!(!params(3, 2.0, 1.0, 1.0, 2).non_adiabatic());
    }

    #[test]
    fn two_spin_spectrum() {
        // Singlet at -3J/4, triplet at J/4.
        let p = params(2, 1.0, 1.0, 0.0, 0);
        let e = sorted_eigs(build_irhm(&p).unwrap().matrix());
        let expect = [-0.75, 0.25, 0.25, 0.25];
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn irhm_conserves_total_spin() {
        for n in 2..=5 {
            for &delta in &[0.0, 0.4, 1.0, 2.5] {
                let p = params(n, 1.0, delta, 0.0, 0);
                let h = build_irhm(&p).unwrap();
                let s = CompositeSpace::spin_only(n).unwrap();
                let sz = &total_spin::<f64>(&s).unwrap()[2];
                let s2 = total_spin_squared::<f64>(&s).unwrap();
                assert!(commutator_norm(&h, sz).unwrap() < 1e-12);
                assert!(commutator_norm(&h, &s2).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_case_is_casimir() {
        for n in 2..=5 {
            let p = params(n, 1.3, 1.0, 0.0, 0);
            let h = build_irhm(&p).unwrap();
            let s = CompositeSpace::spin_only(n).unwrap();
            let mut casimir = total_spin_squared::<f64>(&s).unwrap().into_matrix();
            casimir.add_identity(&real(-0.75 * n as f64));
            let casimir = casimir.scale(&real(0.5 * p.j()));
            assert!(h.try_sub(&casimir).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn hcb_form_equals_spin_form() {
        for n in 2..=4 {
            let p = params(n, 0.7, 1.7, 0.0, 0);
            let a = build_irhm(&p).unwrap();
            let b = build_irhm_spin_form(&p).unwrap();
            assert!(a.try_sub(&b).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn expanded_form_differs_by_constant() {
        let p = params(4, 0.9, 1.3, 0.0, 0);
        let mut expanded = build_irhm_expanded(&p).unwrap().into_matrix();
        expanded.add_identity(&real(irhm_expansion_constant(&p)));
        assert!(expanded.try_sub(&build_irhm(&p).unwrap()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn decoupled_limit() {
        let p = params(2, 1.0, 1.0, 0.0, 3);
        let s = p.space().unwrap();
        let h = build_total_hamiltonian(&p).unwrap();
        let mut expect = lift_spin_operator(build_irhm(&p).unwrap().matrix(), &s).unwrap();
        expect.add_scaled(&Complex::one(), &total_phonon_number::<f64>(&s));
        assert_eq!(h.try_sub(&expect).unwrap().max_abs(), 0.0);
    }

    use crate::hilbert::total_phonon_number;

    #[test]
    fn total_hamiltonian_conserves_particle_number() {
        let p = params(2, 0.1, 1.0, 1.0, 2);
        let h = build_total_hamiltonian(&p).unwrap();
        let n = total_hcb_number::<f64>(&p.space().unwrap());
        assert!(commutator_norm(&h, &n).unwrap() < 1e-12);
        h.verify().unwrap();
    }

    #[test]
    fn total_hamiltonian_spin_and_hcb_forms() {
        let p = params(2, 0.4, 0.8, 1.2, 2);
        let a = build_total_hamiltonian(&p).unwrap();
        let b = build_total_hamiltonian_spin_form(&p).unwrap();
        let (ea, eb) = (sorted_eigs(&a), sorted_eigs(&b));
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.try_sub(&b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn total_hamiltonian_needs_phonons() {
        assert!(matches!(
            build_total_hamiltonian(&params(2, 1.0, 1.0, 1.0, 0)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn generator_properties() {
        assert!(lf_generator(&params(2, 1.0, 1.0, 0.0, 3)).unwrap().is_zero());
        let s = lf_generator(&params(2, 1.0, 1.0, 1.5, 3)).unwrap();
        assert_eq!(s.try_add(&s.adjoint()).unwrap().max_abs(), 0.0);
        let u = OperatorMatrix::unitary(expm(&lf_generator(&params(2, 1.0, 1.0, 1.0, 8)).unwrap()).unwrap());
        u.verify().unwrap();
    }

    #[test]
    fn local_unitary_matches_dense_exponential() {
        let p = params(2, 1.0, 1.0, 1.1, 4);
        let dense = expm(&lf_generator(&p).unwrap()).unwrap();
        let local = lf_unitary(&p).unwrap();
        assert!(dense.try_sub(&local).unwrap().max_abs() < 1e-12);
        local.verify().unwrap();
    }

    #[test]
    fn transform_trivial_and_inverse() {
        let p = params(2, 0.3, 1.0, 1.0, 3);
        let h = build_total_hamiltonian(&p).unwrap();
        let zero = CMatrix::zeros(h.rows(), h.rows());
        assert!(lf_transform(&h, &zero).unwrap().try_sub(&h).unwrap().max_abs() < 1e-14);
        let s = lf_generator(&p).unwrap();
        let there = lf_transform(&h, &s).unwrap();
        let back = lf_transform(&there, &s.scale(&real(-1.0))).unwrap();
        assert!(back.try_sub(&h).unwrap().max_abs() < 1e-10);
        assert!(lf_transform(&h, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn transform_preserves_spectrum_and_trace() {
        for m in [4, 6, 8] {
            let p = params(2, 0.1, 1.0, 1.0, m);
            let h = build_total_hamiltonian(&p).unwrap();
            let t = lf_transform(&h, &lf_generator(&p).unwrap()).unwrap();
            let (eh, et) = (sorted_eigs(&h), sorted_eigs(&t));
            for k in 0..6 {
                assert!((eh[k] - et[k]).abs() < 1e-10);
            }
            assert!((h.trace() - t.trace()).norm() < 1e-9);
        }
    }

    #[test]
    fn decoupled_split() {
        let p = params(3, 0.5, 1.0, 0.0, 2);
        let split = build_split(&p).unwrap();
        assert!(split.h_i.is_zero());
        let expect = lift_spin_operator(build_irhm(&p).unwrap().matrix(), &split.space).unwrap();
        assert_eq!(split.h_s.matrix(), &expect);
        assert_eq!(split.polaron_shift, 0.0);
        assert_eq!(split.h0.try_sub(&split.h_s.try_add(&split.h_env).unwrap()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn interaction_is_hermitian_and_sums_terms() {
        let p = params(3, 0.5, 1.0, 0.9, 2);
        let h = build_interaction(&p).unwrap();
        h.verify().unwrap();
        let terms = interaction_terms(&p).unwrap();
        assert_eq!(terms.len(), 6);
        // Each X_ij equals the product of the two full (non-normal-ordered) exponentials.
        let s = p.space().unwrap();
        let a = |site| {
            let loc = local::phonon_lowering::<f64>(2);
            phonon_factor_product(&[(site, &loc)], &s).unwrap()
        };
        let (a0, a1) = (a(0), a(1));
        let diff = a0.try_sub(&a1).unwrap();
        let plus = expm(&diff.adjoint().scale(&real(0.9))).unwrap();
        let minus = expm(&diff.scale(&real(-0.9))).unwrap();
        let x = plus.try_matmul(&minus).unwrap();
        let t01 = terms.iter().find(|t| t.i == 0 && t.j == 1).unwrap();
        assert!(t01.bath_operator(&s).unwrap().try_sub(&x).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn split_matches_transform_on_ladder() {
        let mut last = f64::INFINITY;
        for m in [4, 6, 8] {
            let r = split_residual(&params(2, 0.1, 1.0, 1.0, m)).unwrap();
            assert!(r < last, "residual {r} at M={m} not below {last}");
            last = r;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn vacuum_block_vanishes() {
        assert!(vacuum_interaction_norm(&params(2, 0.1, 1.0, 1.0, 8)).unwrap() < 1e-10);
        assert_eq!(vacuum_interaction_norm(&params(2, 0.1, 1.0, 0.0, 8)).unwrap(), 0.0);
    }

    #[test]
    fn spectrum_two_sites() {
        let sp = hcb_excitation_spectrum(&params(2, 1.0, 1.0, 0.0, 0)).unwrap();
        assert!((sp.gap - 1.0).abs() < 1e-15);
        let h = build_system_hamiltonian(&params(2, 1.0, 0.0, 0.0, 0)).unwrap();
        let e = sorted_eigs(&h.select(&[1, 2], &[1, 2]));
        assert!((e[1] - e[0] - sp.gap).abs() < 1e-15);
    }

    #[test]
    fn spectrum_suppressed_at_large_coupling() {
        let sp = hcb_excitation_spectrum(&params(4, 1.0, 1.0, 30.0, 0)).unwrap();
        assert_eq!(sp.epsilon_0.abs() + sp.epsilon_k.abs(), 0.0);
    }

    #[test]
    fn spectrum_matches_single_particle_sector() {
        let p = params(4, 1.0, 0.0, 1.0, 0);
        let sp = hcb_excitation_spectrum(&p).unwrap();
        let h = build_system_hamiltonian(&p).unwrap();
        let one: Vec<usize> = (0..4).map(|i| 1 << i).collect();
        let e = sorted_eigs(&h.select(&one, &one));
        for ek in &e[..3] {
            assert!((ek - sp.epsilon_k).abs() < 1e-12);
        }
        assert!((e[3] - sp.epsilon_0).abs() < 1e-12);
    }
}
