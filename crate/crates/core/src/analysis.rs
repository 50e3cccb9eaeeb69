//! Quantum-number labelling of the IRHM eigenbasis, coherence metrics, and the
//! two-qubit polaron-dressing example.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dynamics::{partial_trace_phonons, partial_trace_pure, ExactPropagator, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{self, local, CompositeSpace};
use crate::linalg::{eigh, expm, CMatrix};
use crate::models::{build_irhm, build_split, build_total_hamiltonian, lf_unitary, ModelParams};
use crate::scalar::{real, RealScalar};

pub const DEFAULT_MAX_EIGENBASIS_SITES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenLabel<T: RealScalar = f64> {
    pub energy: T,
    pub sz_total: T,
    pub s_total: T,
    /// Position within the `(energy, sz_total, s_total)` group.
    pub multiplet_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState<T: RealScalar> {
    pub label: EigenLabel<T>,
    pub vector: Vec<Complex<T>>,
}

/// Simultaneous eigenbasis of `H_IRHM`, `S^z_total` and `S²_total` with `N` up
/// to [`DEFAULT_MAX_EIGENBASIS_SITES`].
pub fn irhm_eigenbasis<T: RealScalar>(p: &ModelParams<T>) -> Result<Vec<LabeledState<T>>> {
    irhm_eigenbasis_with_limit(p, DEFAULT_MAX_EIGENBASIS_SITES)
}

pub fn irhm_eigenbasis_with_limit<T: RealScalar>(p: &ModelParams<T>, max_sites: usize) -> Result<Vec<LabeledState<T>>> {
    p.validate()?;
    if p.n_sites > max_sites {
        return Err(Error::InvalidArgument(format!(
            "eigenbasis labelling is limited to N <= {max_sites} (got {})",
            p.n_sites
        )));
    }
    let n = p.n_sites;
    let h = build_irhm(p)?;
    let s2 = hilbert::total_spin_squared::<T>(&CompositeSpace::spin_only(n)?)?;
    let energy_tol = T::lit(1e-9) * h.max_abs().max(T::one());
    let half_n = T::from_usize(n) * T::lit(0.5);

    let mut states = Vec::with_capacity(1 << n);
    for k in 0..=n {
        let idx: Vec<usize> = (0..1usize << n).filter(|b| b.count_ones() as usize == k).collect();
        let sz = T::from_usize(k) - half_n;
        let h_k = h.select(&idx, &idx);
        let s2_k = s2.select(&idx, &idx);
        let eig = eigh(&h_k)?;
        for energy_group in clusters(&eig.values, energy_tol) {
            let w = columns(&eig.vectors, &energy_group);
            let s2_sub = s2_k.in_basis(&w)?;
            let s_eig = eigh(&s2_sub)?;
            for spin_group in clusters(&s_eig.values, T::lit(1e-8)) {
                let c = columns(&s_eig.vectors, &spin_group);
                let sub = w.try_matmul(&c)?;
                let lambda = spin_group.iter().map(|&i| s_eig.values[i]).sum::<T>() / T::from_usize(spin_group.len());
                let s_total = spin_from_casimir(lambda);
                for (multiplet_index, v) in gram_ordered(&sub).into_iter().enumerate() {
                    let mut full = vec![Complex::zero(); 1 << n];
                    for (r, &b) in idx.iter().enumerate() {
                        full[b] = v[r];
                    }
                    let energy = h.sandwich(&full, &full).re;
                    states.push(LabeledState {
                        label: EigenLabel {
                            energy,
                            sz_total: sz,
                            s_total,
                            multiplet_index,
                        },
                        vector: full,
                    });
                }
            }
        }
    }

    let mut energies: Vec<T> = states.iter().map(|s| s.label.energy).collect();
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let level = |e: T| -> usize {
        let mut lvl = 0;
        for w in energies.windows(2) {
            if w[1] > e + energy_tol {
                break;
            }
            if w[1] - w[0] > energy_tol {
                lvl += 1;
            }
        }
        lvl
    };
    let mut keyed: Vec<(usize, LabeledState<T>)> = states.into_iter().map(|s| (level(s.label.energy), s)).collect();
    keyed.sort_by(|(la, a), (lb, b)| {
        la.cmp(lb)
            .then(a.label.sz_total.partial_cmp(&b.label.sz_total).unwrap_or(Ordering::Equal))
            .then(a.label.s_total.partial_cmp(&b.label.s_total).unwrap_or(Ordering::Equal))
            .then(a.label.multiplet_index.cmp(&b.label.multiplet_index))
    });
    Ok(keyed.into_iter().map(|(_, s)| s).collect())
}

/// Consecutive runs of sorted values closer than `tol`.
fn clusters<T: RealScalar>(values: &[T], tol: T) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(group) if v - values[*group.last().expect("non-empty")] <= tol => group.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn columns<T: RealScalar>(m: &CMatrix<T>, cols: &[usize]) -> CMatrix<T> {
    let rows: Vec<usize> = (0..m.rows()).collect();
    m.select(&rows, cols)
}

fn spin_from_casimir<T: RealScalar>(lambda: T) -> T {
    let s = ((T::one() + T::lit(4.0) * lambda.max(T::zero())).sqrt() - T::one()) * T::lit(0.5);
    (s * T::lit(2.0)).round() * T::lit(0.5)
}

/// Orthonormal basis of the column span of `w`, built by Gram–Schmidt on the
/// projections of the standard basis vectors in index order. The result
/// depends only on the span, which fixes both rotations and phases.
fn gram_ordered<T: RealScalar>(w: &CMatrix<T>) -> Vec<Vec<Complex<T>>> {
    let dim = w.rows();
    let rank = w.cols();
    let span: Vec<Vec<Complex<T>>> = (0..rank).map(|c| w.column(c)).collect();
    let mut out: Vec<Vec<Complex<T>>> = Vec::with_capacity(rank);
    for r in 0..dim {
        if out.len() == rank {
            break;
        }
        let mut u: Vec<Complex<T>> = vec![Complex::zero(); dim];
        for col in &span {
            let coeff = col[r].conj();
            for (x, y) in u.iter_mut().zip(col) {
                *x = *x + y * coeff;
            }
        }
        for prev in &out {
            let overlap = CMatrix::inner(prev, &u);
            for (x, y) in u.iter_mut().zip(prev) {
                *x = *x - y * overlap;
            }
        }
        let norm = CMatrix::inner(&u, &u).re.sqrt();
        if norm > T::lit(1e-6) {
            out.push(u.into_iter().map(|z| z.unscale(norm)).collect());
        }
    }
    out
}

/// Largest residual of `H|v⟩ = E|v⟩`, `S^z|v⟩ = sz|v⟩`, `S²|v⟩ = S(S+1)|v⟩`
/// and of orthonormality over the labelled basis.
pub fn label_residual<T: RealScalar>(p: &ModelParams<T>, states: &[LabeledState<T>]) -> Result<T> {
    let h = build_irhm(p)?;
    let space = CompositeSpace::spin_only(p.n_sites)?;
    let [_, _, sz] = hilbert::total_spin::<T>(&space)?;
    let s2 = hilbert::total_spin_squared::<T>(&space)?;
    let mut worst = T::zero();
    let mut check = |op: &CMatrix<T>, v: &[Complex<T>], value: T| {
        let r = op.matvec(v);
        let dev = r
            .iter()
            .zip(v)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b * value).norm()));
        worst = worst.max(dev);
    };
    for s in states {
        let l = &s.label;
        check(&h, &s.vector, l.energy);
        check(&sz, &s.vector, l.sz_total);
        check(&s2, &s.vector, l.s_total * (l.s_total + T::one()));
    }
    for (a, sa) in states.iter().enumerate() {
        for (b, sb) in states.iter().enumerate() {
            let expect = if a == b { T::one() } else { T::zero() };
            worst = worst.max((CMatrix::inner(&sa.vector, &sb.vector) - real(expect)).norm());
        }
    }
    Ok(worst)
}

/// Largest off-diagonal magnitude of `op` in the labelled basis.
pub fn off_diagonal_residual<T: RealScalar>(op: &CMatrix<T>, states: &[LabeledState<T>]) -> T {
    let mut worst = T::zero();
    for (a, sa) in states.iter().enumerate() {
        let image = op.matvec(&sa.vector);
        for (b, sb) in states.iter().enumerate() {
            if a != b {
                worst = worst.max(CMatrix::inner(&sb.vector, &image).norm());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSeries<T: RealScalar = f64> {
    pub pair: (EigenLabel<T>, EigenLabel<T>),
    pub times: Vec<T>,
    pub magnitudes: Vec<T>,
    /// Unwrapped `arg ⟨n|ρ|m⟩`.
    pub phases: Vec<T>,
}

impl<T: RealScalar> CoherenceSeries<T> {
    /// `max |ρ_nm| − min |ρ_nm|` over the samples.
    pub fn magnitude_drift(&self) -> T {
        let max = self.magnitudes.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let min = self.magnitudes.iter().fold(T::infinity(), |a, &b| a.min(b));
        max - min
    }
}

/// `|⟨n|ρ(t)|m⟩|` and its unwrapped phase along a trajectory.
pub fn coherence_profile<T: RealScalar>(
    trajectory: &Trajectory<T>,
    basis: &[LabeledState<T>],
    pair: (usize, usize),
) -> Result<CoherenceSeries<T>> {
    let (n, m) = pair;
    if n >= basis.len() || m >= basis.len() {
        return Err(Error::InvalidArgument(format!(
            "pair ({n}, {m}) outside a basis of {} states",
            basis.len()
        )));
    }
    let elements: Vec<Complex<T>> = trajectory
        .states
        .iter()
        .map(|rho| rho.element(&basis[n].vector, &basis[m].vector))
        .collect();
    Ok(CoherenceSeries {
        pair: (basis[n].label, basis[m].label),
        times: trajectory.times.clone(),
        magnitudes: elements.iter().map(|z| z.norm()).collect(),
        phases: unwrap_phases(&elements),
    })
}

/// Nearest-branch continuation of `arg z` from sample to sample.
pub fn unwrap_phases<T: RealScalar>(values: &[Complex<T>]) -> Vec<T> {
    let two_pi = T::lit(2.0 * PI);
    let mut out = Vec::with_capacity(values.len());
    let mut prev_raw = T::zero();
    let mut acc = T::zero();
    for (k, z) in values.iter().enumerate() {
        let raw = if z.is_zero() { prev_raw } else { z.arg() };
        if k == 0 {
            acc = raw;
        } else {
            acc = acc + wrap(raw - prev_raw, two_pi);
        }
        prev_raw = raw;
        out.push(acc);
    }
    out
}

/// Reduces an angle to `(−π, π]`.
fn wrap<T: RealScalar>(x: T, two_pi: T) -> T {
    let pi = two_pi * T::lit(0.5);
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -pi {
        y = y + two_pi;
    } else if y > pi {
        y = y - two_pi;
    }
    y
}

/// `max_k |φ(t_k) − φ(t_0) + gap·(t_k − t_0)|`, reduced modulo `2π`.
pub fn phase_residual<T: RealScalar>(series: &CoherenceSeries<T>, predicted_gap: T) -> Result<T> {
    if series.phases.is_empty() || series.phases.len() != series.times.len() {
        return Err(Error::InvalidArgument("phase residual needs a non-empty series".into()));
    }
    let pi = T::lit(PI);
    for k in 1..series.times.len() {
        let predicted = (predicted_gap * (series.times[k] - series.times[k - 1])).abs();
        let observed = (series.phases[k] - series.phases[k - 1]).abs();
        let advance = predicted.max(observed);
        if predicted >= pi || observed > T::lit(0.9) * pi {
            return Err(Error::SamplingTooCoarse {
                advance: advance.as_f64(),
            });
        }
    }
    let two_pi = T::lit(2.0 * PI);
    let (t0, p0) = (series.times[0], series.phases[0]);
    Ok(series
        .times
        .iter()
        .zip(&series.phases)
        .fold(T::zero(), |acc, (&t, &ph)| acc.max(wrap(ph - p0 + predicted_gap * (t - t0), two_pi).abs())))
}

fn require_two_sites<T: RealScalar>(p: &ModelParams<T>) -> Result<()> {
    if p.n_sites != 2 {
        return Err(Error::InvalidArgument(format!(
            "the two-qubit example needs N = 2 (got {})",
            p.n_sites
        )));
    }
    Ok(())
}

/// `(|10⟩ − |01⟩)/√2` and `(|10⟩ + |01⟩)/√2` on the two-site spin factor,
/// where `|10⟩` has site 0 occupied.
pub fn singlet_triplet<T: RealScalar>() -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let h = T::lit(0.5).sqrt();
    let z = Complex::zero();
    (
        vec![z, real(h), real(-h), z],
        vec![z, real(h), real(h), z],
    )
}

/// Singlet–triplet element of the reduced polaron-frame state, evaluated two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitElement<T: RealScalar = f64> {
    /// `½ Σ_{m1,m2} ⟨m|(⟨10|X2X1† − ⟨01|X1X2†) ρ_T (X1X2†|10⟩ + X2X1†|01⟩)|m⟩`.
    pub dressed_sum: Complex<T>,
    /// `⟨S| Tr_ph[e^S ρ_T e^{−S}] |T⟩`.
    pub lf_frame: Complex<T>,
}

impl<T: RealScalar> TwoQubitElement<T> {
    pub fn discrepancy(&self) -> T {
        (self.dressed_sum - self.lf_frame).norm()
    }
}

/// Singlet–triplet element for an original-frame joint state `ρ_T` on `N = 2`.
pub fn two_qubit_polaron_element<T: RealScalar>(
    p: &ModelParams<T>,
    rho_joint_original_frame: &CMatrix<T>,
) -> Result<TwoQubitElement<T>> {
    require_two_sites(p)?;
    let space = p.space()?;
    if rho_joint_original_frame.rows() != space.dim_total() || !rho_joint_original_frame.is_square() {
        return Err(Error::DimensionMismatch {
            expected: space.dim_total(),
            found: rho_joint_original_frame.rows(),
        });
    }
    let d = space.local_phonon_dim();
    let a = local::phonon_lowering::<T>(p.phonon_cutoff);
    let x = expm(&a.try_sub(&a.adjoint())?.scale(&real(p.g * T::lit(0.5))))?;
    let xd = x.adjoint();
    let (up_down, down_up) = (1usize, 2usize);
    let mut dressed_sum = Complex::zero();
    for m1 in 0..d {
        for m2 in 0..d {
            // X1 X2† |10⟩|m1,m2⟩ and X2 X1† |01⟩|m1,m2⟩.
            let mut first = vec![Complex::zero(); space.dim_total()];
            let mut second = vec![Complex::zero(); space.dim_total()];
            for q1 in 0..d {
                for q2 in 0..d {
                    let ph = q1 + d * q2;
                    first[up_down + 4 * ph] = x[(q1, m1)] * xd[(q2, m2)];
                    second[down_up + 4 * ph] = xd[(q1, m1)] * x[(q2, m2)];
                }
            }
            let bra: Vec<Complex<T>> = first.iter().zip(&second).map(|(u, v)| u - v).collect();
            let ket: Vec<Complex<T>> = first.iter().zip(&second).map(|(u, v)| u + v).collect();
            dressed_sum = dressed_sum + rho_joint_original_frame.sandwich(&bra, &ket);
        }
    }
    dressed_sum = dressed_sum * T::lit(0.5);

    let u = lf_unitary(p)?;
    let transformed = u.try_matmul(rho_joint_original_frame)?.try_matmul(&u.adjoint())?;
    let reduced = partial_trace_phonons(&transformed, &space)?;
    let (s, t) = singlet_triplet::<T>();
    Ok(TwoQubitElement {
        dressed_sum,
        lf_frame: reduced.sandwich(&s, &t),
    })
}

/// Initial-state convention for the exact joint evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialStateConvention {
    /// `(|S⟩+|T⟩)/√2 ⊗ |0⟩` in the polaron frame, evolved under `h_s + h_env + h_i`.
    PolaronFrame,
    /// `(|S⟩+|T⟩)/√2 ⊗ |0⟩` with the bare vacuum, evolved under `H_T`.
    OriginalFrame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRipple<T: RealScalar = f64> {
    pub convention: InitialStateConvention,
    pub times: Vec<T>,
    /// `|⟨S|ρ_s(t)|T⟩|` at each sample.
    pub magnitudes: Vec<T>,
    /// `max − min` of the magnitudes.
    pub ripple: T,
}

/// Singlet–triplet magnitude ripple of the exactly evolved reduced state for
/// `N = 2` over `n_samples` equally spaced times in `[0, t_end]`.
pub fn exact_coherence_ripple<T: RealScalar>(
    p: &ModelParams<T>,
    convention: InitialStateConvention,
    t_end: T,
    n_samples: usize,
) -> Result<CoherenceRipple<T>> {
    require_two_sites(p)?;
    if n_samples < 2 || t_end.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument("ripple needs t_end > 0 and at least two samples".into()));
    }
    let space = p.space()?;
    let h = match convention {
        InitialStateConvention::PolaronFrame => {
            let split = build_split(p)?;
            split.h0.try_add(&split.h_i)?
        }
        InitialStateConvention::OriginalFrame => build_total_hamiltonian(p)?.into_matrix(),
    };
    let (s, t) = singlet_triplet::<T>();
    let norm = T::lit(0.5).sqrt();
    let mut psi0 = vec![Complex::zero(); space.dim_total()];
    for k in 0..4 {
        psi0[k] = (s[k] + t[k]) * norm;
    }
    let prop = ExactPropagator::new(&h)?;
    let c = prop.coefficients(&psi0);
    let times: Vec<T> = (0..n_samples)
        .map(|k| t_end * T::from_usize(k) / T::from_usize(n_samples - 1))
        .collect();
    let magnitudes = times
        .iter()
        .map(|&time| {
            let psi = prop.state_at(&c, time);
            Ok(partial_trace_pure(&psi, &space)?.sandwich(&s, &t).norm())
        })
        .collect::<Result<Vec<T>>>()?;
    let max = magnitudes.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let min = magnitudes.iter().fold(T::infinity(), |a, &b| a.min(b));
    Ok(CoherenceRipple {
        convention,
        times,
        magnitudes,
        ripple: max - min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_markovian, markovian_generator, to_schrodinger, BathSpec, DensityMatrix, GeneratorRoute, TimeGrid};
    use crate::perturbation::{build_h2_closed, build_h3_sw};
    use crate::scalar::cplx;
    use num_traits::One;

    fn params(n: usize, j_star: f64, g: f64, m: usize) -> ModelParams<f64> {
        ModelParams::new(n, j_star, 1.0, g, 1.0, m).unwrap()
    }

    fn binomial(n: usize, k: isize) -> isize {
        if k < 0 || k as usize > n {
            return 0;
        }
        let k = k as usize;
        (0..k).fold(1isize, |acc, i| acc * (n - i) as isize / (i + 1) as isize)
    }

    #[test]
    fn two_site_labels() {
        let p = params(2, 1.0, 0.0, 0);
        let basis = irhm_eigenbasis(&p).unwrap();
        let j = p.j();
        let l = basis[0].label;
        assert!((l.energy + 0.75 * j).abs() < 1e-12);
        assert_eq!((l.s_total, l.sz_total), (0.0, 0.0));
        let mut szs: Vec<f64> = basis[1..].iter().map(|s| s.label.sz_total).collect();
        szs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(szs, vec![-1.0, 0.0, 1.0]);
        for s in &basis[1..] {
            assert!((s.label.energy - 0.25 * j).abs() < 1e-12);
            assert_eq!(s.label.s_total, 1.0);
        }
        assert!(label_residual(&p, &basis).unwrap() < 1e-10);
    }

    #[test]
    fn ground_state_is_singlet_for_even_n() {
        for n in [2, 4, 6] {
            let basis = irhm_eigenbasis(&params(n, 1.0, 0.0, 0)).unwrap();
            assert_eq!((basis[0].label.s_total, basis[0].label.sz_total), (0.0, 0.0));
        }
    }

    #[test]
    fn labels_are_simultaneous_eigenvalues() {
        for n in 2..=6 {
            for delta in [1.0, 0.4] {
                let p = ModelParams::new(n, 1.0, delta, 0.0, 1.0, 0).unwrap();
                let basis = irhm_eigenbasis(&p).unwrap();
                assert_eq!(basis.len(), 1 << n);
                assert!(label_residual(&p, &basis).unwrap() < 1e-10, "n={n} delta={delta}");
            }
        }
        assert!(irhm_eigenbasis(&params(7, 1.0, 0.0, 0)).is_err());
    }

    #[test]
    fn ordering_is_deterministic() {
        let p = params(5, 1.0, 0.0, 0);
        let a = irhm_eigenbasis(&p).unwrap();
        let b = irhm_eigenbasis(&p).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            let (x, y) = (w[0].label, w[1].label);
            let key = |l: EigenLabel<f64>| ((l.energy * 1e6).round(), l.sz_total, l.s_total, l.multiplet_index as f64);
            assert!(key(x) <= key(y));
        }
    }

    #[test]
    fn multiplet_counting() {
        for n in 2..=5usize {
            let basis = irhm_eigenbasis(&params(n, 1.0, 0.0, 0)).unwrap();
            // Brute-force oracle: S² spectrum of the full spin space.
            let s2 = hilbert::total_spin_squared::<f64>(&CompositeSpace::spin_only(n).unwrap()).unwrap();
            let spectrum = eigh(&s2).unwrap().values;
            let mut s_max2 = n as isize;
            while s_max2 >= 0 {
                let s = s_max2 as f64 / 2.0;
                let oracle = spectrum.iter().filter(|&&l| (l - s * (s + 1.0)).abs() < 1e-8).count();
                let labelled = basis.iter().filter(|b| b.label.s_total == s).count();
                let k = (n as isize - s_max2) / 2;
                let multiplets = binomial(n, k) - binomial(n, k - 1);
                assert_eq!(labelled, oracle);
                assert_eq!(labelled as isize, multiplets * (s_max2 + 1));
                for sz2 in (-s_max2..=s_max2).step_by(2) {
                    let per_sz = basis
                        .iter()
                        .filter(|b| b.label.s_total == s && b.label.sz_total == sz2 as f64 / 2.0)
                        .count();
                    assert_eq!(per_sz as isize, multiplets);
                }
                s_max2 -= 2;
            }
        }
    }

    #[test]
    fn basis_diagonalizes_effective_hamiltonian() {
        for n in [3, 4] {
            let p = params(n, 0.1, 1.0, 12);
            let mut total = crate::models::build_system_hamiltonian(&p).unwrap().into_matrix();
            total.add_scaled(&Complex::one(), &build_h2_closed(&p).unwrap());
            total.add_scaled(&Complex::one(), &build_h3_sw(&p).unwrap());
            let basis = irhm_eigenbasis(&p).unwrap();
            assert!(off_diagonal_residual(&total, &basis) < 1e-8, "n={n}");
        }
    }

    fn markovian_series(n: usize, steps: usize, stride: usize) -> (Vec<LabeledState<f64>>, Trajectory<f64>, CMatrix<f64>) {
        let p = params(n, 0.1, 1.0, 0);
        let basis = irhm_eigenbasis(&p).unwrap();
        let dim = 1 << n;
        let coeffs: Vec<Complex<f64>> = (0..dim).map(|k| cplx(1.0 + 0.1 * k as f64, 0.3 * k as f64)).collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut psi = vec![Complex::zero(); dim];
        for (c, s) in coeffs.iter().zip(&basis) {
            for (x, v) in psi.iter_mut().zip(&s.vector) {
                *x += v * c / norm;
            }
        }
        let gen = markovian_generator(&p, GeneratorRoute::Closed, &BathSpec::zero_temperature()).unwrap();
        let grid = TimeGrid::new(0.0, 100.0, steps, stride).unwrap();
        let traj = evolve_markovian(&DensityMatrix::pure(&psi).unwrap(), &gen, &grid).unwrap();
        (basis, traj, build_h2_closed(&p).unwrap().into_matrix())
    }

    #[test]
    fn markovian_coherences_only_rotate() {
        for n in [2, 3] {
            let (basis, traj, h2) = markovian_series(n, 10_000, 10);
            assert!(off_diagonal_residual(&h2, &basis) < 1e-14);
            let e2: Vec<f64> = basis.iter().map(|s| h2.sandwich(&s.vector, &s.vector).re).collect();
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    if a == b {
                        continue;
                    }
                    let series = coherence_profile(&traj, &basis, (a, b)).unwrap();
                    assert!(series.magnitude_drift() < 1e-8);
                    assert!(phase_residual(&series, e2[a] - e2[b]).unwrap() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn wrong_gap_grows_linearly() {
        let (basis, traj, h2) = markovian_series(2, 2000, 10);
        let e2: Vec<f64> = basis.iter().map(|s| h2.sandwich(&s.vector, &s.vector).re).collect();
        let (a, b) = (0, basis.len() - 1);
        let gap = e2[a] - e2[b];
        assert!(gap.abs() * 100.0 * 0.1 < PI);
        let series = coherence_profile(&traj, &basis, (a, b)).unwrap();
        let wrong = phase_residual(&series, gap * 1.1).unwrap();
        assert!((wrong - 0.1 * gap.abs() * 100.0).abs() < 1e-6);
        let half = CoherenceSeries {
            pair: series.pair,
            times: series.times[..series.times.len() / 2 + 1].to_vec(),
            magnitudes: series.magnitudes[..series.times.len() / 2 + 1].to_vec(),
            phases: series.phases[..series.times.len() / 2 + 1].to_vec(),
        };
        assert!((phase_residual(&half, gap * 1.1).unwrap() * 2.0 - wrong).abs() < 1e-6);
    }

    #[test]
    fn stationary_series_and_zero_gap() {
        let p = params(2, 0.1, 1.0, 0);
        let basis = irhm_eigenbasis(&p).unwrap();
        let rho = DensityMatrix::pure(&basis[1].vector.iter().zip(&basis[2].vector).map(|(a, b)| (a + b) * 0.5f64.sqrt()).collect::<Vec<_>>()).unwrap();
        let traj = Trajectory {
            times: (0..10).map(|k| k as f64).collect(),
            states: vec![rho; 10],
        };
        let series = coherence_profile(&traj, &basis, (1, 2)).unwrap();
        assert!(series.magnitudes.iter().all(|&m| (m - series.magnitudes[0]).abs() < 1e-15));
        assert!(series.phases.iter().all(|&m| (m - series.phases[0]).abs() < 1e-15));
        assert!(phase_residual(&series, 0.0).unwrap() < 1e-15);
        assert!(coherence_profile(&traj, &basis, (1, 9)).is_err());
    }

    #[test]
    fn stride_halving_is_stable() {
        let (basis, coarse, h2) = markovian_series(3, 4000, 20);
        let (_, fine, _) = markovian_series(3, 4000, 10);
        let e2: Vec<f64> = basis.iter().map(|s| h2.sandwich(&s.vector, &s.vector).re).collect();
        for (a, b) in [(0, 7), (2, 5), (1, 3)] {
            let rc = phase_residual(&coherence_profile(&coarse, &basis, (a, b)).unwrap(), e2[a] - e2[b]).unwrap();
            let rf = phase_residual(&coherence_profile(&fine, &basis, (a, b)).unwrap(), e2[a] - e2[b]).unwrap();
            assert!((rc - rf).abs() < 1e-8);
        }
    }

    #[test]
    fn coarse_sampling_rejected() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let series = CoherenceSeries {
            pair: (EigenLabel { energy: 0.0, sz_total: 0.0, s_total: 0.0, multiplet_index: 0 }, EigenLabel { energy: 0.0, sz_total: 0.0, s_total: 0.0, multiplet_index: 0 }),
            magnitudes: vec![1.0; 5],
            phases: times.iter().map(|t| -4.0 * t).collect(),
            times,
        };
        assert!(matches!(phase_residual(&series, 4.0), Err(Error::SamplingTooCoarse { .. })));
    }

    fn product_joint(p: &ModelParams<f64>, rho_s: &CMatrix<f64>) -> CMatrix<f64> {
        let space = p.space().unwrap();
        let mut vac = CMatrix::zeros(space.dim_phonon(), space.dim_phonon());
        vac[(0, 0)] = Complex::one();
        vac.kron(rho_s)
    }

    #[test]
    fn two_qubit_routes_agree() {
        let p = params(2, 0.1, 1.0, 10);
        let (s, t) = singlet_triplet::<f64>();
        let mut psi: Vec<Complex<f64>> = s.iter().zip(&t).map(|(a, b)| a * 0.6 + b * cplx(0.0, 0.8)).collect();
        psi[0] = cplx(0.0, 0.0);
        let rho_s = CMatrix::outer(&psi, &psi);
        // Original-frame state e^{−S}(ρ_s ⊗ |0⟩⟨0|)e^{S}.
        let u = lf_unitary(&p).unwrap();
        let joint = u.adjoint().try_matmul(&product_joint(&p, &rho_s)).unwrap().try_matmul(&u).unwrap();
        let el = two_qubit_polaron_element(&p, &joint).unwrap();
        assert!(el.discrepancy() < 1e-8);
        assert!((el.lf_frame - rho_s.sandwich(&s, &t)).norm() < 1e-10);
    }

    #[test]
    fn two_qubit_without_coupling_is_bare() {
        let p = params(2, 0.1, 0.0, 3);
        let (s, t) = singlet_triplet::<f64>();
        let psi: Vec<Complex<f64>> = s.iter().zip(&t).map(|(a, b)| (a + b) * 0.5f64.sqrt()).collect();
        let rho_s = CMatrix::outer(&psi, &psi);
        let el = two_qubit_polaron_element(&p, &product_joint(&p, &rho_s)).unwrap();
        assert!((el.dressed_sum - rho_s.sandwich(&s, &t)).norm() < 1e-14);
        assert!(two_qubit_polaron_element(&params(3, 0.1, 0.0, 3), &CMatrix::identity(8 * 64)).is_err());
    }

    #[test]
    fn two_qubit_element_constant_under_markovian_dynamics() {
        let p = params(2, 0.1, 1.0, 6);
        let (s, t) = singlet_triplet::<f64>();
        let psi: Vec<Complex<f64>> = s.iter().zip(&t).map(|(a, b)| (a + b) * 0.5f64.sqrt()).collect();
        let gen = markovian_generator(&p, GeneratorRoute::Closed, &BathSpec::zero_temperature()).unwrap();
        let grid = TimeGrid::new(0.0, 50.0, 500, 100).unwrap();
        let traj = evolve_markovian(&DensityMatrix::pure(&psi).unwrap(), &gen, &grid).unwrap();
        let h_s = crate::models::build_system_hamiltonian(&p).unwrap();
        let schr = to_schrodinger(&traj, &h_s).unwrap();
        let u = lf_unitary(&p).unwrap();
        let mags: Vec<f64> = schr
            .states
            .iter()
            .map(|r| {
                let joint = u.adjoint().try_matmul(&product_joint(&p, r.matrix())).unwrap().try_matmul(&u).unwrap();
                two_qubit_polaron_element(&p, &joint).unwrap().dressed_sum.norm()
            })
            .collect();
        assert!((mags[0] - 0.5).abs() < 1e-10);
        assert!(mags.iter().all(|m| (m - mags[0]).abs() < 1e-10));
    }

    #[test]
    fn matrix_elements_invariant_under_lf_unitary() {
        let p = params(2, 0.1, 1.0, 4);
        let space = p.space().unwrap();
        let u = lf_unitary(&p).unwrap();
        let a = build_total_hamiltonian(&p).unwrap().into_matrix();
        let dim = space.dim_total();
        let v: Vec<Complex<f64>> = (0..dim).map(|k| cplx((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
        let w: Vec<Complex<f64>> = (0..dim).map(|k| cplx((k as f64 * 0.53).cos(), (k as f64 * 0.29).sin())).collect();
        let uau = u.try_matmul(&a).unwrap().try_matmul(&u.adjoint()).unwrap();
        let lhs = uau.sandwich(&u.matvec(&v), &u.matvec(&w));
        let rhs = a.sandwich(&v, &w);
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn exact_ripple_shrinks_with_coupling() {
        let r: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&g| exact_coherence_ripple(&params(2, 0.1, g, 8), InitialStateConvention::PolaronFrame, 50.0, 1001).unwrap().ripple)
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
        let slow = exact_coherence_ripple(&params(2, 0.05, 2.0, 8), InitialStateConvention::PolaronFrame, 50.0, 1001).unwrap().ripple;
        assert!(slow < r[2]);
        let orig = exact_coherence_ripple(&params(2, 0.1, 1.0, 8), InitialStateConvention::OriginalFrame, 50.0, 101).unwrap();
        assert_eq!(orig.magnitudes.len(), 101);
        assert!((orig.magnitudes[0] - 0.5).abs() < 1e-12);
    }
}
