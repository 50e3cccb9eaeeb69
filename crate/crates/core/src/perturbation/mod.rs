//! Second- and third-order effective Hamiltonians in the polaron frame, in
//! closed form and as Schrieffer–Wolff sums over phonon intermediate states,
//! plus the integer hopping-string identities behind the third-order form.

pub mod identities;
pub mod series;
pub mod sw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::OperatorMatrix;
use crate::linalg::CMatrix;
use crate::models::{pair_hamiltonian, ModelParams};
use crate::scalar::{real, RealScalar};

pub use identities::{all_identity_reports, operator_equality, operator_identity, IdentityName, IdentityReport};
pub use series::{f1_series, f2_series, SeriesValue};
pub use sw::{build_h2_sw, build_h2_sw_composite, build_h3_sw, build_h3_sw_composite, phonon_energies};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCouplings<T: RealScalar = f64> {
    pub j_perp2: T,
    pub j_par2: T,
    pub f1: T,
    pub f2: T,
    /// Terms summed for `f1` and `f2`.
    pub series_terms_used: [usize; 2],
}

/// `J⊥ = −(N−2) f1 J² e^{−2g²}/(2ω)` and `J∥ = (2 f1 + f2) J² e^{−2g²}/(2ω)`.
pub fn second_order_couplings<T: RealScalar>(p: &ModelParams<T>) -> Result<EffectiveCouplings<T>> {
    p.validate()?;
    let tol = series::default_tolerance();
    let f1 = f1_series(p.g, tol)?;
    let f2 = f2_series(p.g, tol)?;
    let j = p.j();
    let scale = j * j * p.narrowing() * p.narrowing() / (T::lit(2.0) * p.omega);
    Ok(EffectiveCouplings {
        j_perp2: -T::from_usize(p.n_sites - 2) * f1.value * scale,
        j_par2: (T::lit(2.0) * f1.value + f2.value) * scale,
        f1: f1.value,
        f2: f2.value,
        series_terms_used: [f1.terms, f2.terms],
    })
}

/// Ratios of the series couplings to their large-`g` forms:
/// `f1 e^{−2g²} / (e^{−g²}/g²)` for the transverse term and
/// `(2 f1 + f2) e^{−2g²}/2 / (1/(4g²))` for the longitudinal term.
pub fn asymptotic_ratios<T: RealScalar>(g: T) -> Result<(T, T)> {
    if g.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument("asymptotic ratios need g > 0".into()));
    }
    let tol = series::default_tolerance();
    let f1 = f1_series(g, tol)?.value;
    let f2 = f2_series(g, tol)?.value;
    let g2 = g * g;
    let damp = (-T::lit(2.0) * g2).exp();
    let transverse = f1 * damp / ((-g2).exp() / g2);
    let longitudinal = (T::lit(2.0) * f1 + f2) * damp * T::lit(0.5) * T::lit(4.0) * g2;
    Ok((transverse, longitudinal))
}

/// `H2 = Σ_{i<j} [(½J⊥ b†_i b_j + H.c.) − ½J∥ {n_i(1−n_j) + n_j(1−n_i)}]` on the spin factor.
pub fn build_h2_closed<T: RealScalar>(p: &ModelParams<T>) -> Result<OperatorMatrix<T>> {
    let c = second_order_couplings(p)?;
    let half = T::lit(0.5);
    let n = p.n_sites;
    let mut h = pair_hamiltonian(n, half * c.j_perp2, T::zero());
    for bits in 0..1usize << n {
        let mut unlike = 0;
        for i in 0..n {
            for j in i + 1..n {
                if (bits >> i & 1) != (bits >> j & 1) {
                    unlike += 1;
                }
            }
        }
        h[(bits, bits)] = real(-half * c.j_par2 * T::from_usize(unlike));
    }
    Ok(OperatorMatrix::hermitian(h))
}

/// Order-of-magnitude scales of the third-order coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientScales<T: RealScalar = f64> {
    /// `J³ e^{−g²}/(g²ω)²`, open-loop hopping.
    pub t_n: T,
    /// `J³/(g²ω)²`, closed-loop interaction.
    pub v_n: T,
    /// `J³ e^{−g²}/(gω)²`, hopping through a closed loop.
    pub t_cn: T,
    /// False at `g = 0`, where the estimates diverge and are reported as NaN.
    pub valid: bool,
}

pub fn coefficient_scales<T: RealScalar>(p: &ModelParams<T>) -> Result<CoefficientScales<T>> {
    p.validate()?;
    if p.g == T::zero() {
        return Ok(CoefficientScales {
            t_n: T::nan(),
            v_n: T::nan(),
            t_cn: T::nan(),
            valid: false,
        });
    }
    let j3 = p.j().powi(3);
    let g2w = p.g * p.g * p.omega;
    let gw = p.g * p.omega;
    Ok(CoefficientScales {
        t_n: j3 * p.narrowing() / (g2w * g2w),
        v_n: j3 / (g2w * g2w),
        t_cn: j3 * p.narrowing() / (gw * gw),
        valid: true,
    })
}

/// Number of three-hop walks from `i` to a fixed `l ≠ i` on the complete graph
/// `K_N`: `((N−1)³ + 1)/N`. Used to turn `t_n` into a matrix-element scale.
pub fn three_hop_walks(n_sites: usize) -> usize {
    ((n_sites - 1).pow(3) + 1) / n_sites
}

/// Largest off-diagonal (hopping) and diagonal (interaction) entries of an
/// effective Hamiltonian on the spin factor.
pub fn hopping_and_interaction_scale<T: RealScalar>(h: &CMatrix<T>) -> (T, T) {
    let mut hop = T::zero();
    let mut diag = T::zero();
    for r in 0..h.rows() {
        for c in 0..h.cols() {
            let v = h[(r, c)].norm();
            if r == c {
                diag = diag.max(v);
            } else {
                hop = hop.max(v);
            }
        }
    }
    (hop, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{commutator_norm, total_hcb_number, CompositeSpace};
    use crate::models::build_irhm;

    fn params(n: usize, j_star: f64, g: f64, m: usize) -> ModelParams<f64> {
        ModelParams::new(n, j_star, 1.0, g, 1.0, m).unwrap()
    }

    #[test]
    fn asymptotic_ratios_at_three() {
        let (t, l) = asymptotic_ratios(3.0f64).unwrap();
        assert!((t - 1.149_677_670_568_222).abs() < 1e-10);
        assert!((l - 1.063_086_328_721_632).abs() < 1e-10);
        assert!(asymptotic_ratios(0.0f64).is_err());
    }

    fn rel_max(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
        a.try_sub(b).unwrap().max_abs() / b.max_abs()
    }

    #[test]
    fn couplings_vanish_without_coupling() {
        let c = second_order_couplings(&params(3, 1.0, 0.0, 0)).unwrap();
        assert_eq!((c.j_perp2, c.j_par2), (0.0, 0.0));
        assert!(build_h2_closed(&params(3, 1.0, 0.0, 0)).unwrap().is_zero());
    }

    #[test]
    fn two_sites_have_no_transverse_coupling() {
        for g in [0.3, 1.0, 2.5] {
            assert_eq!(second_order_couplings(&params(2, 1.0, g, 0)).unwrap().j_perp2, 0.0);
        }
    }

    #[test]
    fn signs_for_positive_coupling() {
        let c = second_order_couplings(&params(4, 1.0, 1.2, 0)).unwrap();
        assert!(c.j_perp2 < 0.0 && c.j_par2 > 0.0 && c.f1 > 0.0 && c.f2 > 0.0);
    }

    #[test]
    fn couplings_match_sw_sum() {
        // Read J⊥ and J∥ off the one-particle block of the SW sum.
        let p = params(3, 1.0, 1.0, 14);
        let c = second_order_couplings(&p).unwrap();
        let h = build_h2_sw(&p).unwrap();
        let hop = h[(0b001, 0b010)].re;
        assert!((2.0 * hop - c.j_perp2).abs() < 1e-6 * c.j_perp2.abs());
        // |001⟩ has two unlike pairs; |000⟩ none.
        let diag = h[(0b001, 0b001)].re - h[(0, 0)].re;
        assert!((diag + c.j_par2).abs() < 1e-6 * c.j_par2);
    }

    #[test]
    fn closed_form_commutes_with_irhm_and_number() {
        for n in [3, 4, 5] {
            let p = params(n, 1.0, 1.3, 0);
            let h2 = build_h2_closed(&p).unwrap();
            let h = build_irhm(&p).unwrap();
            assert!(commutator_norm(&h2, &h).unwrap() < 1e-12);
            let num = total_hcb_number::<f64>(&CompositeSpace::spin_only(n).unwrap());
            assert!(commutator_norm(&h2, &num).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sw_sum_converges_to_closed_form() {
        let p = params(2, 0.1, 1.0, 0);
        let closed = build_h2_closed(&p).unwrap();
        let mut last = f64::INFINITY;
        for m in [4, 6, 8, 10] {
            let dev = rel_max(&build_h2_sw(&p.with_cutoff(m)).unwrap(), &closed);
            assert!(dev < last, "M={m}: {dev} not below {last}");
            last = dev;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn sw_sum_strong_coupling_three_sites() {
        let p = params(3, 0.1, 2.0, 12);
        let closed = build_h2_closed(&p).unwrap();
        let dev = rel_max(&build_h2_sw(&p).unwrap(), &closed);
        assert!(dev < 1e-3, "deviation {dev}");
        let coarse = rel_max(&build_h2_sw(&p.with_cutoff(8)).unwrap(), &closed);
        assert!(dev < coarse);
    }

    #[test]
    fn structured_and_composite_routes_agree() {
        for (n, m, g) in [(2, 5, 1.0), (3, 3, 1.4)] {
            let p = params(n, 0.3, g, m);
            let a = build_h2_sw(&p).unwrap();
            let b = build_h2_sw_composite(&p).unwrap();
            assert!(a.try_sub(&b).unwrap().max_abs() < 1e-13 * b.max_abs().max(1e-300));
            let a3 = build_h3_sw(&p).unwrap();
            let b3 = build_h3_sw_composite(&p).unwrap();
            assert!(a3.try_sub(&b3).unwrap().max_abs() < 1e-12 * b3.max_abs());
        }
    }

    #[test]
    fn sw_vanishes_without_coupling() {
        let p = params(3, 0.5, 0.0, 3);
        assert!(build_h2_sw(&p).unwrap().is_zero());
        assert!(build_h3_sw(&p).unwrap().is_zero());
    }

    #[test]
    fn insufficient_cutoff() {
        assert!(matches!(
            build_h2_sw(&params(2, 0.1, 1.0, 1)),
            Err(Error::InsufficientCutoff { required: 2, .. })
        ));
        assert!(matches!(
            build_h3_sw(&params(2, 0.1, 1.0, 2)),
            Err(Error::InsufficientCutoff { required: 3, .. })
        ));
    }

    #[test]
    fn third_order_symmetries() {
        let p = params(3, 0.1, 1.0, 10);
        let h3 = build_h3_sw(&p).unwrap();
        h3.verify().unwrap();
        let num = total_hcb_number::<f64>(&CompositeSpace::spin_only(3).unwrap());
        assert!(commutator_norm(&h3, &num).unwrap() < 1e-10 * h3.frobenius_norm().max(1.0));
        let h = build_irhm(&p).unwrap();
        assert!(commutator_norm(&h3, &h).unwrap() / h3.frobenius_norm() < 1e-8);
    }

    #[test]
    fn second_order_hermitian() {
        let h2 = build_h2_sw(&params(3, 0.2, 1.5, 6)).unwrap();
        assert!(h2.hermiticity_error() < 1e-15);
    }

    #[test]
    fn scale_ratios() {
        let s = coefficient_scales(&params(3, 0.1, 2.0, 0)).unwrap();
        assert!((s.t_cn / s.t_n - 4.0).abs() < 1e-12);
        assert!((s.v_n / s.t_n - 4f64.exp()).abs() < 1e-10 * 4f64.exp());
        let z = coefficient_scales(&params(3, 0.1, 0.0, 0)).unwrap();
        assert!(!z.valid && z.t_n.is_nan());
    }

    #[test]
    fn third_order_hopping_within_order_of_magnitude() {
        let p = params(3, 0.1, 2.0, 12);
        let (hop, _) = hopping_and_interaction_scale(&build_h3_sw(&p).unwrap());
        let estimate = three_hop_walks(3) as f64 * coefficient_scales(&p).unwrap().t_n;
        assert!(hop < 10.0 * estimate && hop > estimate / 10.0, "{hop} vs {estimate}");
    }

    #[test]
    fn walk_count() {
        assert_eq!(three_hop_walks(3), 3);
        assert_eq!(three_hop_walks(4), 7);
    }
}
