use num_complex::Complex;
use polaron_core::analysis::{coherence_profile, irhm_eigenbasis, phase_residual};
use polaron_core::dynamics::{
    evolve_exact_pure, evolve_markovian, markovian_generator, partial_trace_phonons, partial_trace_pure, BathSpec,
    DensityMatrix, GeneratorRoute, TimeGrid,
};
use polaron_core::hilbert::{commutator_norm, total_hcb_number};
use polaron_core::linalg::CMatrix;
use polaron_core::models::{build_irhm, build_total_hamiltonian, lf_unitary};
use polaron_core::perturbation::build_h2_closed;
use polaron_core::{CompositeSpace, Complex64, Params, Params32};
use proptest::prelude::*;

fn normalized(raw: Vec<(f64, f64)>) -> Vec<Complex64> {
    let v: Vec<Complex64> = raw.into_iter().map(|(a, b)| Complex::new(a, b)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn state(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(normalized)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn h2_commutes_with_irhm(n in 3usize..=5, j_star in 0.01..1.0f64, g in 0.0..2.5f64, delta in 0.0..2.0f64) {
        let p = Params::new(n, j_star, delta, g, 1.0, 0).unwrap();
        let h2 = build_h2_closed(&p).unwrap();
        let h = build_irhm(&p).unwrap();
        prop_assert!(commutator_norm(&h2, &h).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_keeps_trace_and_positivity(psi in state(4 * 9), w in 0.05..0.95f64, phi in state(4 * 9)) {
        let space = CompositeSpace::new(2, 2).unwrap();
        let mut rho = CMatrix::outer(&psi, &psi).scale(&Complex::new(w, 0.0));
        rho.add_scaled(&Complex::new(1.0 - w, 0.0), &CMatrix::outer(&phi, &phi));
        let red = partial_trace_phonons(&rho, &space).unwrap();
        prop_assert!((red.trace() - rho.trace()).norm() < 1e-14);
        prop_assert!(DensityMatrix::new(red).is_ok());
        let pure = partial_trace_pure(&psi, &space).unwrap();
        let via_mixed = partial_trace_phonons(&CMatrix::outer(&psi, &psi), &space).unwrap();
        prop_assert!(pure.try_sub(&via_mixed).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn lf_unitary_preserves_matrix_elements(v in state(4 * 16), w in state(4 * 16), g in 0.0..2.0f64) {
        let p = Params::new(2, 0.2, 1.0, g, 1.0, 3).unwrap();
        let u = lf_unitary(&p).unwrap();
        let a = build_total_hamiltonian(&p).unwrap();
        let uau = u.try_matmul(&a).unwrap().try_matmul(&u.adjoint()).unwrap();
        let lhs = uau.sandwich(&u.matvec(&v), &u.matvec(&w));
        prop_assert!((lhs - a.sandwich(&v, &w)).norm() < 1e-10);
    }

    #[test]
    fn exact_evolution_conserves(psi in state(4 * 9), g in 0.0..2.0f64, j_star in 0.05..1.0f64) {
        let p = Params::new(2, j_star, 1.0, g, 1.0, 2).unwrap();
        let h = build_total_hamiltonian(&p).unwrap();
        let num = total_hcb_number::<f64>(&p.space().unwrap());
        let grid = TimeGrid::new(0.0, 30.0, 6, 1).unwrap();
        let (e0, n0) = (h.sandwich(&psi, &psi).re, num.sandwich(&psi, &psi).re);
        for s in evolve_exact_pure(&psi, &h, &grid).unwrap() {
            prop_assert!((CMatrix::inner(&s, &s).re - 1.0).abs() < 1e-10);
            prop_assert!((h.sandwich(&s, &s).re - e0).abs() < 1e-10);
            prop_assert!((num.sandwich(&s, &s).re - n0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn markovian_magnitudes_are_preserved(psi in state(8), g in 0.3..2.0f64, j_star in 0.05..0.5f64) {
        let p = Params::new(3, j_star, 1.0, g, 1.0, 0).unwrap();
        let basis = irhm_eigenbasis(&p).unwrap();
        let h2 = build_h2_closed(&p).unwrap();
        let gen = markovian_generator(&p, GeneratorRoute::Closed, &BathSpec::zero_temperature()).unwrap();
        let grid = TimeGrid::new(0.0, 100.0, 10_000, 100).unwrap();
        let traj = evolve_markovian(&DensityMatrix::pure(&psi).unwrap(), &gen, &grid).unwrap();
        let e2: Vec<f64> = basis.iter().map(|s| h2.sandwich(&s.vector, &s.vector).re).collect();
        for (a, b) in [(0, 1), (0, 7), (3, 4), (2, 6)] {
            let series = coherence_profile(&traj, &basis, (a, b)).unwrap();
            prop_assert!(series.magnitude_drift() < 1e-8);
            if series.magnitudes[0] > 1e-3 {
                prop_assert!(phase_residual(&series, e2[a] - e2[b]).unwrap() < 1e-6);
            }
        }
    }
}

#[test]
fn single_precision_instantiation() {
    let p = Params32::new(3, 0.3, 1.0, 1.0, 1.0, 0).unwrap();
    let h2 = build_h2_closed(&p).unwrap();
    let h = build_irhm(&p).unwrap();
    assert!(commutator_norm(&h2, &h).unwrap() < 1e-5);
    let p64 = Params::new(3, 0.3, 1.0, 1.0, 1.0, 0).unwrap();
    let diff = h2
        .as_slice()
        .iter()
        .zip(build_h2_closed(&p64).unwrap().as_slice())
        .fold(0.0f64, |acc, (a, b)| acc.max(((a.re as f64) - b.re).abs() + ((a.im as f64) - b.im).abs()));
    assert!(diff < 1e-6);
}
