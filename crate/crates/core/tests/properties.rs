use std::f64::consts::PI;

use arealaw::divisibility::{default_splits, divisibility_residual};
use arealaw::dynamics::Evolution;
use arealaw::entropy::entanglement_rate_at_zero;
use arealaw::linalg::{hermitian_eig, kron, partial_trace_env, Propagator};
use arealaw::model::PureState;
use arealaw::random::{
    random_density_matrix, random_hermitian, random_matrix, random_product_state, random_real_product_state,
    random_system, random_unit_vector, seeded_rng,
};
use arealaw::spin_boson::{build_model, closed_form_functions, closed_form_omega, coherent_product_start, SpinBosonParams};
use arealaw::zassenhaus::{c_term, truncated_exponential};
use arealaw::{Complex64, ComplexMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bosonic_functions_are_bounded(
        beta in prop_oneof![-3.0..-0.05f64, 0.05..3.0f64],
        eta in prop_oneof![-2.0..-1e-3f64, 1e-3..2.0f64],
        t in 0.0..50.0f64,
    ) {
        let p = SpinBosonParams::new(1.0, beta, eta, 1, 1).unwrap();
        let f = closed_form_functions(&p, t);
        let g = p.gamma();
        prop_assert!(f.alpha.abs() <= (g / beta).abs() * (1.0 + 1e-12));
        prop_assert!(f.zeta.abs() <= 2.0 * (beta / g).abs() * (1.0 + 1e-12));
        prop_assert!(f.psi <= 0.0);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let h = random_hermitian(&mut seeded_rng(seed), n, 2.0);
        let eig = hermitian_eig(&h).unwrap();
        prop_assert!(eig.reconstruct().max_abs_diff(&h) < 1e-12);
        prop_assert!(eig.vectors.unitarity_defect() < 1e-12);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn propagator_is_a_group(seed in any::<u64>(), t in -3.0..3.0f64, s in -3.0..3.0f64) {
        let h = random_hermitian(&mut seeded_rng(seed), 4, 1.5);
        let u = Propagator::new(&h).unwrap();
        prop_assert!((&u.at(t) * &u.at(s)).max_abs_diff(&u.at(t + s)) < 1e-12);
        prop_assert!(u.at(t).unitarity_defect() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, de in 1usize..4) {
        let mut rng = seeded_rng(seed);
        let a = random_density_matrix(&mut rng, da);
        let b = random_density_matrix(&mut rng, de);
        prop_assert!(partial_trace_env(&kron(&a, &b), da, de).unwrap().max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn entropy_lies_between_zero_and_log_dim(seed in any::<u64>(), t in 0.0..5.0f64) {
        let mut rng = seeded_rng(seed);
        let sys = random_system(&mut rng, 2, 3);
        let init = PureState::new(2, 3, random_unit_vector(&mut rng, 6)).unwrap();
        let s = Evolution::new(&sys, &init).unwrap().rho_reduced(t).unwrap().entropy();
        prop_assert!((-1e-12..=2f64.ln() + 1e-12).contains(&s));
    }

    #[test]
    fn real_product_start_has_non_negative_rate(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sys = random_system(&mut rng, 2, 2);
        let init = random_real_product_state(&mut rng, 2, 2);
        prop_assert!(entanglement_rate_at_zero(&sys, &init).unwrap().value >= -1e-8);
    }

    #[test]
    fn trivial_environment_is_always_divisible(seed in any::<u64>(), da in 2usize..5, t in 0.1..6.0f64) {
        let sys = random_system(&mut seeded_rng(seed), da, 1);
        let d = ComplexMatrix::identity(1);
        let report = divisibility_residual(&sys, &d, t, &default_splits(t)).unwrap();
        prop_assert!(report.residual <= 1e-10);
    }

    #[test]
    fn zassenhaus_second_term_is_antisymmetric(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = seeded_rng(seed);
        let x = random_matrix(&mut rng, n, n);
        let y = random_matrix(&mut rng, n, n);
        let sum = &c_term(&x, &y, 2).unwrap() + &c_term(&y, &x, 2).unwrap();
        prop_assert!(sum.max_abs() < 1e-12);
    }

    #[test]
    fn zassenhaus_products_stay_unitary(seed in any::<u64>(), t in 0.0..1.5f64, order in 1usize..6) {
        let mut rng = seeded_rng(seed);
        let a = random_hermitian(&mut rng, 3, 1.0);
        let b = random_hermitian(&mut rng, 3, 1.0);
        let f = Complex64::new(0.0, -t);
        let z = truncated_exponential(&a.scale(f), &b.scale(f), order).unwrap();
        prop_assert!(z.product.unitarity_defect() < 1e-10);
    }
}

#[test]
fn commensurate_frequencies_give_a_period() {
    // gamma = eta j(j+1) = 1/2 against beta = 1: period 2 pi q / beta with q = 2
    let p = SpinBosonParams::new(1.0, 1.0, 2.0 / 3.0, 1, 1).unwrap();
    assert!((p.gamma() - 0.5).abs() < 1e-15);
    let period = 4.0 * PI;
    for k in 0..40 {
        let t = 0.31 * k as f64;
        let (f0, f1) = (closed_form_functions(&p, t), closed_form_functions(&p, t + period));
        assert!((f0.alpha - f1.alpha).abs() < 1e-8);
        assert!((f0.zeta - f1.zeta).abs() < 1e-8);
        assert!((closed_form_omega(&p, t) - closed_form_omega(&p, t + period)).abs() < 1e-8);
    }
    // the exact reduced state shares the period (omega = 1 gives precession period 2 pi)
    let evo = Evolution::new(&build_model(&p.with_nmax(6).unwrap()), &coherent_product_start(&p.with_nmax(6).unwrap())).unwrap();
    for t in [0.0, 0.9, 2.2, 5.0] {
        let a = evo.rho_reduced_raw(t);
        let b = evo.rho_reduced_raw(t + period);
        assert!(a.max_abs_diff(&b) < 1e-8);
    }
}

#[test]
fn incommensurate_closed_form_does_not_repeat_at_beta_period() {
    let p = SpinBosonParams::new(1.0, 1.0, 0.5 * 2f64.sqrt(), 1, 1).unwrap();
    let t = 1.1;
    let shifted = t + 2.0 * PI;
    assert!((closed_form_functions(&p, t).zeta - closed_form_functions(&p, shifted).zeta).abs() > 1e-3);
}

#[test]
fn product_start_reduced_state_is_pure_without_coupling() {
    let mut rng = seeded_rng(77);
    let sys = random_system(&mut rng, 3, 2).uncoupled();
    let init = random_product_state(&mut rng, 3, 2);
    let evo = Evolution::new(&sys, &init).unwrap();
    for t in [0.0, 0.5, 3.0] {
        assert!((evo.rho_reduced(t).unwrap().purity() - 1.0).abs() < 1e-10);
    }
}
