use std::f64::consts::{FRAC_1_PI, FRAC_2_PI, FRAC_PI_4, PI, SQRT_2};

use mesocat::error::Error;
use mesocat::fock::{coherent_state, to_density, truncation_for, CoherentSuperposition};
use mesocat::jc::{compass_etas, four_component_state, prepare};
use mesocat::phase_space::{
    evaluate_grid, q_pure, q_superposition, q_zero_closed_form, q_zero_scan, wigner, wigner_pure, wigner_superposition,
    Distribution, GridSpec,
};
use mesocat::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn compass(ap: f64) -> CoherentSuperposition {
    let (e1, e2) = compass_etas(ap);
    four_component_state(ap, e1, e2).unwrap().normalized()
}

#[test]
fn closed_form_zeros_are_scan_roots() {
    // (n1, n2) -> expected |γ|
    let table = [
        (2, 1, PI),
        (3, 1, PI / (2.0 * SQRT_2)),
        (3, 2, 2.0 * PI),
        (4, 2, 3.0 * PI / (2.0 * SQRT_2)),
        (5, 2, PI / 3f64.sqrt()),
    ];
    for (n1, n2, want) in table {
        let z = q_zero_closed_form(n1, n2).unwrap();
        assert!((z.gamma_mag - want).abs() < 1e-14, "({n1},{n2})");
        let roots = q_zero_scan(&compass(z.alpha_prime), z.ray_angle, want + 1.0);
        assert!(roots.iter().any(|r| (r - want).abs() < 1e-6), "({n1},{n2}): {roots:?}");
    }
}

#[test]
fn quoted_value_for_three_one_is_not_a_zero() {
    let s = compass(2.0);
    let quoted = PI / SQRT_2;
    let roots = q_zero_scan(&s, FRAC_PI_4, 4.0);
    assert!(roots.iter().all(|r| (r - quoted).abs() > 0.1), "{roots:?}");
    assert!(q_superposition(&s, C64::from_polar(quoted, FRAC_PI_4)) > 1e-6);
}

#[test]
fn scan_roots_are_genuine_zeros() {
    for ap in [SQRT_2, 2.0, 6f64.sqrt(), 4.0] {
        let s = compass(ap);
        for ray in [0.0, 0.3, FRAC_PI_4] {
            for r in q_zero_scan(&s, ray, ap + 4.0) {
                assert!(q_superposition(&s, C64::from_polar(r, ray)) < 1e-18);
            }
        }
    }
}

#[test]
fn closed_form_constraints() {
    assert!(matches!(q_zero_closed_form(4, 1), Err(Error::QZeroConstraint { .. })));
    assert!(matches!(q_zero_closed_form(1, 1), Err(Error::QZeroConstraint { .. })));
    assert!(matches!(q_zero_closed_form(2, 0), Err(Error::QZeroConstraint { .. })));
}

#[test]
fn four_component_grids_integrate_to_one() {
    let (state, _) = prepare(c(4.0, 0.0), &[3.7 * PI, 1.9 * PI], 58).unwrap();
    let q = evaluate_grid(Distribution::Q, &state, &GridSpec::square(9.0, 0.05).unwrap()).unwrap();
    assert!((q.integral() - 1.0).abs() < 1e-3, "{}", q.integral());
    assert!(q.min() >= 0.0 && q.max() <= FRAC_1_PI + 1e-10);
    let w = evaluate_grid(Distribution::Wigner, &compass(4.0), &GridSpec::square(7.0, 0.05).unwrap()).unwrap();
    assert!((w.integral() - 1.0).abs() < 1e-3, "{}", w.integral());
    assert!(w.min() < -0.1);
}

#[test]
fn grid_evaluation_pads_fock_states() {
    // γ = 6 lies beyond √n_max for this truncation; padding keeps it exact.
    let s = coherent_state(c(0.5, 0.0), 18).unwrap();
    assert!(wigner_pure(&s, c(6.0, 0.0)).is_err());
    let spec = GridSpec::new((5.0, 6.0), (0.0, 0.0), 0.5).unwrap();
    let grid = evaluate_grid(Distribution::Wigner, &s, &spec).unwrap();
    let want = FRAC_2_PI * (-2.0 * 5.5f64 * 5.5).exp();
    assert!((grid.values[0][1] - want).abs() < 1e-20);
}

#[test]
fn grid_corner_on_the_guard_boundary() {
    // the corner of [-6, 6]² has |γ|² = 72 up to rounding
    let s = coherent_state(c(1.0, 0.0), 30).unwrap();
    let spec = GridSpec::square(6.0, 0.1).unwrap();
    assert!(evaluate_grid(Distribution::Wigner, &s, &spec).is_ok());
}

#[test]
fn grids_do_not_depend_on_thread_count() {
    let s = compass(2.0);
    let spec = GridSpec::square(3.0, 0.1).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evaluate_grid(Distribution::Wigner, &s, &spec).unwrap())
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wigner_bounded_and_q_nonnegative(ap in 0.5..4.0f64, e1 in 0.0..6.3f64, e2 in 0.0..6.3f64,
                                         gr in -6.0..6.0f64, gi in -6.0..6.0f64) {
        let s = four_component_state(ap, e1, e2).unwrap().normalized();
        let g = c(gr, gi);
        let w = wigner_superposition(&s, g);
        prop_assert!(w.abs() <= FRAC_2_PI + 1e-10);
        let q = q_superposition(&s, g);
        prop_assert!((0.0..=FRAC_1_PI + 1e-10).contains(&q));
        let fock = s.to_field_state(truncation_for(ap + 6.0)).unwrap();
        prop_assert!((wigner_pure(&fock, g).unwrap() - w).abs() < 1e-8);
        prop_assert!((q_pure(&fock, g) - q).abs() < 1e-10);
    }

    #[test]
    fn density_and_pure_wigner_agree(ar in -2.0..2.0f64, ai in -2.0..2.0f64, gr in -3.0..3.0f64, gi in -3.0..3.0f64) {
        let s = coherent_state(c(ar, ai), 40).unwrap();
        let g = c(gr, gi);
        let a = wigner(&to_density(&s), g).unwrap();
        let b = wigner_pure(&s, g).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
