//! Fock-space primitives against independently computed reference values
//! (high-precision Laguerre closed form and a dense matrix exponential).

use approx::assert_abs_diff_eq;
use mesocat::fock::{
    coherent_amplitudes, coherent_overlap, coherent_state, displacement_element, displacement_matrix, overlap,
    truncation_for, CoherentSuperposition, FieldState,
};
use mesocat::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn assert_close(got: C64, want: C64, tol: f64) {
    assert!((got - want).norm() < tol, "got {got}, want {want}");
}

#[test]
fn displacement_elements_match_reference_values() {
    let one = c(1.0, 0.0);
    assert_abs_diff_eq!(displacement_element(0, 0, one).re, 0.6065306597126334, epsilon = 1e-15);
    assert_abs_diff_eq!(displacement_element(1, 0, one).re, 0.6065306597126334, epsilon = 1e-15);

    let b = c(0.7, -0.4);
    let table = [
        (3, 1, c(0.2287496669052289, -0.38818125293008565)),
        (1, 3, c(0.22874966690522874, 0.38818125293008565)),
        (5, 2, c(0.0045453145077762325, -0.34024925743926393)),
        (0, 0, c(0.7225273536420723, 0.0)),
        (1, 0, c(0.5057691475494507, -0.28901094145682893)),
    ];
    for (m, n, want) in table {
        assert_close(displacement_element(m, n, b), want, 1e-13);
    }
    let d = displacement_matrix(b, 8, 8);
    for (m, n, want) in table {
        assert_close(d[(m, n)], want, 1e-13);
    }
}

#[test]
fn coherent_amplitude_and_truncation_values() {
    let amps = coherent_amplitudes(c(2.0, 0.0), 5);
    assert_abs_diff_eq!(amps[2].re, 0.382_785_986_041_643_7, epsilon = 1e-15);
    assert_eq!(truncation_for(4.0), 58);
    assert_eq!(truncation_for(8.0), 138);
}

#[test]
fn distant_coherent_states_overlap() {
    // |<2|-2>|² = e^{-16}
    let ov = coherent_overlap(c(2.0, 0.0), c(-2.0, 0.0));
    assert_abs_diff_eq!(ov.re, 3.354_626_279_025_118_5e-4, epsilon = 1e-18);
    let fa = coherent_state(c(2.0, 0.0), 40).unwrap();
    let fb = coherent_state(c(-2.0, 0.0), 40).unwrap();
    assert_close(overlap(&fa, &fb), ov, 1e-14);
}

fn max_product_defect(b: C64, n_max: usize, block: usize) -> f64 {
    let prod = displacement_matrix(b, n_max + 1, n_max + 1) * displacement_matrix(-b, n_max + 1, n_max + 1);
    let mut worst = 0.0f64;
    for i in 0..=block {
        for j in 0..=block {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - want).norm());
        }
    }
    worst
}

#[test]
fn displacement_inverts_on_inner_block() {
    // Small displacements: the whole (n_max - 10) block.
    for b in [c(0.1, 0.0), c(0.05, -0.08)] {
        let defect = max_product_defect(b, 80, 70);
        assert!(defect < 1e-8, "β = {b}: {defect:e}");
    }
    // Larger displacements: rows whose displaced image still fits below n_max.
    for b in [c(1.5, 0.3), c(-0.2, 2.4), c(3.0, -1.0)] {
        let n_max = 120;
        let block = (0..n_max)
            .take_while(|&i| {
                let reach = (i as f64).sqrt() + b.norm();
                reach * reach + 2.0 * reach <= n_max as f64
            })
            .last()
            .unwrap();
        let defect = max_product_defect(b, n_max, block);
        assert!(defect < 1e-8, "β = {b}, block {block}: {defect:e}");
    }
}

#[test]
fn coherent_norm_converges_and_tail_decays() {
    let a = c(3.0, 1.0);
    let mut last = 0.0;
    for dim in [20, 30, 45, 60, 80] {
        let norm: f64 = coherent_amplitudes(a, dim).iter().map(|x| x.norm_sqr()).sum();
        assert!(norm >= last);
        last = norm;
    }
    assert_abs_diff_eq!(last, 1.0, epsilon = 1e-14);
    let amps = coherent_amplitudes(a, 60);
    let start = (a.norm_sqr() + a.norm()).ceil() as usize;
    for w in amps[start..].windows(2) {
        assert!(w[1].norm() < w[0].norm());
    }
}

#[test]
fn undersized_truncation_is_rejected() {
    assert!(coherent_state(c(4.0, 0.0), 30).is_err());
    assert!(coherent_state(c(4.0, 0.0), truncation_for(4.0)).is_ok());
}

proptest! {
    #[test]
    fn overlap_is_conjugate_symmetric(ar in -3.0..3.0f64, ai in -3.0..3.0f64, br in -3.0..3.0f64, bi in -3.0..3.0f64) {
        let (a, b) = (c(ar, ai), c(br, bi));
        prop_assert!((coherent_overlap(a, b) - coherent_overlap(b, a).conj()).norm() < 1e-15);
        let n = truncation_for(a.norm().max(b.norm()));
        let fa = coherent_state(a, n).unwrap();
        let fb = coherent_state(b, n).unwrap();
        prop_assert!((overlap(&fa, &fb) - overlap(&fb, &fa).conj()).norm() < 1e-14);
        prop_assert!((overlap(&fa, &fb) - coherent_overlap(a, b)).norm() < 1e-9);
        let sa = CoherentSuperposition::coherent(a);
        prop_assert!((overlap(&fb, &sa) - coherent_overlap(b, a)).norm() < 1e-9);
    }

    #[test]
    fn displacement_is_identity_at_zero(m in 0usize..40, n in 0usize..40) {
        let want = if m == n { 1.0 } else { 0.0 };
        prop_assert_eq!(displacement_element(m, n, c(0.0, 0.0)), c(want, 0.0));
    }

    #[test]
    fn displacing_vacuum_gives_coherent_amplitudes(br in -4.0..4.0f64, bi in -4.0..4.0f64) {
        let b = c(br, bi);
        let want = coherent_amplitudes(b, 60);
        for (m, w) in want.iter().enumerate() {
            prop_assert!((displacement_element(m, 0, b) - w).norm() < 1e-13);
        }
    }

    #[test]
    fn displacement_adjoint_is_inverse(br in -3.0..3.0f64, bi in -3.0..3.0f64, m in 0usize..30, n in 0usize..30) {
        let b = c(br, bi);
        prop_assert!((displacement_element(m, n, b) - displacement_element(n, m, -b).conj()).norm() < 1e-13);
    }
}

#[test]
fn fock_states_are_orthonormal() {
    let a = FieldState::fock(3, 10);
    let b = FieldState::fock(4, 10);
    assert_eq!(overlap(&a, &b), c(0.0, 0.0));
    assert_eq!(overlap(&a, &a), c(1.0, 0.0));
}
