//! Finite-difference audits of the analytic SNAIL derivatives and the
//! Taylor coefficients, plus property tests of the potential symmetries.

mod common;

use common::fd_derivative;
use proptest::prelude::*;
use spa_core::constants::TWO_PI;
use spa_core::snail::{
    find_minimum, potential, potential_derivative, taylor_coeffs, taylor_coeffs_tracked,
    SnailSpec,
};

fn spec() -> SnailSpec {
    SnailSpec::new(38e-12, 0.065, 20).unwrap()
}

#[test]
fn fourth_derivative_at_minimum_fd_oracle() {
    let s = spec();
    let phi_ext = TWO_PI * 0.30;
    let m = find_minimum(phi_ext, None, &s).unwrap();
    let analytic = potential_derivative(4, m, phi_ext, &s);
    let fd = fd_derivative(|p| potential(p, phi_ext, &s), 4, m);
    assert!(
        ((analytic - fd) / analytic).abs() < 1e-6,
        "{analytic} vs {fd}"
    );
}

#[test]
fn coefficients_fd_oracle_at_single_flux() {
    // c_k at 0.40 flux quantum against finite differences of U/E_J.
    // c2..c4 hold to 1e-8 pointwise; the higher orders sit at the f64
    // conditioning floor of sixth-order differences and get looser bounds.
    let s = spec();
    let phi_ext = TWO_PI * 0.40;
    let c = taylor_coeffs_tracked(phi_ext, None, true, &s).unwrap();
    let reduced = |p: f64| potential(p, phi_ext, &s) / s.e_j();
    for (k, val, tol) in [
        (2, c.c2, 1e-8),
        (3, c.c3, 1e-8),
        (4, c.c4, 1e-8),
        (5, c.c5.unwrap(), 5e-8),
        (6, c.c6.unwrap(), 5e-7),
    ] {
        let fd = fd_derivative(reduced, k, c.phi_min);
        assert!(
            ((val - fd) / val).abs() < tol,
            "c{k}: analytic {val} vs fd {fd}"
        );
    }
}

#[test]
fn derivatives_match_fd_on_flux_grid() {
    // orders 1..6 of U at generic (non-critical) phases across 100 flux
    // points, scale-relative per order
    let s = spec();
    let n = 100;
    for k in 1..=6usize {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            let phi_ext = TWO_PI * 0.5 * i as f64 / (n - 1) as f64;
            let phi = 0.3 + phi_ext / 2.0; // generic probe phase
            let analytic = potential_derivative(k, phi, phi_ext, &s);
            let fd = fd_derivative(|p| potential(p, phi_ext, &s), k, phi);
            worst = worst.max((analytic - fd).abs());
            scale = scale.max(analytic.abs());
        }
        assert!(worst / scale < 1e-6, "order {k}: {}", worst / scale);
    }
}

#[test]
fn coefficients_match_fd_on_flux_grid() {
    // c2..c6 on a 100-point flux grid, scale-relative per coefficient
    let s = spec();
    let n = 100;
    let mut worst = [0.0f64; 5];
    let mut scale = [0.0f64; 5];
    let mut prev = None;
    for i in 0..n {
        let phi_ext = TWO_PI * 0.5 * i as f64 / (n - 1) as f64;
        let c = taylor_coeffs_tracked(phi_ext, prev, true, &s).unwrap();
        prev = Some(c.phi_min);
        let reduced = |p: f64| potential(p, phi_ext, &s) / s.e_j();
        for (j, (k, val)) in [
            (2usize, c.c2),
            (3, c.c3),
            (4, c.c4),
            (5, c.c5.unwrap()),
            (6, c.c6.unwrap()),
        ]
        .into_iter()
        .enumerate()
        {
            let fd = fd_derivative(reduced, k, c.phi_min);
            worst[j] = worst[j].max((val - fd).abs());
            scale[j] = scale[j].max(val.abs());
        }
    }
    for j in 0..5 {
        let rel = worst[j] / scale[j];
        assert!(rel < 1e-6, "c{}: scale-relative error {rel}", j + 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_periodic_in_flux(phi in -3.0f64..3.0, phi_ext in -6.0f64..6.0) {
        let s = spec();
        // u shifts by 2 pi under phi_ext -> phi_ext + 6 pi
        let a = potential(phi, phi_ext, &s);
        let b = potential(phi, phi_ext + 6.0 * std::f64::consts::PI, &s);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(s.e_j()));
    }

    #[test]
    fn c3_antisymmetric_and_c2_symmetric(frac in 0.01f64..0.49, alpha in 0.02f64..0.30) {
        let s = SnailSpec::new(38e-12, alpha, 20).unwrap();
        let plus = taylor_coeffs(TWO_PI * frac, &s).unwrap();
        let minus = taylor_coeffs(-TWO_PI * frac, &s).unwrap();
        prop_assert!((plus.c3 + minus.c3).abs() < 1e-9 * plus.c3.abs().max(1e-6));
        prop_assert!((plus.c2 - minus.c2).abs() < 1e-9 * plus.c2.abs());
        prop_assert!(plus.c2 > 0.0);
    }

    #[test]
    fn minimum_is_true_minimum(frac in -0.5f64..0.5, alpha in 0.02f64..0.32) {
        let s = SnailSpec::new(38e-12, alpha, 20).unwrap();
        let phi_ext = TWO_PI * frac;
        let m = find_minimum(phi_ext, None, &s).unwrap();
        let slope = potential_derivative(1, m, phi_ext, &s) / s.e_j();
        let curv = potential_derivative(2, m, phi_ext, &s);
        prop_assert!(slope.abs() < 1e-11, "slope {slope}");
        prop_assert!(curv > 0.0);
        // no lower potential value within the sampled well
        let u_min = potential(m, phi_ext, &s);
        for i in -20..=20 {
            let p = m + i as f64 * 0.05;
            prop_assert!(potential(p, phi_ext, &s) >= u_min - 1e-9 * s.e_j());
        }
    }
}
