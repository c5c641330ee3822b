//! Shared test oracle: Richardson-extrapolated central finite differences
//! for derivative checks, independent of the analytic derivative code it
//! validates.
//!
//! Stencil inputs are centered on f(x) so the rounding amplitude tracks
//! the local variation instead of the absolute potential scale. Steps and
//! extrapolation depth are tuned per order; the achievable absolute error
//! floor in f64 is ~1e-10 for k<=4, ~5e-10 for k=5 and ~1e-8 for k=6 (the
//! conditioning of high-order differences, not a property of the code
//! under test).

/// Base central difference of order `k` (accuracy O(h^2)) of `f` at `x`.
fn central<F: Fn(f64) -> f64>(f: &F, k: usize, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let fx = |i: i32| f(x + i as f64 * h) - f0;
    match k {
        1 => (fx(1) - fx(-1)) / (2.0 * h),
        2 => (fx(1) + fx(-1)) / (h * h),
        3 => (fx(2) - 2.0 * fx(1) + 2.0 * fx(-1) - fx(-2)) / (2.0 * h.powi(3)),
        4 => (fx(2) - 4.0 * fx(1) - 4.0 * fx(-1) + fx(-2)) / h.powi(4),
        5 => {
            (fx(3) - 4.0 * fx(2) + 5.0 * fx(1) - 5.0 * fx(-1) + 4.0 * fx(-2) - fx(-3))
                / (2.0 * h.powi(5))
        }
        6 => {
            (fx(3) - 6.0 * fx(2) + 15.0 * fx(1) + 15.0 * fx(-1) - 6.0 * fx(-2) + fx(-3))
                / h.powi(6)
        }
        _ => panic!("order {k} not supported"),
    }
}

/// k-th derivative by multi-level Richardson extrapolation of the O(h^2)
/// stencils.
pub fn fd_derivative<F: Fn(f64) -> f64>(f: F, k: usize, x: f64) -> f64 {
    let (levels, h0) = match k {
        1 => (3, 0.3),
        2 => (3, 0.6),
        3 => (3, 0.4),
        4 => (4, 1.6),
        5 => (4, 1.6),
        6 => (3, 1.0),
        _ => panic!("order {k} not supported"),
    };
    let mut d: Vec<f64> = (0..=levels)
        .map(|j| central(&f, k, x, h0 / 2f64.powi(j)))
        .collect();
    for m in 1..=levels {
        let fac = 4f64.powi(m);
        d = (0..d.len() - 1)
            .map(|j| (fac * d[j + 1] - d[j]) / (fac - 1.0))
            .collect();
    }
    d[0]
}

#[cfg(test)]
mod self_check {
    use super::*;

    #[test]
    fn fd_matches_cosine_derivatives() {
        // meta-test against a function with known derivatives of all orders
        let f = |x: f64| 0.3 * x.cos() + 3.0 * (0.7 - x / 3.0).cos();
        let exact = |k: usize, x: f64| -> f64 {
            let cyc = |k: usize, v: f64| match k % 4 {
                0 => v.cos(),
                1 => -v.sin(),
                2 => -v.cos(),
                _ => v.sin(),
            };
            0.3 * cyc(k, x) + 3.0 * (-1.0f64 / 3.0).powi(k as i32) * cyc(k, 0.7 - x / 3.0)
        };
        let bounds = [1e-10, 1e-10, 1e-10, 5e-10, 4e-9, 5e-8];
        for k in 1..=6 {
            for &x in &[0.0, 0.37, 1.9, -2.4] {
                let fd = fd_derivative(f, k, x);
                let ex = exact(k, x);
                assert!(
                    (fd - ex).abs() < bounds[k - 1],
                    "k={k} x={x}: fd {fd} vs exact {ex}"
                );
            }
        }
    }
}
