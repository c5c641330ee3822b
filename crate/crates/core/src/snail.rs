//! SNAIL potential, minimum tracking and dimensionless Taylor coefficients.
//!
//! The element is a loop of three large junctions (Josephson inductance
//! `l_j` each) in one arm and a single smaller junction (`alpha * E_J`)
//! in the other, biased by a reduced external flux `phi_ext = 2*pi*Phi/Phi0`:
//!
//! ```text
//! U(phi) = -E_J * [ alpha*cos(phi) + 3*cos((phi_ext - phi)/3) ]
//! ```
//!
//! All operations are pure functions; flux sweeps warm-start the minimum
//! from the previous point so the tracked well never phase-slips.

use crate::constants::PHI0;
use crate::error::{Error, Result};

/// Nonlinear element description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnailSpec {
    /// Josephson inductance of one large junction, H.
    pub l_j: f64,
    /// Small-to-large junction inductance ratio (dimensionless).
    pub alpha: f64,
    /// Number of SNAILs in series.
    pub m: u32,
}

impl SnailSpec {
    /// Validates the single-minimum regime `0 < alpha < 1/3`.
    pub fn new(l_j: f64, alpha: f64, m: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0 / 3.0) {
            return Err(Error::InvalidSpec(format!(
                "alpha = {alpha} outside the single-minimum window (0, 1/3); \
                 use new_with_alpha_override to bypass"
            )));
        }
        Self::new_with_alpha_override(l_j, alpha, m)
    }

    /// Same as [`SnailSpec::new`] but skips the `alpha < 1/3` window check.
    /// Minimum finding may legitimately fail outside the window.
    pub fn new_with_alpha_override(l_j: f64, alpha: f64, m: u32) -> Result<Self> {
        if !(l_j > 0.0) || !l_j.is_finite() {
            return Err(Error::InvalidSpec(format!("l_j = {l_j} must be positive")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!("alpha = {alpha} must be positive")));
        }
        if m < 1 {
            return Err(Error::InvalidSpec("m must be >= 1".into()));
        }
        Ok(Self { l_j, alpha, m })
    }

    /// Josephson energy of one large junction, J.
    pub fn e_j(&self) -> f64 {
        PHI0 * PHI0 / self.l_j
    }
}

/// Dimensionless expansion coefficients of the tracked potential well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoeffs {
    /// Reduced external flux 2*pi*Phi/Phi0, rad.
    pub phi_ext: f64,
    /// Location of the tracked minimum, rad.
    pub phi_min: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Populated on request; consumed only by the time-domain oracle.
    pub c5: Option<f64>,
    pub c6: Option<f64>,
}

/// k-th derivative of cos(x).
fn dcos(order: usize, x: f64) -> f64 {
    match order % 4 {
        0 => x.cos(),
        1 => -x.sin(),
        2 => -x.cos(),
        _ => x.sin(),
    }
}

/// SNAIL potential energy, J.
pub fn potential(phi: f64, phi_ext: f64, spec: &SnailSpec) -> f64 {
    potential_derivative(0, phi, phi_ext, spec)
}

/// Analytic d^k U / d phi^k for k = 0..=6, J.
///
/// The large-junction branch enters with phase (phi_ext - phi)/3, so each
/// derivative picks up a factor (-1/3).
pub fn potential_derivative(order: usize, phi: f64, phi_ext: f64, spec: &SnailSpec) -> f64 {
    assert!(order <= 6, "derivatives implemented through order 6");
    let u = (phi_ext - phi) / 3.0;
    let chain = (-1.0f64 / 3.0).powi(order as i32);
    -spec.e_j() * (spec.alpha * dcos(order, phi) + 3.0 * chain * dcos(order, u))
}

/// d^k (U/E_J) / d phi^k, dimensionless. `order = k` at the given phi.
fn reduced_derivative(order: usize, phi: f64, phi_ext: f64, alpha: f64) -> f64 {
    let u = (phi_ext - phi) / 3.0;
    let chain = (-1.0f64 / 3.0).powi(order as i32);
    -(alpha * dcos(order, phi) + 3.0 * chain * dcos(order, u))
}

/// Root residual target for the minimum, in reduced (E_J-free) units.
const ROOT_TOL: f64 = 1e-12;

/// Safeguarded Newton (bisection fallback) on f within a sign-change bracket.
/// `f` and `df` are the reduced first and second derivatives.
fn newton_bracketed<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    debug_assert!(flo * fhi <= 0.0);
    if flo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() < ROOT_TOL {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = if d != 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && (newton - lo) * (newton - hi) < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() < 1e-15 {
            return x;
        }
    }
    x
}

/// Locates the potential minimum.
///
/// Without `prev` the search bracket is [phi_ext - pi, phi_ext + pi]; the
/// reduced slope is strictly negative/positive at those ends for any
/// alpha < sin(pi/3), so a minimum always exists there. With `prev` the
/// minimum continuously connected to `prev` is returned (warm start for
/// flux sweeps).
pub fn find_minimum(phi_ext: f64, prev: Option<f64>, spec: &SnailSpec) -> Result<f64> {
    let alpha = spec.alpha;
    let f = |p: f64| reduced_derivative(1, p, phi_ext, alpha);
    let df = |p: f64| reduced_derivative(2, p, phi_ext, alpha);

    let scan = |lo: f64, hi: f64| -> Vec<f64> {
        const N: usize = 256;
        let mut roots = Vec::new();
        let step = (hi - lo) / N as f64;
        let mut x0 = lo;
        let mut f0 = f(x0);
        for i in 1..=N {
            let x1 = lo + step * i as f64;
            let f1 = f(x1);
            if f0 == 0.0 && df(x0) > 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let r = newton_bracketed(f, df, x0, x1);
                if df(r) > 0.0 {
                    roots.push(r);
                }
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    };

    if let Some(p) = prev {
        let local = scan(p - 1.0, p + 1.0);
        if let Some(&r) = local
            .iter()
            .min_by(|a, b| (*a - p).abs().total_cmp(&(*b - p).abs()))
        {
            return Ok(r);
        }
    }
    let roots = scan(phi_ext - std::f64::consts::PI, phi_ext + std::f64::consts::PI);
    match prev {
        Some(p) => roots
            .into_iter()
            .min_by(|a, b| (a - p).abs().total_cmp(&(b - p).abs()))
            .ok_or(Error::NoMinimumFound { phi_ext }),
        None => roots
            .into_iter()
            .min_by(|a, b| {
                potential(*a, phi_ext, spec).total_cmp(&potential(*b, phi_ext, spec))
            })
            .ok_or(Error::NoMinimumFound { phi_ext }),
    }
}

/// Taylor coefficients c2..c4 about the tracked minimum.
pub fn taylor_coeffs(phi_ext: f64, spec: &SnailSpec) -> Result<TaylorCoeffs> {
    taylor_coeffs_tracked(phi_ext, None, false, spec)
}

/// Full control: warm-started minimum and optional c5/c6 for the oracle.
pub fn taylor_coeffs_tracked(
    phi_ext: f64,
    prev_min: Option<f64>,
    with_higher_orders: bool,
    spec: &SnailSpec,
) -> Result<TaylorCoeffs> {
    let phi_min = find_minimum(phi_ext, prev_min, spec)?;
    let ck = |k: usize| reduced_derivative(k, phi_min, phi_ext, spec.alpha);
    let c2 = ck(2);
    if c2 <= 0.0 {
        return Err(Error::NoMinimumFound { phi_ext });
    }
    Ok(TaylorCoeffs {
        phi_ext,
        phi_min,
        c2,
        c3: ck(3),
        c4: ck(4),
        c5: with_higher_orders.then(|| ck(5)),
        c6: with_higher_orders.then(|| ck(6)),
    })
}
