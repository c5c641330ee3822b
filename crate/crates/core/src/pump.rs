//! Pumped effective Kerr model: dressed detuning, squeezing strength,
//! gain, parametric threshold, reduced harmonic-balance equations and the
//! stability diagram.
//!
//! Frame: photon amplitudes rotate at w_p/2; `delta = w_p/2 - w_a` is the
//! pump half-detuning. The pump knob is the mean pump photon number `n_p`
//! (`|alpha_p| = sqrt(n_p)`, phase absorbed so the squeezing strength
//! `g = 2 g3 sqrt(n_p)` is non-negative).

use crate::error::{Error, Result};
use crate::mode::ModeParams;
use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

/// Pump-dressed frame parameters at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveModel {
    /// Phi/Phi0.
    pub flux: f64,
    /// Pump half-detuning w_p/2 - w_a, rad/s.
    pub delta: f64,
    /// Mean pump photon number.
    pub n_p: f64,
    /// Dressed detuning, rad/s.
    pub delta_b: f64,
    /// Squeezing strength (>= 0 by phase convention), rad/s.
    pub g: f64,
    /// Kerr constant K = 12 g4*, rad/s.
    pub kerr: f64,
    /// Damping, rad/s.
    pub kappa: f64,
    /// Mode frequency, rad/s.
    pub omega_a: f64,
}

impl EffectiveModel {
    /// Pump angular frequency w_p = 2 (w_a + delta), rad/s.
    pub fn omega_p(&self) -> f64 {
        2.0 * (self.omega_a + self.delta)
    }
}

/// Pump Stark coefficient: delta_b = delta - stark_coefficient * n_p.
pub fn stark_coefficient(mode: &ModeParams) -> f64 {
    32.0 / 3.0 * mode.g4 - 28.0 * mode.g3 * mode.g3 / mode.omega_a
}

/// Lowest-order pumped-frame parameters. The O(n_p) dressing of K beyond
/// 12 g4* is only accessible through the harmonic-balance solver and the
/// time-domain oracle.
pub fn effective_params(delta: f64, n_p: f64, mode: &ModeParams) -> EffectiveModel {
    debug_assert!(n_p >= 0.0);
    EffectiveModel {
        flux: mode.flux,
        delta,
        n_p,
        delta_b: delta - stark_coefficient(mode) * n_p,
        g: 2.0 * mode.g3.abs() * n_p.sqrt(),
        kerr: 12.0 * mode.g4_star,
        kappa: mode.kappa,
        omega_a: mode.omega_a,
    }
}

/// Small-signal power gain G0 = 1 + 4 k^2 g^2 / (db^2 + k^2/4 - 4 g^2)^2.
pub fn small_signal_gain(model: &EffectiveModel) -> Result<f64> {
    let q = 4.0 * model.g * model.g;
    let stable = model.delta_b * model.delta_b + model.kappa * model.kappa / 4.0;
    if q >= stable {
        return Err(Error::AboveThreshold);
    }
    let d = stable - q;
    Ok(1.0 + model.kappa * model.kappa * q / (d * d))
}

/// Full semiclassical gain with signal/idler Stark shifts
/// `delta_{s/i} = delta_b - K (n_{s/i} + 2 n_{i/s})`.
pub fn gain(model: &EffectiveModel, n_s: f64, n_i: f64) -> f64 {
    let ds = model.delta_b - model.kerr * (n_s + 2.0 * n_i);
    let di = model.delta_b - model.kerr * (n_i + 2.0 * n_s);
    let k2_4 = model.kappa * model.kappa / 4.0;
    let num = (2.0 * model.g * model.kappa).powi(2);
    let a = k2_4 + di * ds - 4.0 * model.g * model.g;
    let b = k2_4 * (di - ds) * (di - ds);
    1.0 + num / (a * a + b)
}

const FIXED_POINT_ITERS: usize = 10_000;

/// Threshold residual T(n) - n with T(n) = (k^2 + 4 db(n)^2)/(8 g3)^2.
fn threshold_map(n: f64, delta: f64, lambda: f64, kappa: f64, g3: f64) -> f64 {
    let db = delta - lambda * n;
    (kappa * kappa + 4.0 * db * db) / (64.0 * g3 * g3)
}

/// Self-consistent parametric instability threshold: the smallest n_p with
/// n_p = (k^2 + 4 delta_b(n_p)^2) / (8 g3)^2.
///
/// Damped fixed-point iteration (0.5) with a bisection fallback; the
/// iterate is reported on failure. Where the Stark runaway closes the
/// threshold entirely the iteration diverges and NoConvergence is
/// returned, which is the mechanism bounding reachable detunings.
pub fn threshold_np(delta: f64, mode: &ModeParams) -> Result<f64> {
    if mode.g3 == 0.0 {
        return Err(Error::Unbounded);
    }
    let lambda = stark_coefficient(mode);
    let kappa = mode.kappa;
    let g3 = mode.g3;
    let t = |n: f64| threshold_map(n, delta, lambda, kappa, g3);

    let mut n = t(0.0);
    let cap = 1e15;
    for i in 0..FIXED_POINT_ITERS {
        let next = n + 0.5 * (t(n) - n);
        if !next.is_finite() || next > cap || next < 0.0 {
            return bisect_threshold(delta, mode).map_err(|_| Error::NoConvergence {
                iterations: i,
                last: n,
            });
        }
        if (next - n).abs() <= 1e-10 * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        n = next;
    }
    bisect_threshold(delta, mode).map_err(|_| Error::NoConvergence {
        iterations: FIXED_POINT_ITERS,
        last: n,
    })
}

/// Bisection on the residual T(n) - n from n = 0 up to the first sign
/// change; independent of the fixed-point path.
fn bisect_threshold(delta: f64, mode: &ModeParams) -> Result<f64> {
    let lambda = stark_coefficient(mode);
    let t = |n: f64| threshold_map(n, delta, lambda, mode.kappa, mode.g3);
    let r = |n: f64| t(n) - n;
    // climb in octaves until the residual turns negative
    let mut lo = 0.0f64;
    let mut hi = t(0.0).max(1.0);
    let mut found = false;
    for _ in 0..120 {
        if r(hi) < 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 1.5;
        if hi > 1e18 {
            break;
        }
    }
    if !found {
        return Err(Error::NoConvergence { iterations: 0, last: hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest n_p with small-signal gain equal to `target_g0`, using the
/// self-consistent delta_b(n_p). GainUnreachable marks detunings where no
/// pump power reaches the target; those rows bound the sweep windows.
pub fn np_for_gain(target_g0: f64, delta: f64, mode: &ModeParams) -> Result<f64> {
    if target_g0 < 1.0 {
        return Err(Error::GainUnreachable);
    }
    if target_g0 == 1.0 {
        return Ok(0.0);
    }
    let g0_at = |n: f64| {
        let m = effective_params(delta, n, mode);
        small_signal_gain(&m)
    };
    let hi = match threshold_np(delta, mode) {
        // G0 -> infinity at the threshold, so the target is reachable.
        Ok(n_th) => n_th * (1.0 - 1e-12),
        Err(Error::Unbounded) => return Err(Error::GainUnreachable),
        Err(_) => {
            // No threshold: the gain peaks at finite n_p. Scan for the
            // first crossing if the peak clears the target.
            let mut best = 1.0f64;
            let mut reach = None;
            let mut n = 1.0;
            while n < 1e10 {
                if let Ok(g) = g0_at(n) {
                    best = best.max(g);
                    if g >= target_g0 {
                        reach = Some(n);
                        break;
                    }
                }
                n *= 1.05;
            }
            match reach {
                Some(n) => n,
                None => {
                    let _ = best;
                    return Err(Error::GainUnreachable);
                }
            }
        }
    };
    // First crossing from below, then bisection to 1e-6 relative.
    let cells = 4096;
    let mut lo = 0.0f64;
    let mut bracket = None;
    for i in 1..=cells {
        let n = hi * i as f64 / cells as f64;
        let g = g0_at(n).unwrap_or(f64::INFINITY);
        if g >= target_g0 {
            bracket = Some((lo, n));
            break;
        }
        lo = n;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::GainUnreachable)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = g0_at(mid).unwrap_or(f64::INFINITY);
        if g < target_g0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-7 * hi.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One steady state of the reduced three-tone system.
///
/// `alpha_p = sqrt(n_p)` with the pump phase absorbed so the three-wave
/// coupling `4 g3 alpha_p` equals `2 g >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbState {
    pub alpha_s: Complex64,
    pub alpha_i: Complex64,
    pub alpha_h: Complex64,
    pub alpha_p: Complex64,
    /// Signal offset w_s - w_p/2, rad/s.
    pub omega: f64,
    pub u_s: Complex64,
    pub u_i: Complex64,
    pub u_h: Complex64,
}

impl HbState {
    /// Zero-amplitude start for the given drives.
    pub fn trivial(omega: f64, u_s: Complex64, u_i: Complex64, u_h: Complex64, n_p: f64) -> Self {
        Self {
            alpha_s: Complex64::ZERO,
            alpha_i: Complex64::ZERO,
            alpha_h: Complex64::ZERO,
            alpha_p: Complex64::new(n_p.sqrt(), 0.0),
            omega,
            u_s,
            u_i,
            u_h,
        }
    }
}

/// Residuals of the three complex balance equations.
fn hb_residual(s: &HbState, m: &EffectiveModel) -> [Complex64; 3] {
    let k = m.kerr;
    let half_k = 0.5 * m.kappa;
    let q = Complex64::new(2.0 * m.g, 0.0); // 4 g3 alpha_p, phase absorbed
    let p = q + k * s.alpha_h * s.alpha_h;
    let ns = s.alpha_s.norm_sqr();
    let ni = s.alpha_i.norm_sqr();
    let nh = s.alpha_h.norm_sqr();
    let f1 = (Complex64::new(s.omega + m.delta_b, half_k)) * s.alpha_s
        - s.u_s
        - p * s.alpha_i.conj()
        - k * (ns + 2.0 * ni + 2.0 * nh) * s.alpha_s;
    let f2 = (Complex64::new(-s.omega + m.delta_b, half_k)) * s.alpha_i
        - s.u_i
        - p * s.alpha_s.conj()
        - k * (ni + 2.0 * ns + 2.0 * nh) * s.alpha_i;
    let f3 = (Complex64::new(m.delta_b, half_k)) * s.alpha_h
        - s.u_h
        - q * s.alpha_h.conj()
        - k * (nh + 2.0 * ns + 2.0 * ni) * s.alpha_h;
    [f1, f2, f3]
}

/// Wirtinger derivatives (dF/dz, dF/dz*) of the residuals; assembled into
/// the 6x6 real Jacobian.
#[allow(clippy::type_complexity)]
fn hb_jacobian(s: &HbState, m: &EffectiveModel) -> SMatrix<f64, 6, 6> {
    let k = m.kerr;
    let half_k = 0.5 * m.kappa;
    let q = Complex64::new(2.0 * m.g, 0.0);
    let p = q + k * s.alpha_h * s.alpha_h;
    let (a_s, a_i, a_h) = (s.alpha_s, s.alpha_i, s.alpha_h);
    let (ns, ni, nh) = (a_s.norm_sqr(), a_i.norm_sqr(), a_h.norm_sqr());

    // rows: F1, F2, F3; cols: alpha_s, alpha_i, alpha_h
    let c1 = Complex64::new(s.omega + m.delta_b, half_k);
    let c2 = Complex64::new(-s.omega + m.delta_b, half_k);
    let c3 = Complex64::new(m.delta_b, half_k);

    let dz = [
        [
            c1 - k * (2.0 * ns + 2.0 * ni + 2.0 * nh),
            -k * 2.0 * a_i.conj() * a_s,
            -2.0 * k * a_h * a_i.conj() - 2.0 * k * a_h.conj() * a_s,
        ],
        [
            -k * 2.0 * a_s.conj() * a_i,
            c2 - k * (2.0 * ni + 2.0 * ns + 2.0 * nh),
            -2.0 * k * a_h * a_s.conj() - 2.0 * k * a_h.conj() * a_i,
        ],
        [
            -2.0 * k * a_s.conj() * a_h,
            -2.0 * k * a_i.conj() * a_h,
            c3 - k * (2.0 * nh + 2.0 * ns + 2.0 * ni),
        ],
    ];
    let dzbar = [
        [
            -k * a_s * a_s,
            -p - 2.0 * k * a_i * a_s,
            -2.0 * k * a_h * a_s,
        ],
        [
            -p - 2.0 * k * a_s * a_i,
            -k * a_i * a_i,
            -2.0 * k * a_h * a_i,
        ],
        [
            -2.0 * k * a_s * a_h,
            -2.0 * k * a_i * a_h,
            -q - k * a_h * a_h,
        ],
    ];

    let mut jac = SMatrix::<f64, 6, 6>::zeros();
    for r in 0..3 {
        for c in 0..3 {
            let a = dz[r][c];
            let b = dzbar[r][c];
            // d(Re F, Im F)/d(Re z, Im z) from Wirtinger pairs
            jac[(2 * r, 2 * c)] = (a + b).re;
            jac[(2 * r, 2 * c + 1)] = -(a - b).im;
            jac[(2 * r + 1, 2 * c)] = (a + b).im;
            jac[(2 * r + 1, 2 * c + 1)] = (a - b).re;
        }
    }
    jac
}

fn hb_norm(f: &[Complex64; 3]) -> f64 {
    f.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Newton solve of the three complex balance equations from one start.
/// Converges when every residual is below 1e-10 * kappa.
pub fn solve_harmonic_balance(start: &HbState, model: &EffectiveModel) -> Result<HbState> {
    let tol = 1e-10 * model.kappa;
    let mut s = *start;
    let mut res = hb_residual(&s, model);
    let mut norm = hb_norm(&res);
    for it in 0..200 {
        if norm < tol {
            return Ok(s);
        }
        let jac = hb_jacobian(&s, model);
        let rhs = SVector::<f64, 6>::from_column_slice(&[
            -res[0].re, -res[0].im, -res[1].re, -res[1].im, -res[2].re, -res[2].im,
        ]);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence { iterations: it, last: norm })?;
        // backtracking line search on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = HbState {
                alpha_s: s.alpha_s + lambda * Complex64::new(step[0], step[1]),
                alpha_i: s.alpha_i + lambda * Complex64::new(step[2], step[3]),
                alpha_h: s.alpha_h + lambda * Complex64::new(step[4], step[5]),
                ..s
            };
            let trial_res = hb_residual(&trial, model);
            let trial_norm = hb_norm(&trial_res);
            if trial_norm < norm || trial_norm < tol {
                s = trial;
                res = trial_res;
                norm = trial_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: it, last: norm });
        }
    }
    if norm < tol {
        Ok(s)
    } else {
        Err(Error::NoConvergence { iterations: 200, last: norm })
    }
}

/// Multi-start solve: the zero-amplitude start plus both signs of the
/// closed-form period-doubling amplitude. Distinct converged solutions are
/// returned; per-start failures are not fatal unless all starts fail.
pub fn harmonic_balance_solutions(
    omega: f64,
    u_s: Complex64,
    u_i: Complex64,
    u_h: Complex64,
    model: &EffectiveModel,
) -> Result<Vec<HbState>> {
    let mut starts = vec![HbState::trivial(omega, u_s, u_i, u_h, model.n_p)];
    if let Ok(roots) = period_doubling_amplitudes(model) {
        for root in roots {
            let r = root.amp_sq.sqrt();
            // phase from (delta_b - K r^2 + i kappa/2) = 2 g e^{-2 i theta}
            let c = Complex64::new(model.delta_b - model.kerr * root.amp_sq, 0.5 * model.kappa);
            let theta = -0.5 * c.arg();
            for sign in [1.0, -1.0] {
                let mut st = HbState::trivial(omega, u_s, u_i, u_h, model.n_p);
                st.alpha_h = sign * r * Complex64::new(theta.cos(), theta.sin());
                starts.push(st);
            }
        }
    }
    let mut out: Vec<HbState> = Vec::new();
    let mut last_err = None;
    for st in &starts {
        match solve_harmonic_balance(st, model) {
            Ok(sol) => {
                let dup = out.iter().any(|o| {
                    (o.alpha_s - sol.alpha_s).norm()
                        + (o.alpha_i - sol.alpha_i).norm()
                        + (o.alpha_h - sol.alpha_h).norm()
                        < 1e-6 * (1.0 + sol.alpha_h.norm() + sol.alpha_s.norm())
                });
                if !dup {
                    out.push(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if out.is_empty() {
        Err(last_err.unwrap_or(Error::NoConvergence { iterations: 0, last: f64::NAN }))
    } else {
        Ok(out)
    }
}

/// Reflection power gain of a converged signal solution:
/// `a_out/a_in = 1 - i kappa alpha_s / u_s`.
pub fn hb_reflection_gain(state: &HbState, model: &EffectiveModel) -> f64 {
    let ratio = Complex64::ONE - Complex64::I * model.kappa * state.alpha_s / state.u_s;
    ratio.norm_sqr()
}

/// Which closed-form branch produced a period-doubled amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodDoublingRoot {
    /// |alpha_h|^2, photons.
    pub amp_sq: f64,
    pub branch: BranchSign,
}

/// Closed-form period-doubled amplitudes
/// `|alpha_h|^2 = [delta_b +- sqrt((4 g3 |alpha_p|)^2 - kappa^2/4)] / K`.
/// Only real non-negative roots are returned; empty set below the I/III
/// line. DegenerateKerr guards the K -> 0 division.
pub fn period_doubling_amplitudes(model: &EffectiveModel) -> Result<Vec<PeriodDoublingRoot>> {
    if model.kerr.abs() < 1e-6 * model.kappa {
        return Err(Error::DegenerateKerr);
    }
    let s = (2.0 * model.g).powi(2) - model.kappa * model.kappa / 4.0;
    if s < 0.0 {
        return Ok(Vec::new());
    }
    let root = s.sqrt();
    let mut out = Vec::new();
    for (branch, sign) in [(BranchSign::Plus, 1.0), (BranchSign::Minus, -1.0)] {
        let amp = (model.delta_b + sign * root) / model.kerr;
        if amp >= 0.0 && amp.is_finite() {
            out.push(PeriodDoublingRoot { amp_sq: amp, branch });
        }
    }
    out.sort_by(|a, b| a.amp_sq.total_cmp(&b.amp_sq));
    Ok(out)
}

/// Stability classes of the pumped Kerr oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityRegion {
    /// (I) single zero-amplitude attractor.
    Monostable,
    /// (II) period-doubled pair, zero amplitude unstable.
    Bistable,
    /// (III) zero amplitude coexists with the period-doubled pair.
    Tristable,
}

impl std::fmt::Display for StabilityRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StabilityRegion::Monostable => "I",
            StabilityRegion::Bistable => "II",
            StabilityRegion::Tristable => "III",
        };
        f.write_str(s)
    }
}

/// Region label from the analytic boundary conditions, evaluated with the
/// dressed delta_b(n_p).
pub fn classify_stability(delta: f64, n_p: f64, mode: &ModeParams) -> StabilityRegion {
    let m = effective_params(delta, n_p, mode);
    let q = (2.0 * m.g).powi(2); // (4 g3 |alpha_p|)^2
    let quarter = m.kappa * m.kappa / 4.0;
    if q > quarter + m.delta_b * m.delta_b {
        StabilityRegion::Bistable
    } else if m.delta_b < 0.0 && q > quarter {
        StabilityRegion::Tristable
    } else {
        StabilityRegion::Monostable
    }
}

/// Sampled boundary polylines in the (delta, n_p) plane.
#[derive(Debug, Clone, Default)]
pub struct StabilityBoundaries {
    /// Threshold points with delta_b > 0 (I/II line).
    pub i_ii: Vec<(f64, f64)>,
    /// n_p = kappa^2/(8 g3)^2 wherever delta_b < 0 there (I/III line).
    pub i_iii: Vec<(f64, f64)>,
    /// Threshold points with delta_b < 0 (II/III line).
    pub ii_iii: Vec<(f64, f64)>,
}

/// Boundary curves over a detuning grid. The threshold condition
/// (4 g3 |alpha_p|)^2 = kappa^2/4 + delta_b^2 is quadratic in n_p once
/// delta_b(n_p) is substituted; both positive roots are boundary points.
pub fn stability_boundaries(deltas: &[f64], mode: &ModeParams) -> StabilityBoundaries {
    let lambda = stark_coefficient(mode);
    let g3 = mode.g3;
    let kappa = mode.kappa;
    let mut out = StabilityBoundaries::default();
    for &delta in deltas {
        // 4 lambda^2 n^2 - (8 lambda delta + 64 g3^2) n + kappa^2 + 4 delta^2 = 0
        let a = 4.0 * lambda * lambda;
        let b = -(8.0 * lambda * delta + 64.0 * g3 * g3);
        let c = kappa * kappa + 4.0 * delta * delta;
        let roots: Vec<f64> = if a == 0.0 {
            if b == 0.0 { vec![] } else { vec![-c / b] }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                vec![]
            } else {
                let sq = disc.sqrt();
                vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
            }
        };
        for n in roots.into_iter().filter(|n| *n > 0.0) {
            let db = delta - lambda * n;
            if db > 0.0 {
                out.i_ii.push((delta, n));
            } else {
                out.ii_iii.push((delta, n));
            }
        }
        let n_iii = kappa * kappa / (64.0 * g3 * g3);
        if n_iii.is_finite() {
            let db = delta - lambda * n_iii;
            if db < 0.0
                && classify_stability(delta, n_iii * 1.0000001, mode) != StabilityRegion::Bistable
            {
                out.i_iii.push((delta, n_iii));
            }
        }
    }
    out
}
