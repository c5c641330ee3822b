//! Fundamental-mode solution of the SNAIL-loaded transmission line
//! resonator and the Hamiltonian coefficients g3, g4*, g4 versus flux.
//!
//! The array sits at the center of a half-wave microstrip resonator; the
//! eigenfrequencies solve `2 Z_c / (M L_s) = w tan(pi w / (2 w0))` with the
//! flux-dependent array inductance per SNAIL `L_s = L_J / c2`.

use crate::constants::{HBAR, R_Q, TWO_PI};
use crate::error::{Error, Result};
use crate::snail::{taylor_coeffs_tracked, SnailSpec, TaylorCoeffs};

/// Damping rate, either constant or piecewise-linear in Phi/Phi0.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaSpec {
    Constant(f64),
    /// (flux, kappa rad/s) knots with strictly increasing flux; clamped ends.
    Table(Vec<(f64, f64)>),
}

impl KappaSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KappaSpec::Constant(k) if *k > 0.0 && k.is_finite() => Ok(()),
            KappaSpec::Constant(k) => {
                Err(Error::InvalidSpec(format!("kappa = {k} must be positive")))
            }
            KappaSpec::Table(t) => {
                if t.is_empty() {
                    return Err(Error::InvalidSpec("empty kappa table".into()));
                }
                for w in t.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidSpec("kappa table flux not increasing".into()));
                    }
                }
                if t.iter().any(|&(_, k)| !(k > 0.0) || !k.is_finite()) {
                    return Err(Error::InvalidSpec("kappa table has non-positive entry".into()));
                }
                Ok(())
            }
        }
    }

    /// kappa at the given flux, rad/s.
    pub fn at(&self, flux: f64) -> f64 {
        match self {
            KappaSpec::Constant(k) => *k,
            KappaSpec::Table(t) => {
                if flux <= t[0].0 {
                    return t[0].1;
                }
                if flux >= t[t.len() - 1].0 {
                    return t[t.len() - 1].1;
                }
                for w in t.windows(2) {
                    let ((f0, k0), (f1, k1)) = (w[0], w[1]);
                    if flux <= f1 {
                        return k0 + (k1 - k0) * (flux - f0) / (f1 - f0);
                    }
                }
                unreachable!()
            }
        }
    }
}

/// Distributed circuit description.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    /// Microstrip characteristic impedance, ohm.
    pub z_c: f64,
    /// Bare half-wave angular frequency of the unloaded resonator, rad/s.
    pub omega0: f64,
    /// Energy damping rate, rad/s.
    pub kappa: KappaSpec,
    pub snail: SnailSpec,
}

impl CircuitSpec {
    pub fn new(z_c: f64, omega0: f64, kappa: KappaSpec, snail: SnailSpec) -> Result<Self> {
        if !(z_c > 0.0) || !z_c.is_finite() {
            return Err(Error::InvalidSpec(format!("z_c = {z_c} must be positive")));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::InvalidSpec(format!("omega0 = {omega0} must be positive")));
        }
        kappa.validate()?;
        Ok(Self { z_c, omega0, kappa, snail })
    }

    /// The fitted device: Z_c = 45.8 ohm, L_J = 38 pH, M = 20,
    /// omega0 = 2*pi*16 GHz, alpha = 0.065, kappa = 2*pi*200 MHz.
    pub fn default_device() -> Self {
        Self {
            z_c: 45.8,
            omega0: TWO_PI * 16.0e9,
            kappa: KappaSpec::Constant(TWO_PI * 200e6),
            snail: SnailSpec::new(38e-12, 0.065, 20).expect("default device is valid"),
        }
    }
}

/// Per-flux linear and nonlinear mode parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeParams {
    /// Phi/Phi0, dimensionless.
    pub flux: f64,
    /// Mode angular frequency, rad/s.
    pub omega_a: f64,
    /// SNAIL inductance L_J/c2, H.
    pub l_s: f64,
    /// Mode capacitance, F.
    pub c1: f64,
    /// Mode inductance, H.
    pub l1: f64,
    /// Mode impedance, ohm.
    pub z1: f64,
    /// Zero-point flux sqrt(hbar Z1 / 2), Wb.
    pub phi_zpf: f64,
    /// Cubic coefficient, rad/s (sign follows the potential convention).
    pub g3: f64,
    /// Quartic coefficient g4* + 5 g3^2/omega_a, rad/s.
    pub g4: f64,
    /// Effective quartic coefficient after cubic elimination, rad/s.
    pub g4_star: f64,
    /// Damping at this flux, rad/s.
    pub kappa: f64,
    pub coeffs: TaylorCoeffs,
}

impl ModeParams {
    /// Perturbative validity Z1 << R_Q.
    pub fn perturbative_ok(&self) -> bool {
        self.z1 / R_Q < 0.1
    }
}

/// Dispersion function F(w) = w tan(pi w / (2 w0)) - rhs; roots are mode
/// eigenfrequencies.
fn dispersion(omega: f64, omega0: f64, rhs: f64) -> f64 {
    let x = 0.5 * std::f64::consts::PI * omega / omega0;
    omega * x.tan() - rhs
}

fn dispersion_slope(omega: f64, omega0: f64) -> f64 {
    let h = 0.5 * std::f64::consts::PI / omega0;
    let x = h * omega;
    let c = x.cos();
    x.tan() + omega * h / (c * c)
}

/// Smallest positive dispersion root given the reduced c2 at this flux.
fn fundamental_root(c2: f64, circuit: &CircuitSpec) -> Result<f64> {
    let l_s = circuit.snail.l_j / c2;
    let rhs = 2.0 * circuit.z_c / (circuit.snail.m as f64 * l_s);
    let w0 = circuit.omega0;
    let delta = 1e-6 * w0;
    let (mut lo, mut hi) = (delta, w0 - delta);
    if dispersion(lo, w0, rhs) >= 0.0 || dispersion(hi, w0, rhs) <= 0.0 {
        return Err(Error::RootNotBracketed);
    }
    // bisection to ~1e-3 relative, then Newton polish
    while (hi - lo) / w0 > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if dispersion(mid, w0, rhs) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..60 {
        let f = dispersion(w, w0, rhs);
        let step = f / dispersion_slope(w, w0);
        let next = (w - step).clamp(lo, hi);
        if f < 0.0 {
            lo = lo.max(w);
        } else {
            hi = hi.min(w);
        }
        if (next - w).abs() <= 1e-15 * w {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

/// Mode frequency at a flux point, rad/s.
pub fn mode_frequency(flux: f64, circuit: &CircuitSpec) -> Result<f64> {
    let coeffs = taylor_coeffs_tracked(TWO_PI * flux, None, false, &circuit.snail)?;
    fundamental_root(coeffs.c2, circuit)
}

/// First `count` dispersion roots (diagnostic; only the fundamental feeds
/// the physics).
pub fn dispersion_roots(flux: f64, circuit: &CircuitSpec, count: usize) -> Result<Vec<f64>> {
    let coeffs = taylor_coeffs_tracked(TWO_PI * flux, None, false, &circuit.snail)?;
    let l_s = circuit.snail.l_j / coeffs.c2;
    let rhs = 2.0 * circuit.z_c / (circuit.snail.m as f64 * l_s);
    let w0 = circuit.omega0;
    let mut roots = vec![fundamental_root(coeffs.c2, circuit)?];
    for n in 1..count {
        // one root per tan branch ((2n-1) w0, (2n+1) w0)
        let delta = 1e-9 * w0;
        let (mut lo, mut hi) = ((2 * n as i32 - 1) as f64 * w0 + delta, (2 * n as i32 + 1) as f64 * w0 - delta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dispersion(mid, w0, rhs) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    Ok(roots)
}

/// Mode capacitance, inductance, impedance and zero-point flux from the
/// solved frequency.
pub fn mode_lc(omega_a: f64, circuit: &CircuitSpec) -> (f64, f64, f64, f64) {
    let r = omega_a / circuit.omega0;
    let s = std::f64::consts::PI * r + (std::f64::consts::PI * r).sin();
    let c1 = s / (2.0 * omega_a * circuit.z_c);
    let l1 = 2.0 * circuit.z_c / (omega_a * s);
    let z1 = (l1 / c1).sqrt();
    let phi_zpf = (HBAR * z1 / 2.0).sqrt();
    (c1, l1, z1, phi_zpf)
}

fn g3_from(omega_a: f64, c3: f64, circuit: &CircuitSpec) -> f64 {
    let r = omega_a / circuit.omega0;
    let theta = 0.5 * std::f64::consts::PI * r;
    let s = std::f64::consts::PI * r + (std::f64::consts::PI * r).sin();
    let m = circuit.snail.m as f64;
    let cos2 = theta.cos() * theta.cos();
    4.0 * circuit.z_c * c3 / (3.0 * m * m * circuit.snail.l_j)
        * (cos2 / s).powf(1.5)
        * (circuit.z_c / R_Q).sqrt()
}

fn g4_star_from(omega_a: f64, coeffs: &TaylorCoeffs, circuit: &CircuitSpec) -> f64 {
    let r = omega_a / circuit.omega0;
    let theta = 0.5 * std::f64::consts::PI * r;
    let sin_pir = (std::f64::consts::PI * r).sin();
    let s = std::f64::consts::PI * r + sin_pir;
    let m = circuit.snail.m as f64;
    let l_s = circuit.snail.l_j / coeffs.c2;
    let x = omega_a * m * l_s / (2.0 * circuit.z_c);
    let bracket = coeffs.c4
        - coeffs.c3 * coeffs.c3 / coeffs.c2 * (3.0 + 5.0 * x * x) / (1.0 + 3.0 * x * x);
    omega_a * sin_pir * sin_pir / (12.0 * coeffs.c2 * m * m * theta.tan() * s * s)
        * (circuit.z_c / R_Q)
        * bracket
}

/// Cubic coefficient recomputed from a solved mode, rad/s.
pub fn g3_coefficient(mode: &ModeParams, circuit: &CircuitSpec) -> f64 {
    g3_from(mode.omega_a, mode.coeffs.c3, circuit)
}

/// Effective quartic coefficient recomputed from a solved mode, rad/s.
pub fn g4_star_coefficient(mode: &ModeParams, circuit: &CircuitSpec) -> f64 {
    g4_star_from(mode.omega_a, &mode.coeffs, circuit)
}

/// Solves the full chain at one flux point.
pub fn solve_mode(flux: f64, circuit: &CircuitSpec) -> Result<ModeParams> {
    solve_mode_tracked(flux, None, circuit)
}

/// Warm-started variant for contiguous flux sweeps: `prev_min` is the
/// tracked potential minimum of the previous point.
pub fn solve_mode_tracked(
    flux: f64,
    prev_min: Option<f64>,
    circuit: &CircuitSpec,
) -> Result<ModeParams> {
    let coeffs = taylor_coeffs_tracked(TWO_PI * flux, prev_min, true, &circuit.snail)?;
    let omega_a = fundamental_root(coeffs.c2, circuit)?;
    let (c1, l1, z1, phi_zpf) = mode_lc(omega_a, circuit);
    let g3 = g3_from(omega_a, coeffs.c3, circuit);
    let g4_star = g4_star_from(omega_a, &coeffs, circuit);
    let g4 = g4_star + 5.0 * g3 * g3 / omega_a;
    let mode = ModeParams {
        flux,
        omega_a,
        l_s: circuit.snail.l_j / coeffs.c2,
        c1,
        l1,
        z1,
        phi_zpf,
        g3,
        g4,
        g4_star,
        kappa: circuit.kappa.at(flux),
        coeffs,
    };
    if !mode.perturbative_ok() {
        log::warn!(
            "Z1/R_Q = {:.3} above 0.1 at flux {flux}: perturbative coefficients suspect",
            z1 / R_Q
        );
    }
    Ok(mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;

    fn device() -> CircuitSpec {
        CircuitSpec::default_device()
    }

    #[test]
    fn kappa_table_interpolates_and_clamps() {
        let t = KappaSpec::Table(vec![(0.0, 1.0), (0.5, 2.0)]);
        t.validate().unwrap();
        assert_eq!(t.at(-1.0), 1.0);
        assert_eq!(t.at(1.0), 2.0);
        assert!((t.at(0.25) - 1.5).abs() < 1e-15);
        assert!(KappaSpec::Table(vec![(0.3, 1.0), (0.2, 2.0)]).validate().is_err());
        assert!(KappaSpec::Table(vec![]).validate().is_err());
    }

    #[test]
    fn dispersion_root_matches_dense_scan() {
        let d = device();
        for flux in [0.0, 0.13, 0.27, 0.41, 0.5] {
            let w = mode_frequency(flux, &d).unwrap();
            let coeffs =
                crate::snail::taylor_coeffs(TWO_PI * flux, &d.snail).unwrap();
            let rhs = 2.0 * d.z_c * coeffs.c2 / (d.snail.m as f64 * d.snail.l_j);
            // residual relative to rhs
            let res = (dispersion(w, d.omega0, rhs) / rhs).abs();
            assert!(res < 1e-10, "residual {res}");
            // dense 1e5-point sign-change scan: root inside one cell, and unique
            let n = 100_000;
            let lo = 1e-6 * d.omega0;
            let hi = d.omega0 * (1.0 - 1e-9);
            let step = (hi - lo) / n as f64;
            let mut crossings = 0;
            let mut hit = false;
            for i in 0..n {
                let a = lo + step * i as f64;
                let b = a + step;
                if dispersion(a, d.omega0, rhs) * dispersion(b, d.omega0, rhs) < 0.0 {
                    crossings += 1;
                    if w >= a - step && w <= b + step {
                        hit = true;
                    }
                }
            }
            assert_eq!(crossings, 1, "fundamental root must be unique in (0, w0)");
            assert!(hit, "root outside the scan cell");
        }
    }

    #[test]
    fn root_approaches_omega0_for_vanishing_array_inductance() {
        let mut d = device();
        // tiny L_J at fixed c2 -> L_s -> 0
        d.snail = SnailSpec::new(1e-15, 0.065, 20).unwrap();
        let w = mode_frequency(0.0, &d).unwrap();
        assert!(w < d.omega0 && w > d.omega0 * (1.0 - 1e-3), "w = {w}");
    }

    #[test]
    fn lc_identities() {
        let d = device();
        for flux in [0.05, 0.21, 0.37] {
            let m = solve_mode(flux, &d).unwrap();
            let w = 1.0 / (m.l1 * m.c1).sqrt();
            assert!((w / m.omega_a - 1.0).abs() < 1e-12);
        }
        // closed form at omega_a = omega0/2
        let (c1, _, _, _) = mode_lc(d.omega0 / 2.0, &d);
        let expected = (std::f64::consts::PI / 2.0 + 1.0) / (d.omega0 * d.z_c);
        assert!((c1 / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frequency_range_of_default_device() {
        // The reduced model with the fitted parameters tunes over
        // [6.68, 7.86] GHz as flux spans [0, 0.5] (see acceptance notes).
        let d = device();
        let top = mode_frequency(0.0, &d).unwrap() / TWO_PI;
        let bottom = mode_frequency(0.5, &d).unwrap() / TWO_PI;
        assert!((top - 7.86e9).abs() < 0.02e9, "top {top}");
        assert!((bottom - 6.68e9).abs() < 0.02e9, "bottom {bottom}");
    }

    #[test]
    fn omega_monotone_and_smooth_over_flux() {
        let d = device();
        let mut prev: Option<ModeParams> = None;
        let n = 500;
        for i in 0..=n {
            let flux = 0.5 * i as f64 / n as f64;
            let m = solve_mode_tracked(flux, prev.as_ref().map(|p| p.coeffs.phi_min), &d).unwrap();
            if let Some(p) = &prev {
                assert!(m.omega_a < p.omega_a, "omega_a not decreasing at {flux}");
            }
            prev = Some(m);
        }
    }

    #[test]
    fn g3_scale_and_antisymmetry() {
        let d = device();
        let m = solve_mode(0.30, &d).unwrap();
        let scale = m.g3.abs() / TWO_PI;
        // sub-MHz to few-MHz three-wave coupling, consistent with a
        // threshold at 10^3-ish pump photons for kappa/2pi = 200 MHz
        assert!(scale > 0.1e6 && scale < 10e6, "|g3|/2pi = {scale}");
        let neg = solve_mode(-0.30, &d).unwrap();
        assert!(m.g3 * neg.g3 < 0.0, "sign must flip with flux sign");
        assert!((m.g3 + neg.g3).abs() < 1e-6 * m.g3.abs());
        let zero = solve_mode(0.0, &d).unwrap();
        assert_eq!(zero.g3, 0.0);
    }

    #[test]
    fn g4_star_zero_crossing_window() {
        let d = device();
        let mut signs = Vec::new();
        let mut prev = None;
        for i in 0..=180 {
            let flux = 0.30 + 0.18 * i as f64 / 180.0;
            let m = solve_mode_tracked(flux, prev, &d).unwrap();
            prev = Some(m.coeffs.phi_min);
            signs.push((flux, m.g4_star));
        }
        let crossings: Vec<f64> = signs
            .windows(2)
            .filter(|w| w[0].1 * w[1].1 < 0.0)
            .map(|w| 0.5 * (w[0].0 + w[1].0))
            .collect();
        assert_eq!(crossings.len(), 1, "exactly one crossing in [0.30, 0.48]");
        assert!(crossings[0] > 0.35 && crossings[0] < 0.45, "at {}", crossings[0]);
    }

    #[test]
    fn g4_definition_exact() {
        let d = device();
        for flux in [0.1, 0.22, 0.34, 0.46] {
            let m = solve_mode(flux, &d).unwrap();
            let residual = m.g4 - m.g4_star - 5.0 * m.g3 * m.g3 / m.omega_a;
            assert!(
                residual.abs() <= 4.0 * f64::EPSILON * m.g4.abs().max(m.g4_star.abs()),
                "residual {residual}"
            );
            // recomputation through the public helpers agrees
            assert_eq!(g3_coefficient(&m, &d), m.g3);
            assert_eq!(g4_star_coefficient(&m, &d), m.g4_star);
        }
    }

    #[test]
    fn bracket_reduces_to_c4_when_c3_vanishes() {
        let d = device();
        let m = solve_mode(0.0, &d).unwrap();
        assert_eq!(m.coeffs.c3, 0.0);
        assert!(m.coeffs.c4 < 0.0);
        assert!(m.g4_star < 0.0, "g4* sign must follow c4 at zero flux");
    }

    #[test]
    fn impedance_perturbative_across_sweep() {
        let d = device();
        for i in 0..=50 {
            let flux = 0.5 * i as f64 / 50.0;
            let m = solve_mode(flux, &d).unwrap();
            assert!(m.z1 / R_Q < 0.1, "Z1/R_Q = {} at {flux}", m.z1 / R_Q);
        }
    }

    #[test]
    fn coefficients_smooth_in_flux() {
        let d = device();
        let mut prev: Option<ModeParams> = None;
        let n = 500; // 1e-3 flux quantum per step
        for i in 0..=n {
            let flux = 0.5 * i as f64 / n as f64;
            let m = solve_mode_tracked(flux, prev.as_ref().map(|p| p.coeffs.phi_min), &d).unwrap();
            if let Some(p) = &prev {
                let jump = (m.omega_a - p.omega_a).abs() / m.omega_a;
                assert!(jump < 0.10, "omega_a jump {jump} at flux {flux}");
                // g3 and g4* cross zero: relative bound away from the
                // crossings, absolute bound near them
                for (a, b, floor) in [
                    (m.g3, p.g3, TWO_PI * 0.01e6),
                    (m.g4_star, p.g4_star, TWO_PI * 0.1e6),
                ] {
                    let jump = (a - b).abs();
                    let rel_ok = jump < 0.10 * a.abs().max(b.abs());
                    assert!(rel_ok || jump < floor, "jump {jump} at {flux}");
                }
            }
            prev = Some(m);
        }
    }

    #[test]
    fn higher_dispersion_roots_are_diagnostic() {
        let d = device();
        let roots = dispersion_roots(0.0, &d, 3).unwrap();
        assert_eq!(roots.len(), 3);
        assert!(roots[1] > d.omega0 && roots[1] < 3.0 * d.omega0);
        assert!(roots[2] > 3.0 * d.omega0);
    }
}
