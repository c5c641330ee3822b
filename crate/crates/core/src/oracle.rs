//! Brute-force time-domain integrator of the classical damped, driven
//! oscillator with the truncated SNAIL nonlinearity. Independent check of
//! gain, period doubling, Stark shift and the stability boundaries.
//!
//! State: complex mode amplitude `a(t)` in the lab frame, displacement
//! `u = a + conj(a)`. Dynamics (no rotating-wave approximation):
//!
//! ```text
//! da/dt = -i [ w_a a + sum_k k g_k u^(k-1) + d(t) ] - (kappa/2) a
//! d(t)  = sum_j 2 A_j cos(w_j t + phase_j)
//! ```
//!
//! so a drive tone with amplitude `A` matches the frequency-domain drive
//! strength `u` of the balance equations. Deterministic: fixed-step RK4,
//! no noise term anywhere.

use crate::constants::{PHI0, TWO_PI};
use crate::error::{Error, Result};
use crate::mode::{CircuitSpec, ModeParams};
use crate::pump::{
    effective_params, period_doubling_amplitudes, BranchSign, StabilityRegion,
};
use num_complex::Complex64;

/// One lab-frame drive tone contributing `2 * amplitude * cos(w t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    /// rad/s.
    pub omega: f64,
    /// Drive strength in the balance-equation normalization, rad/s.
    pub amplitude: f64,
    /// rad.
    pub phase: f64,
}

/// Integration setup.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Highest Taylor order entering the force: 4, 5 or 6.
    pub truncation: u8,
    /// Integrator step, s.
    pub dt: f64,
    /// Total integration time, s.
    pub t_total: f64,
    pub drives: Vec<DriveTone>,
    pub initial: Complex64,
    /// Length of the stored tail used for spectral extraction, s.
    pub window: f64,
    /// |a| beyond which the truncated model is meaningless.
    pub escape_radius: f64,
}

impl OracleConfig {
    pub fn validate(&self, kappa: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.t_total > self.dt && self.window > 0.0) {
            return Err(Error::InvalidConfig("oracle times must be positive".into()));
        }
        if !matches!(self.truncation, 4..=6) {
            return Err(Error::InvalidConfig("truncation must be 4, 5 or 6".into()));
        }
        if kappa > 0.0 && self.t_total < 20.0 / kappa {
            return Err(Error::InvalidConfig(format!(
                "t_total = {} shorter than 20/kappa = {}",
                self.t_total,
                20.0 / kappa
            )));
        }
        let mut slowest_beat: f64 = 0.0;
        for (i, a) in self.drives.iter().enumerate() {
            for b in &self.drives[i + 1..] {
                let df = (a.omega - b.omega).abs();
                if df > 0.0 {
                    slowest_beat = slowest_beat.max(TWO_PI / df);
                }
            }
        }
        if slowest_beat > 0.0 && self.t_total < 50.0 * slowest_beat {
            return Err(Error::InvalidConfig(format!(
                "t_total = {} shorter than 50 beat periods = {}",
                self.t_total,
                50.0 * slowest_beat
            )));
        }
        Ok(())
    }
}

/// Step bound: 64 samples per period of the fastest drive (also satisfies
/// the 1/(50 f_max) guidance).
pub fn default_dt(omega_max: f64) -> f64 {
    TWO_PI / omega_max / 64.0
}

/// Truncated single-mode oscillator: the force coefficients k * g_k.
#[derive(Debug, Clone, Copy)]
pub struct NonlinearOscillator {
    pub omega_a: f64,
    /// 3 g3, 4 g4, 5 g5, 6 g6 (unused orders zero), rad/s.
    force: [f64; 4],
    /// Coefficients for the energy function, rad/s.
    g: [f64; 4],
}

impl NonlinearOscillator {
    /// Builds the truncated model from a solved mode. g3 and g4 come from
    /// the mode itself; g5/g6 are mapped from c5/c6 by the zero-point
    /// scaling g_k = (c_k/k!) M (E_J/hbar) (2 cos(theta) phi_zpf/(M phi0))^k.
    pub fn from_mode(mode: &ModeParams, circuit: &CircuitSpec, truncation: u8) -> Result<Self> {
        if !matches!(truncation, 4..=6) {
            return Err(Error::InvalidConfig("truncation must be 4, 5 or 6".into()));
        }
        let mut g = [0.0f64; 4]; // g3..g6
        g[0] = mode.g3;
        g[1] = mode.g4;
        if truncation >= 5 {
            let theta = 0.5 * std::f64::consts::PI * mode.omega_a / circuit.omega0;
            let m = circuit.snail.m as f64;
            let base = 2.0 * theta.cos() * mode.phi_zpf / (m * PHI0);
            let ej_over_hbar = circuit.snail.e_j() / crate::constants::HBAR;
            let c5 = mode.coeffs.c5.ok_or_else(|| {
                Error::InvalidConfig("c5 not populated on this mode".into())
            })?;
            g[2] = c5 / 120.0 * m * ej_over_hbar * base.powi(5);
            if truncation == 6 {
                let c6 = mode.coeffs.c6.ok_or_else(|| {
                    Error::InvalidConfig("c6 not populated on this mode".into())
                })?;
                g[3] = c6 / 720.0 * m * ej_over_hbar * base.powi(6);
            }
        }
        Ok(Self {
            omega_a: mode.omega_a,
            force: [3.0 * g[0], 4.0 * g[1], 5.0 * g[2], 6.0 * g[3]],
            g,
        })
    }

    /// Nonlinear force term sum_k k g_k u^(k-1) at displacement u.
    #[inline]
    fn nonlinear(&self, u: f64) -> f64 {
        let u2 = u * u;
        u2 * (self.force[0] + u * (self.force[1] + u * (self.force[2] + u * self.force[3])))
    }

    /// Classical energy H/hbar = w_a |a|^2 + sum_k g_k u^k, rad/s.
    pub fn hamiltonian(&self, a: Complex64) -> f64 {
        let u = 2.0 * a.re;
        let u3 = u * u * u;
        self.omega_a * a.norm_sqr()
            + u3 * (self.g[0] + u * (self.g[1] + u * (self.g[2] + u * self.g[3])))
    }
}

/// Escape radius default: the phase across one SNAIL reaching pi, or ten
/// times the high-amplitude fixed point when one is supplied — whichever
/// is smaller.
pub fn default_escape_radius(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    high_amp_sq: Option<f64>,
) -> f64 {
    let theta = 0.5 * std::f64::consts::PI * mode.omega_a / circuit.omega0;
    let base = 2.0 * theta.cos() * mode.phi_zpf / (circuit.snail.m as f64 * PHI0);
    let phase_bound = std::f64::consts::PI / base / 2.0;
    match high_amp_sq {
        Some(a2) if a2 > 0.0 => phase_bound.min(10.0 * a2.sqrt()),
        _ => phase_bound,
    }
}

/// Stored tail of an integration, decimated to a rate still comfortably
/// above every tone of interest.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Spacing of stored samples, s.
    pub sample_dt: f64,
    /// Time of the first stored sample, s.
    pub t_start: f64,
    pub samples: Vec<Complex64>,
}

#[inline]
fn derivative(
    a: Complex64,
    t: f64,
    osc: &NonlinearOscillator,
    kappa: f64,
    drives: &[DriveTone],
) -> Complex64 {
    let u = 2.0 * a.re;
    let mut d = 0.0;
    for dr in drives {
        d += 2.0 * dr.amplitude * (dr.omega * t + dr.phase).cos();
    }
    let z = Complex64::new(osc.omega_a * a.re + osc.nonlinear(u) + d, osc.omega_a * a.im);
    Complex64::new(z.im, -z.re) - 0.5 * kappa * a
}

/// Fixed-step RK4 integration; the `window`-long tail is stored.
pub fn integrate(
    config: &OracleConfig,
    osc: &NonlinearOscillator,
    kappa: f64,
) -> Result<Trajectory> {
    config.validate(kappa)?;
    let dt = config.dt;
    let steps = (config.t_total / dt).ceil() as usize;
    let omega_max = config
        .drives
        .iter()
        .map(|d| d.omega)
        .fold(osc.omega_a, f64::max);
    let target_spacing = TWO_PI / omega_max / 2.5;
    let decim = (target_spacing / dt).floor().max(1.0) as usize;
    let window_steps = (config.window / dt).ceil() as usize;
    let first_stored = steps.saturating_sub(window_steps);

    let mut samples = Vec::with_capacity(window_steps / decim + 2);
    let mut t_start = 0.0;
    let mut a = config.initial;
    let r2 = config.escape_radius * config.escape_radius;
    for step in 0..=steps {
        if a.norm_sqr() > r2 {
            return Err(Error::Overflow {
                t: step as f64 * dt,
                radius: config.escape_radius,
            });
        }
        if step >= first_stored && (step - first_stored) % decim == 0 {
            if samples.is_empty() {
                t_start = step as f64 * dt;
            }
            samples.push(a);
        }
        if step == steps {
            break;
        }
        let t = step as f64 * dt;
        let k1 = derivative(a, t, osc, kappa, &config.drives);
        let k2 = derivative(a + 0.5 * dt * k1, t + 0.5 * dt, osc, kappa, &config.drives);
        let k3 = derivative(a + 0.5 * dt * k2, t + 0.5 * dt, osc, kappa, &config.drives);
        let k4 = derivative(a + dt * k3, t + dt, osc, kappa, &config.drives);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(Trajectory {
        sample_dt: dt * decim as f64,
        t_start,
        samples,
    })
}

/// Complex amplitude of the `exp(-i w t)` component over the last `window`
/// seconds of the trajectory. Hann-weighted projection; leakage from tones
/// separated by at least a few bins is far below -60 dB.
pub fn extract_tone(traj: &Trajectory, omega: f64, window: f64) -> Complex64 {
    let n = traj.samples.len();
    let take = ((window / traj.sample_dt).round() as usize).clamp(2, n);
    let offset = n - take;
    let mut acc = Complex64::ZERO;
    let mut norm = 0.0;
    for (j, a) in traj.samples[offset..].iter().enumerate() {
        let w = 0.5 * (1.0 - (TWO_PI * j as f64 / (take - 1) as f64).cos());
        let t = traj.t_start + (offset + j) as f64 * traj.sample_dt;
        let phase = omega * t;
        acc += w * a * Complex64::new(phase.cos(), phase.sin());
        norm += w;
    }
    acc / norm
}

/// Amplitude decay rate from a log-linear fit of |a(t)| over the stored
/// tail; equals kappa/2 for an undriven linear ring-down.
pub fn ring_down_rate(traj: &Trajectory) -> f64 {
    let pts: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(j, a)| (j as f64 * traj.sample_dt, a.norm().ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    -(n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn pump_tone(mode: &ModeParams, delta: f64, n_p: f64) -> (f64, DriveTone) {
    let omega_p = 2.0 * (mode.omega_a + delta);
    // The balance equations use alpha_p = u_p/w_a with the pump displacement
    // response at w_p = 2 w_a absorbed into the coupling. Off zero detuning
    // the displacement channel is u_p [1/(w_a+2d) - 1/(3w_a+2d)]; calibrate
    // u_p so the three-wave coupling equals 4 g3 sqrt(n_p) exactly.
    let chi = 1.0 / (mode.omega_a + 2.0 * delta) - 1.0 / (3.0 * mode.omega_a + 2.0 * delta);
    let u_p = (2.0 / 3.0) * n_p.sqrt() / chi;
    (
        omega_p,
        DriveTone {
            omega: omega_p,
            amplitude: u_p,
            phase: 0.0,
        },
    )
}

/// Reflection gain of a weak signal at `w_p/2 + omega_offset` under a pump
/// sized for `n_p` photons. Compares directly with the closed-form gain.
pub fn gain_oracle(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    delta: f64,
    n_p: f64,
    omega_offset: f64,
    u_s: f64,
    truncation: u8,
) -> Result<f64> {
    let osc = NonlinearOscillator::from_mode(mode, circuit, truncation)?;
    let (omega_p, pump) = pump_tone(mode, delta, n_p);
    let omega_s = 0.5 * omega_p + omega_offset;
    let window = 50.0 * TWO_PI / omega_offset.abs();
    let settle = 30.0 / mode.kappa;
    let config = OracleConfig {
        truncation,
        dt: default_dt(omega_p.max(omega_s)),
        t_total: settle + window,
        drives: vec![
            pump,
            DriveTone { omega: omega_s, amplitude: u_s, phase: 0.0 },
        ],
        initial: Complex64::ZERO,
        window,
        escape_radius: default_escape_radius(mode, circuit, None),
    };
    let traj = integrate(&config, &osc, mode.kappa)?;
    let alpha_s = extract_tone(&traj, omega_s, window);
    let ratio = Complex64::ONE - Complex64::I * mode.kappa * alpha_s / Complex64::new(u_s, 0.0);
    Ok(ratio.norm_sqr())
}

/// Steady period-doubled intensity |alpha_h|^2 under a pump-only drive,
/// seeded either from the closed-form amplitude or a small kick.
pub fn period_doubling_oracle(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    delta: f64,
    n_p: f64,
    truncation: u8,
    seed_amp_sq: Option<f64>,
) -> Result<f64> {
    let osc = NonlinearOscillator::from_mode(mode, circuit, truncation)?;
    let (omega_p, pump) = pump_tone(mode, delta, n_p);
    let model = effective_params(delta, n_p, mode);
    let initial = match seed_amp_sq {
        Some(a2) => {
            // phase of the doubled state from the balance
            // (C + i kappa/2) alpha_h = 4 g3 alpha_p alpha_h*; in the lab
            // frame the coupling carries the sign of g3
            let c = Complex64::new(model.delta_b - model.kerr * a2, 0.5 * model.kappa);
            let mut theta = -0.5 * c.arg();
            if mode.g3 < 0.0 {
                theta += 0.5 * std::f64::consts::PI;
            }
            a2.sqrt() * Complex64::new(theta.cos(), theta.sin())
        }
        None => 1e-3 * n_p.sqrt().max(1.0) * Complex64::new(0.5f64.sqrt(), 0.5f64.sqrt()),
    };
    let settle = 120.0 / mode.kappa;
    let window = 30.0 / mode.kappa;
    let config = OracleConfig {
        truncation,
        dt: default_dt(omega_p),
        t_total: settle + window,
        drives: vec![pump],
        initial,
        window,
        escape_radius: default_escape_radius(
            mode,
            circuit,
            seed_amp_sq.or(Some(16.0 * n_p)),
        ),
    };
    let traj = integrate(&config, &osc, mode.kappa)?;
    Ok(extract_tone(&traj, 0.5 * omega_p, window).norm_sqr())
}

/// Effective resonance shift seen by a weak probe at the bare mode
/// frequency while a strong drive at `omega_d` holds `nbar`-ish photons.
/// Returns (measured drive photons, shift in rad/s).
pub fn stark_shift_oracle(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    omega_d: f64,
    nbar: f64,
    truncation: u8,
) -> Result<(f64, f64)> {
    let osc = NonlinearOscillator::from_mode(mode, circuit, truncation)?;
    let det = omega_d - mode.omega_a;
    let u_d = (nbar * (det * det + 0.25 * mode.kappa * mode.kappa)).sqrt();
    let u_pr = 0.02 * 0.5 * mode.kappa; // fraction of a photon in the probe
    let beat = TWO_PI / det.abs();
    let window = 60.0 * beat;
    let settle = 30.0 / mode.kappa;
    let config = OracleConfig {
        truncation,
        dt: default_dt(omega_d.max(mode.omega_a)),
        t_total: settle + window,
        drives: vec![
            DriveTone { omega: omega_d, amplitude: u_d, phase: 0.0 },
            DriveTone { omega: mode.omega_a, amplitude: u_pr, phase: 0.0 },
        ],
        initial: Complex64::ZERO,
        window,
        escape_radius: default_escape_radius(mode, circuit, None),
    };
    let traj = integrate(&config, &osc, mode.kappa)?;
    let alpha_d = extract_tone(&traj, omega_d, window);
    let alpha_pr = extract_tone(&traj, mode.omega_a, window);
    let response = -Complex64::I * Complex64::new(u_pr, 0.0) / alpha_pr;
    Ok((alpha_d.norm_sqr(), response.im))
}

/// Amplitude-dependent pull of the driven resonance measured on the drive
/// tone itself: a resonant drive holding `nbar`-ish photons sees the mode
/// at `w_a + 12 g4* |a|^2`. Returns (measured photons, shift in rad/s).
pub fn self_kerr_oracle(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    nbar: f64,
    truncation: u8,
) -> Result<(f64, f64)> {
    let osc = NonlinearOscillator::from_mode(mode, circuit, truncation)?;
    let u_d = nbar.sqrt() * 0.5 * mode.kappa;
    let window = 12.0 / mode.kappa;
    let config = OracleConfig {
        truncation,
        dt: default_dt(mode.omega_a) / 2.0,
        t_total: 40.0 / mode.kappa + window,
        drives: vec![DriveTone { omega: mode.omega_a, amplitude: u_d, phase: 0.0 }],
        initial: Complex64::ZERO,
        window,
        escape_radius: default_escape_radius(mode, circuit, None),
    };
    let traj = integrate(&config, &osc, mode.kappa)?;
    let alpha_d = extract_tone(&traj, mode.omega_a, window);
    // -i u/alpha = kappa_eff/2 + i (w_eff - w_drive), drive at w_a
    let response = -Complex64::I * Complex64::new(u_d, 0.0) / alpha_d;
    Ok((alpha_d.norm_sqr(), response.im))
}

/// Does the zero-amplitude state survive a small kick at this pump?
pub fn zero_state_stable(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    delta: f64,
    n_p: f64,
    truncation: u8,
) -> Result<bool> {
    let osc = NonlinearOscillator::from_mode(mode, circuit, truncation)?;
    let (omega_p, pump) = pump_tone(mode, delta, n_p);
    let seed = 1e-3 * n_p.sqrt().max(1.0);
    let horizon = 700.0 / mode.kappa;
    let window = 30.0 / mode.kappa;
    let config = OracleConfig {
        truncation,
        dt: default_dt(omega_p),
        t_total: horizon,
        drives: vec![pump],
        initial: seed * Complex64::new(0.5f64.sqrt(), 0.5f64.sqrt()),
        window,
        escape_radius: default_escape_radius(mode, circuit, Some(1e4 * n_p.max(1.0))),
    };
    match integrate(&config, &osc, mode.kappa) {
        Ok(traj) => {
            let h = extract_tone(&traj, 0.5 * omega_p, window).norm();
            Ok(h < 20.0 * seed)
        }
        // escape means the kick grew without bound: unstable
        Err(Error::Overflow { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Does the high-amplitude period-doubled state persist once prepared?
/// False when no closed-form stable branch exists.
pub fn high_state_persists(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    delta: f64,
    n_p: f64,
    truncation: u8,
) -> Result<bool> {
    let model = effective_params(delta, n_p, mode);
    let roots = match period_doubling_amplitudes(&model) {
        Ok(r) => r,
        Err(Error::DegenerateKerr) => return Ok(false),
        Err(e) => return Err(e),
    };
    let stable = roots
        .iter()
        .find(|r| r.branch == BranchSign::Minus)
        .map(|r| r.amp_sq);
    let Some(amp_sq) = stable else {
        return Ok(false);
    };
    if amp_sq <= 0.0 {
        return Ok(false);
    }
    let steady = period_doubling_oracle(mode, circuit, delta, n_p, truncation, Some(amp_sq))?;
    Ok(steady > 0.25 * amp_sq)
}

/// Full basin classification, comparable with
/// [`crate::pump::classify_stability`].
pub fn classify_by_basin(
    mode: &ModeParams,
    circuit: &CircuitSpec,
    delta: f64,
    n_p: f64,
    truncation: u8,
) -> Result<StabilityRegion> {
    if !zero_state_stable(mode, circuit, delta, n_p, truncation)? {
        return Ok(StabilityRegion::Bistable);
    }
    if high_state_persists(mode, circuit, delta, n_p, truncation)? {
        Ok(StabilityRegion::Tristable)
    } else {
        Ok(StabilityRegion::Monostable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::solve_mode;

    fn setup() -> (ModeParams, CircuitSpec) {
        let d = CircuitSpec::default_device();
        (solve_mode(0.30, &d).unwrap(), d)
    }

    #[test]
    fn oracle_g3_mapping_matches_mode() {
        // the zero-point mapping for k=3 must reproduce the mode's g3
        let (m, d) = setup();
        let theta = 0.5 * std::f64::consts::PI * m.omega_a / d.omega0;
        let base = 2.0 * theta.cos() * m.phi_zpf / (d.snail.m as f64 * PHI0);
        let g3_mapped =
            m.coeffs.c3 / 6.0 * d.snail.m as f64 * (d.snail.e_j() / crate::constants::HBAR)
                * base.powi(3);
        assert!((g3_mapped / m.g3 - 1.0).abs() < 1e-12, "{g3_mapped} vs {}", m.g3);
    }

    #[test]
    fn ring_down_at_half_kappa() {
        let (m, d) = setup();
        let osc = NonlinearOscillator::from_mode(&m, &d, 4).unwrap();
        let config = OracleConfig {
            truncation: 4,
            dt: default_dt(m.omega_a),
            t_total: 25.0 / m.kappa,
            drives: vec![],
            initial: Complex64::new(0.5, 0.0),
            window: 10.0 / m.kappa,
            escape_radius: 1e4,
        };
        let traj = integrate(&config, &osc, m.kappa).unwrap();
        let rate = ring_down_rate(&traj);
        assert!(
            (rate / (0.5 * m.kappa) - 1.0).abs() < 0.01,
            "rate {rate} vs {}",
            0.5 * m.kappa
        );
    }

    #[test]
    fn weak_resonant_drive_lorentzian() {
        let (m, d) = setup();
        let osc = NonlinearOscillator::from_mode(&m, &d, 4).unwrap();
        let u = 0.02 * 0.5 * m.kappa;
        let config = OracleConfig {
            truncation: 4,
            dt: default_dt(m.omega_a),
            t_total: 40.0 / m.kappa,
            drives: vec![DriveTone { omega: m.omega_a, amplitude: u, phase: 0.0 }],
            initial: Complex64::ZERO,
            window: 10.0 / m.kappa,
            escape_radius: 1e4,
        };
        let traj = integrate(&config, &osc, m.kappa).unwrap();
        let a = extract_tone(&traj, m.omega_a, 10.0 / m.kappa);
        let expected = u / (0.5 * m.kappa);
        assert!((a.norm() / expected - 1.0).abs() < 0.01, "{} vs {expected}", a.norm());
    }

    #[test]
    fn tone_extraction_identities() {
        // synthetic series: pure tone recovered to 1e-6, two tones likewise
        let dt = 1e-11;
        let n = 1 << 16;
        let (w1, w2) = (TWO_PI * 6.4e9, TWO_PI * 6.9e9);
        let (a1, a2) = (
            Complex64::new(1.3, -0.7),
            Complex64::new(-0.2, 0.9),
        );
        let samples: Vec<Complex64> = (0..n)
            .map(|j| {
                let t = j as f64 * dt;
                a1 * Complex64::new(0.0, -w1 * t).exp() + a2 * Complex64::new(0.0, -w2 * t).exp()
            })
            .collect();
        let traj = Trajectory { sample_dt: dt, t_start: 0.0, samples };
        let window = n as f64 * dt;
        let e1 = extract_tone(&traj, w1, window);
        let e2 = extract_tone(&traj, w2, window);
        assert!((e1 - a1).norm() / a1.norm() < 1e-6, "{e1} vs {a1}");
        assert!((e2 - a2).norm() / a2.norm() < 1e-6, "{e2} vs {a2}");
    }

    #[test]
    fn energy_conserved_without_damping() {
        let (m, d) = setup();
        let osc = NonlinearOscillator::from_mode(&m, &d, 4).unwrap();
        let config = OracleConfig {
            truncation: 4,
            dt: default_dt(m.omega_a) / 2.0,
            t_total: 40.0 * TWO_PI / m.omega_a,
            drives: vec![],
            initial: Complex64::new(2.0, 1.0),
            window: 40.0 * TWO_PI / m.omega_a,
            escape_radius: 1e4,
        };
        let traj = integrate(&config, &osc, 0.0).unwrap();
        let h0 = osc.hamiltonian(traj.samples[0]);
        let drift = traj
            .samples
            .iter()
            .map(|&a| (osc.hamiltonian(a) / h0 - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-6, "energy drift {drift}");
    }

    #[test]
    fn escape_radius_trips_overflow() {
        let (m, d) = setup();
        let osc = NonlinearOscillator::from_mode(&m, &d, 4).unwrap();
        let config = OracleConfig {
            truncation: 4,
            dt: default_dt(m.omega_a),
            t_total: 25.0 / m.kappa,
            drives: vec![],
            initial: Complex64::new(5.0, 0.0),
            window: 1.0 / m.kappa,
            escape_radius: 1.0,
        };
        assert!(matches!(
            integrate(&config, &osc, m.kappa),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let (m, _) = setup();
        let base = OracleConfig {
            truncation: 4,
            dt: 1e-12,
            t_total: 25.0 / m.kappa,
            drives: vec![],
            initial: Complex64::ZERO,
            window: 1e-8,
            escape_radius: 1.0,
        };
        assert!(base.validate(m.kappa).is_ok());
        let mut short = base.clone();
        short.t_total = 1.0 / m.kappa;
        assert!(short.validate(m.kappa).is_err());
        let mut bad_order = base.clone();
        bad_order.truncation = 7;
        assert!(bad_order.validate(m.kappa).is_err());
        let mut beats = base;
        beats.drives = vec![
            DriveTone { omega: TWO_PI * 7.0e9, amplitude: 1.0, phase: 0.0 },
            DriveTone { omega: TWO_PI * 7.0e9 + TWO_PI * 1e3, amplitude: 1.0, phase: 0.0 },
        ];
        assert!(beats.validate(m.kappa).is_err(), "50 beats of 1 kHz not covered");
    }
}
