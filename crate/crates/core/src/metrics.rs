//! Measurable amplifier figures: signal-induced Stark shift, saturation
//! curves and their shark-fin multivaluedness, P1dB, IIP3 and pump power
//! efficiency.
//!
//! Powers are watts internally; dBm renderings use the 1 mW reference.

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::mode::ModeParams;
use crate::pump::{effective_params, np_for_gain, small_signal_gain, EffectiveModel};

/// Default IMD tone layout, stored as metadata with every IMD result:
/// median offset from w_p/2 and tone separation, rad/s.
pub const IMD_MEDIAN_OFFSET: f64 = crate::constants::TWO_PI * 500e3;
pub const IMD_TONE_SEPARATION: f64 = crate::constants::TWO_PI * 100e3;

/// Intermodulation figure at one operating gain. The tone offsets ride
/// along as metadata for traceability; the intercept itself does not
/// depend on them.
#[derive(Debug, Clone, Copy)]
pub struct ImdResult {
    /// Operating power gain (linear).
    pub gain: f64,
    /// Input-referred third-order intercept point, W.
    pub iip3: f64,
    /// Median offset of the two signals from w_p/2, rad/s.
    pub delta1: f64,
    /// Tone separation, rad/s.
    pub delta2: f64,
}

impl ImdResult {
    pub fn iip3_dbm(&self) -> f64 {
        crate::constants::watts_to_dbm(self.iip3)
    }
}

/// IIP3 at the given gain packaged with the default tone layout.
pub fn imd_result(g: f64, model: &EffectiveModel) -> Result<ImdResult> {
    Ok(ImdResult {
        gain: g,
        iip3: iip3(g, model)?,
        delta1: IMD_MEDIAN_OFFSET,
        delta2: IMD_TONE_SEPARATION,
    })
}

/// An operating point: pump set so the small-signal gain equals `g0`.
#[derive(Debug, Clone, Copy)]
pub struct OperatingPoint {
    pub model: EffectiveModel,
    /// Small-signal power gain at this point (linear).
    pub g0: f64,
}

/// Pumps the device to `target_g0` at the given detuning.
pub fn operating_point(target_g0: f64, delta: f64, mode: &ModeParams) -> Result<OperatingPoint> {
    let n_p = np_for_gain(target_g0, delta, mode)?;
    let model = effective_params(delta, n_p, mode);
    let g0 = small_signal_gain(&model)?;
    Ok(OperatingPoint { model, g0 })
}

/// Lowest-order Stark line for a strong off-resonant drive:
/// shift = 24 g4* nbar. Warns when the drive sits within three linewidths
/// of the mode, where the line model does not apply.
pub fn stark_shift_curve(
    omega_d: f64,
    nbar_grid: &[f64],
    mode: &ModeParams,
) -> Vec<(f64, f64)> {
    if (omega_d - mode.omega_a).abs() < 3.0 * mode.kappa {
        log::warn!(
            "stark drive at {:.3} GHz is within 3 kappa of the mode",
            omega_d / crate::constants::TWO_PI / 1e9
        );
    }
    nbar_grid
        .iter()
        .map(|&n| (n, 24.0 * mode.g4_star * n))
        .collect()
}

/// Steady-state intraresonator photons for `p_in` watts incident at
/// `omega_d` through the single strongly coupled port.
pub fn drive_photon_number(p_in: f64, omega_d: f64, mode: &ModeParams) -> f64 {
    let det = omega_d - mode.omega_a;
    p_in * mode.kappa / (HBAR * omega_d * (det * det + mode.kappa * mode.kappa / 4.0))
}

/// Input powers at which the gain equals `g`, from the dressed closed-form
/// inversion of the equation of state parameterized by (G0, delta_b, K):
///
/// P = (hbar wa k^2 / 3 K G) * { db/k -+ sqrt(y^2 - 1/4 + y/sqrt(G-1)) },
/// y = 2g/k reconstructed from G0 via y^2 + y/sqrt(G0-1) = db^2/k^2 + 1/4.
///
/// This is the general two-branch form without the large-gain shortcuts
/// (sqrt(G) for sqrt(G-1)) of the simplified variant below; the shortcuts
/// cost ~0.3 dB at 20 dB operating points. Both branches are evaluated;
/// only real positive powers are returned, ordered ascending. NoSolution
/// when both are complex or non-positive; Unbounded when K = 0 or the
/// value overflows.
pub fn input_power_for_gain(g: f64, op: &OperatingPoint) -> Result<Vec<f64>> {
    let m = &op.model;
    if !(g > 1.0) || !(op.g0 > 1.0) {
        return Err(Error::NoSolution);
    }
    if m.kerr == 0.0 {
        return Err(Error::Unbounded);
    }
    let dk = m.delta_b / m.kappa;
    let s0 = 1.0 / (op.g0 - 1.0).sqrt();
    let y = 0.5 * (-s0 + (s0 * s0 + 4.0 * (dk * dk + 0.25)).sqrt());
    let x = y * y - 0.25 + y / (g - 1.0).sqrt();
    if x < 0.0 {
        return Err(Error::NoSolution);
    }
    let prefactor = HBAR * m.omega_a * m.kappa * m.kappa / (3.0 * m.kerr * g);
    let mut out: Vec<f64> = [1.0, -1.0]
        .iter()
        .map(|s| prefactor * (dk - s * x.sqrt()))
        .filter(|p| *p > 0.0)
        .collect();
    if out.iter().any(|p| !p.is_finite()) {
        return Err(Error::Unbounded);
    }
    out.sort_by(f64::total_cmp);
    if out.is_empty() {
        return Err(Error::NoSolution);
    }
    Ok(out)
}

/// The simplified printed form with bare detuning, K = 12 g4* and the
/// large-gain shortcuts:
///
/// P = (hbar wa k^2 / 36 g4* G) * { d/k +- sqrt(d^2/k^2
///       + (sqrt(G0)-sqrt(G))/sqrt(G0 G) * sqrt(d^2/k^2 + 1/4)) }.
///
/// Limited validity (small |K|, moderate detuning); exposed separately for
/// comparison overlays.
pub fn input_power_for_gain_undressed(
    g: f64,
    g0: f64,
    delta: f64,
    mode: &ModeParams,
) -> Result<Vec<f64>> {
    if !(g > 1.0) || !(g0 > 1.0) {
        return Err(Error::NoSolution);
    }
    let kerr = 12.0 * mode.g4_star;
    if kerr == 0.0 {
        return Err(Error::Unbounded);
    }
    let kappa = mode.kappa;
    let eps = (g0.sqrt() - g.sqrt()) / (g0 * g).sqrt();
    let dk = delta / kappa;
    let inner = dk * dk + eps * (dk * dk + 0.25).sqrt();
    if inner < 0.0 {
        return Err(Error::NoSolution);
    }
    let prefactor = HBAR * mode.omega_a * kappa * kappa / (3.0 * kerr * g);
    let mut out: Vec<f64> = [-1.0, 1.0]
        .iter()
        .map(|s| prefactor * (dk + s * inner.sqrt()))
        .filter(|p| *p > 0.0)
        .collect();
    if out.iter().any(|p| !p.is_finite()) {
        return Err(Error::Unbounded);
    }
    out.sort_by(f64::total_cmp);
    if out.is_empty() {
        return Err(Error::NoSolution);
    }
    Ok(out)
}

/// Closed-form 1 dB input compression power: the power at which the gain
/// falls to G0 * 10^(-0.1).
pub fn p1db(op: &OperatingPoint) -> Result<f64> {
    let target = op.g0 * 10f64.powf(-0.1);
    let candidates = input_power_for_gain(target, op)?;
    candidates.first().copied().ok_or(Error::NoSolution)
}

/// One saturation-curve sample: every self-consistent gain at this power.
#[derive(Debug, Clone)]
pub struct SaturationPoint {
    /// Input power, W.
    pub p_in: f64,
    /// Coexisting gains, descending; 1 to 3 entries.
    pub gains: Vec<f64>,
}

/// Multivalued gain vs input power at one operating point.
#[derive(Debug, Clone)]
pub struct SaturationCurve {
    pub flux: f64,
    /// Pump half-detuning, rad/s.
    pub delta: f64,
    /// Small-signal gain (linear).
    pub g0: f64,
    pub points: Vec<SaturationPoint>,
    /// True when any sampled power carries more than one branch.
    pub shark_fin: bool,
    /// Power where the low branch folds into the middle branch, W.
    pub low_branch_end: Option<f64>,
}

/// P(G) on one branch of the equation of state: the gain equation fixes
/// the signal-Stark-shifted detuning delta_eff(G) up to sign, and
/// `delta_eff = delta_b - 3 K G P / (hbar wa k)` converts it to power.
/// `sign` picks the delta_eff sheet. Returns None where the sheet is not
/// real or the power is not positive.
fn p_of_g(g: f64, sign: f64, m: &EffectiveModel) -> Option<f64> {
    let x = 4.0 * m.g * m.g - m.kappa * m.kappa / 4.0
        + 2.0 * m.kappa * m.g / (g - 1.0).sqrt();
    if x < 0.0 || !x.is_finite() {
        return None;
    }
    let de = sign * x.sqrt();
    let p = (m.delta_b - de) * HBAR * m.omega_a * m.kappa / (3.0 * m.kerr * g);
    (p > 0.0 && p.is_finite()).then_some(p)
}

/// Self-consistent saturation curve over a power grid.
///
/// Branches are found by scanning the gain, computing P(G) on both
/// delta_eff sheets, and inverting the multivalued map per requested
/// power; each crossing is refined by bisection in G.
pub fn saturation_curve(op: &OperatingPoint, p_in_grid: &[f64]) -> SaturationCurve {
    let m = &op.model;
    let four_g2 = 4.0 * m.g * m.g;
    let quarter = m.kappa * m.kappa / 4.0;
    // Highest gain on the sheets: the delta_eff = 0 peak when subcritical,
    // otherwise a generous cap (the pole sheet extends to all gains).
    let g_cap = if four_g2 < quarter {
        1.0 + (2.0 * m.kappa * m.g / (quarter - four_g2)).powi(2)
    } else {
        (op.g0 * 1e4).max(1e8)
    };
    let n = 6000usize;
    let lo = (1.0 + 1e-9f64).ln();
    let hi = g_cap.ln();
    let grid: Vec<f64> = (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect();

    let mut points = Vec::with_capacity(p_in_grid.len());
    let mut shark_fin = false;
    for &p_in in p_in_grid {
        let mut gains = Vec::new();
        for sign in [1.0f64, -1.0] {
            for w in grid.windows(2) {
                let (g1, g2) = (w[0], w[1]);
                let (p1, p2) = (p_of_g(g1, sign, m), p_of_g(g2, sign, m));
                if let (Some(p1), Some(p2)) = (p1, p2) {
                    if (p1 - p_in) * (p2 - p_in) <= 0.0 && p1 != p2 {
                        let mut a = g1;
                        let mut b = g2;
                        for _ in 0..80 {
                            let mid = 0.5 * (a + b);
                            let pm = p_of_g(mid, sign, m).unwrap_or(f64::NAN);
                            if !pm.is_finite() {
                                break;
                            }
                            if (p_of_g(a, sign, m).unwrap() - p_in) * (pm - p_in) <= 0.0 {
                                b = mid;
                            } else {
                                a = mid;
                            }
                        }
                        gains.push(0.5 * (a + b));
                    }
                }
            }
        }
        gains.sort_by(|a, b| b.total_cmp(a));
        gains.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-6);
        if gains.is_empty() {
            // below the smallest sampled branch power the response is the
            // small-signal gain
            gains.push(op.g0);
        }
        if gains.len() > 1 {
            shark_fin = true;
        }
        points.push(SaturationPoint { p_in, gains });
    }

    // Fold of the branch connected to G0 at vanishing power.
    let low_sign = if m.delta_b >= 0.0 { 1.0 } else { -1.0 };
    let low_branch_end = if shark_fin {
        grid.iter()
            .filter_map(|&g| p_of_g(g, low_sign, m))
            .fold(None::<f64>, |acc, p| Some(acc.map_or(p, |a| a.max(p))))
    } else {
        None
    };

    SaturationCurve {
        flux: m.flux,
        delta: m.delta,
        g0: op.g0,
        points,
        shark_fin,
        low_branch_end,
    }
}

/// Numeric P1dB: the grid-free crossing of the equation of state with
/// G0 * 10^(-0.1), independent of the closed form in [`p1db`].
pub fn p1db_numeric(op: &OperatingPoint) -> Result<f64> {
    let m = &op.model;
    let target = op.g0 * 10f64.powf(-0.1);
    // the -1 dB contour lives on the descending sheet: scan both anyway
    let mut best: Option<f64> = None;
    for sign in [1.0f64, -1.0] {
        if let Some(p) = p_of_g(target, sign, m) {
            best = Some(best.map_or(p, |b: f64| b.min(p)));
        }
    }
    best.ok_or(Error::NoSolution)
}

/// Input-referred third-order intercept point, W:
/// IIP3 = hbar wa k^2 / (|K| (sqrt(G)+1)^3).
pub fn iip3(g: f64, model: &EffectiveModel) -> Result<f64> {
    if model.kerr == 0.0 {
        return Err(Error::Unbounded);
    }
    Ok(HBAR * model.omega_a * model.kappa * model.kappa
        / (model.kerr.abs() * (g.sqrt() + 1.0).powi(3)))
}

/// Inverse of [`iip3`]: the |K| a measured intercept point implies.
pub fn kerr_from_iip3(iip3_watts: f64, g: f64, model: &EffectiveModel) -> f64 {
    HBAR * model.omega_a * model.kappa * model.kappa
        / (iip3_watts * (g.sqrt() + 1.0).powi(3))
}

/// Pump power delivered to the device for a weakly coupled pump port with
/// coupling rate `kappa_pump`: P_p = hbar w_p n_p [(w_p-w_a)^2 + (k/2)^2]
/// / kappa_pump. A modeling choice for the efficiency figure, not a
/// measured quantity.
pub fn pump_power_model(model: &EffectiveModel, kappa_pump: f64) -> f64 {
    let wp = model.omega_p();
    let det = wp - model.omega_a;
    HBAR * wp * model.n_p * (det * det + model.kappa * model.kappa / 4.0) / kappa_pump
}

/// Pump power efficiency eta_p = G * P1dB / P_p.
pub fn power_efficiency(g: f64, p1db_watts: f64, p_p: f64) -> Result<f64> {
    if !(g > 0.0 && p1db_watts > 0.0 && p_p > 0.0) {
        return Err(Error::InvalidConfig(
            "power_efficiency needs positive G, P1dB, P_p".into(),
        ));
    }
    Ok(g * p1db_watts / p_p)
}

/// Efficiency with the pump power either supplied or modeled from
/// `kappa_pump`; MissingPumpCoupling when neither is available.
pub fn power_efficiency_at(
    op: &OperatingPoint,
    p1db_watts: f64,
    p_p: Option<f64>,
    kappa_pump: Option<f64>,
) -> Result<f64> {
    let p_p = match (p_p, kappa_pump) {
        (Some(p), _) => p,
        (None, Some(kp)) => pump_power_model(&op.model, kp),
        (None, None) => return Err(Error::MissingPumpCoupling),
    };
    power_efficiency(op.g0, p1db_watts, p_p)
}
