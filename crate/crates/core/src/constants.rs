//! Physical constants and unit helpers.
//!
//! Constants are pinned to the 2019 SI exact values so that absolute
//! power figures (dBm) are reproducible bit-for-bit across builds.

/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced flux quantum phi0 = hbar/2e, Wb.
pub const PHI0: f64 = HBAR / (2.0 * E_CHARGE);

/// Reduced resistance quantum R_Q = hbar/(2e)^2, ohms (~1.027 kOhm).
pub const R_Q: f64 = HBAR / (4.0 * E_CHARGE * E_CHARGE);

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Power in watts to dBm (1 mW reference).
pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p / 1e-3).log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Power gain (linear) to dB.
pub fn gain_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

/// dB to linear power gain.
pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
