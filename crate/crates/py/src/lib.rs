//! Python bindings: the device description, the solved mode and pumped
//! effective model, and the headline amplifier figures. Frequencies cross
//! the boundary in GHz/MHz, powers in dBm.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use spa_core::constants::{dbm_to_watts, gain_to_db, watts_to_dbm, TWO_PI};
use spa_core::metrics;
use spa_core::mode::{self, CircuitSpec, KappaSpec};
use spa_core::pump;
use spa_core::snail::{self, SnailSpec};

fn err(e: spa_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Circuit description: microstrip plus SNAIL array.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Device {
    inner: CircuitSpec,
}

#[pymethods]
impl Device {
    #[new]
    #[pyo3(signature = (zc_ohm=45.8, omega0_ghz=16.0, lj_ph=38.0, alpha=0.065, m=20, kappa_mhz=200.0))]
    fn new(
        zc_ohm: f64,
        omega0_ghz: f64,
        lj_ph: f64,
        alpha: f64,
        m: u32,
        kappa_mhz: f64,
    ) -> PyResult<Self> {
        let snail = SnailSpec::new(lj_ph * 1e-12, alpha, m).map_err(err)?;
        let inner = CircuitSpec::new(
            zc_ohm,
            TWO_PI * omega0_ghz * 1e9,
            KappaSpec::Constant(TWO_PI * kappa_mhz * 1e6),
            snail,
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    /// The fitted device.
    #[staticmethod]
    fn default() -> Self {
        Self { inner: CircuitSpec::default_device() }
    }

    fn __repr__(&self) -> String {
        format!(
            "Device(zc_ohm={}, omega0_ghz={}, lj_ph={}, alpha={}, m={})",
            self.inner.z_c,
            self.inner.omega0 / TWO_PI / 1e9,
            self.inner.snail.l_j * 1e12,
            self.inner.snail.alpha,
            self.inner.snail.m
        )
    }
}

/// Solved per-flux mode parameters (frequencies in GHz/MHz).
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct ModeParams {
    #[pyo3(get)]
    flux: f64,
    #[pyo3(get)]
    omega_a_ghz: f64,
    #[pyo3(get)]
    kappa_mhz: f64,
    #[pyo3(get)]
    g3_mhz: f64,
    #[pyo3(get)]
    g4_star_mhz: f64,
    #[pyo3(get)]
    g4_mhz: f64,
    #[pyo3(get)]
    kerr_mhz: f64,
    #[pyo3(get)]
    z1_ohm: f64,
    #[pyo3(get)]
    phi_min: f64,
    #[pyo3(get)]
    c2: f64,
    #[pyo3(get)]
    c3: f64,
    #[pyo3(get)]
    c4: f64,
}

#[pymethods]
impl ModeParams {
    fn __repr__(&self) -> String {
        format!(
            "ModeParams(flux={:.4}, omega_a={:.4} GHz, g3={:.4} MHz, g4*={:.6} MHz)",
            self.flux, self.omega_a_ghz, self.g3_mhz, self.g4_star_mhz
        )
    }
}

/// Pumped-frame parameters at one operating point.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct EffectiveModel {
    inner: pump::EffectiveModel,
}

#[pymethods]
impl EffectiveModel {
    #[getter]
    fn flux(&self) -> f64 {
        self.inner.flux
    }
    #[getter]
    fn n_p(&self) -> f64 {
        self.inner.n_p
    }
    #[getter]
    fn delta_mhz(&self) -> f64 {
        self.inner.delta / TWO_PI / 1e6
    }
    #[getter]
    fn delta_b_mhz(&self) -> f64 {
        self.inner.delta_b / TWO_PI / 1e6
    }
    #[getter]
    fn g_mhz(&self) -> f64 {
        self.inner.g / TWO_PI / 1e6
    }
    #[getter]
    fn kerr_khz(&self) -> f64 {
        self.inner.kerr / TWO_PI / 1e3
    }
    fn __repr__(&self) -> String {
        format!(
            "EffectiveModel(flux={:.4}, delta={:.2} MHz, n_p={:.1}, delta_b={:.2} MHz, g={:.4} MHz, K={:.4} kHz)",
            self.flux(),
            self.delta_mhz(),
            self.n_p(),
            self.delta_b_mhz(),
            self.g_mhz(),
            self.kerr_khz()
        )
    }
}

fn solve(device: &Device, flux: f64) -> PyResult<mode::ModeParams> {
    mode::solve_mode(flux, &device.inner).map_err(err)
}

/// Fundamental mode and Hamiltonian coefficients at a flux point.
#[pyfunction]
fn mode_params(device: &Device, flux: f64) -> PyResult<ModeParams> {
    let m = solve(device, flux)?;
    Ok(ModeParams {
        flux,
        omega_a_ghz: m.omega_a / TWO_PI / 1e9,
        kappa_mhz: m.kappa / TWO_PI / 1e6,
        g3_mhz: m.g3 / TWO_PI / 1e6,
        g4_star_mhz: m.g4_star / TWO_PI / 1e6,
        g4_mhz: m.g4 / TWO_PI / 1e6,
        kerr_mhz: 12.0 * m.g4_star / TWO_PI / 1e6,
        z1_ohm: m.z1,
        phi_min: m.coeffs.phi_min,
        c2: m.coeffs.c2,
        c3: m.coeffs.c3,
        c4: m.coeffs.c4,
    })
}

/// Dimensionless Taylor coefficients (c2..c6) of the tracked well.
#[pyfunction]
fn taylor_coeffs(device: &Device, flux: f64) -> PyResult<(f64, f64, f64, f64, f64, f64)> {
    let c = snail::taylor_coeffs_tracked(TWO_PI * flux, None, true, &device.inner.snail)
        .map_err(err)?;
    Ok((c.phi_min, c.c2, c.c3, c.c4, c.c5.unwrap(), c.c6.unwrap()))
}

/// Pump-dressed frame parameters for a given pump photon number.
#[pyfunction]
fn effective_params(device: &Device, flux: f64, delta_mhz: f64, n_p: f64) -> PyResult<EffectiveModel> {
    let m = solve(device, flux)?;
    Ok(EffectiveModel {
        inner: pump::effective_params(TWO_PI * delta_mhz * 1e6, n_p, &m),
    })
}

/// Small-signal power gain in dB.
#[pyfunction]
fn small_signal_gain_db(model: &EffectiveModel) -> PyResult<f64> {
    pump::small_signal_gain(&model.inner).map(gain_to_db).map_err(err)
}

/// Gain in dB with signal/idler populations (photons).
#[pyfunction]
fn gain_db(model: &EffectiveModel, n_s: f64, n_i: f64) -> f64 {
    gain_to_db(pump::gain(&model.inner, n_s, n_i))
}

/// Parametric instability threshold in pump photons.
#[pyfunction]
fn threshold_np(device: &Device, flux: f64, delta_mhz: f64) -> PyResult<f64> {
    let m = solve(device, flux)?;
    pump::threshold_np(TWO_PI * delta_mhz * 1e6, &m).map_err(err)
}

/// Smallest pump photon number reaching the target small-signal gain.
#[pyfunction]
fn np_for_gain(device: &Device, flux: f64, delta_mhz: f64, gain_db: f64) -> PyResult<f64> {
    let m = solve(device, flux)?;
    pump::np_for_gain(
        spa_core::constants::db_to_gain(gain_db),
        TWO_PI * delta_mhz * 1e6,
        &m,
    )
    .map_err(err)
}

/// Stability region label: "I", "II" or "III".
#[pyfunction]
fn classify_stability(device: &Device, flux: f64, delta_mhz: f64, n_p: f64) -> PyResult<String> {
    let m = solve(device, flux)?;
    Ok(pump::classify_stability(TWO_PI * delta_mhz * 1e6, n_p, &m).to_string())
}

/// Period-doubled intensities |alpha_h|^2 with their branch signs.
#[pyfunction]
fn period_doubling_amplitudes(model: &EffectiveModel) -> PyResult<Vec<(f64, String)>> {
    let roots = pump::period_doubling_amplitudes(&model.inner).map_err(err)?;
    Ok(roots
        .into_iter()
        .map(|r| {
            let sign = match r.branch {
                pump::BranchSign::Plus => "+",
                pump::BranchSign::Minus => "-",
            };
            (r.amp_sq, sign.to_string())
        })
        .collect())
}

/// Closed-form 1 dB input compression power, dBm, at the operating point
/// pumped to `gain_db`.
#[pyfunction]
fn p1db_dbm(device: &Device, flux: f64, delta_mhz: f64, gain_db: f64) -> PyResult<f64> {
    let m = solve(device, flux)?;
    let op = metrics::operating_point(
        spa_core::constants::db_to_gain(gain_db),
        TWO_PI * delta_mhz * 1e6,
        &m,
    )
    .map_err(err)?;
    metrics::p1db(&op).map(watts_to_dbm).map_err(err)
}

/// Input-referred third-order intercept point, dBm, at operating gain
/// `gain_db` (0 dB means pump off).
#[pyfunction]
fn iip3_dbm(device: &Device, flux: f64, gain_db: f64) -> PyResult<f64> {
    let m = solve(device, flux)?;
    let model = pump::effective_params(0.0, 0.0, &m);
    metrics::iip3(spa_core::constants::db_to_gain(gain_db), &model)
        .map(watts_to_dbm)
        .map_err(err)
}

/// Multivalued saturation curve: [(pin_dbm, [gains_db...])].
#[pyfunction]
fn saturation_curve(
    device: &Device,
    flux: f64,
    delta_mhz: f64,
    gain_db: f64,
    pin_dbm: Vec<f64>,
) -> PyResult<Vec<(f64, Vec<f64>)>> {
    let m = solve(device, flux)?;
    let op = metrics::operating_point(
        spa_core::constants::db_to_gain(gain_db),
        TWO_PI * delta_mhz * 1e6,
        &m,
    )
    .map_err(err)?;
    let grid: Vec<f64> = pin_dbm.iter().map(|&d| dbm_to_watts(d)).collect();
    let curve = metrics::saturation_curve(&op, &grid);
    Ok(curve
        .points
        .iter()
        .map(|p| {
            (
                watts_to_dbm(p.p_in),
                p.gains.iter().map(|&g| gain_to_db(g)).collect(),
            )
        })
        .collect())
}

/// Lowest-order drive-induced Stark line: [(nbar, shift_mhz)].
#[pyfunction]
fn stark_shift_line(device: &Device, flux: f64, nbars: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    let m = solve(device, flux)?;
    let omega_d = m.omega_a + 7.0 * m.kappa;
    Ok(metrics::stark_shift_curve(omega_d, &nbars, &m)
        .into_iter()
        .map(|(n, s)| (n, s / TWO_PI / 1e6))
        .collect())
}

/// Steady intraresonator photons for an incident power at a detuned drive.
#[pyfunction]
fn drive_photon_number(
    device: &Device,
    flux: f64,
    p_in_dbm: f64,
    drive_offset_mhz: f64,
) -> PyResult<f64> {
    let m = solve(device, flux)?;
    Ok(metrics::drive_photon_number(
        dbm_to_watts(p_in_dbm),
        m.omega_a + TWO_PI * drive_offset_mhz * 1e6,
        &m,
    ))
}

#[pymodule]
fn spa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Device>()?;
    m.add_class::<ModeParams>()?;
    m.add_class::<EffectiveModel>()?;
    m.add_function(wrap_pyfunction!(mode_params, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(effective_params, m)?)?;
    m.add_function(wrap_pyfunction!(small_signal_gain_db, m)?)?;
    m.add_function(wrap_pyfunction!(gain_db, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_np, m)?)?;
    m.add_function(wrap_pyfunction!(np_for_gain, m)?)?;
    m.add_function(wrap_pyfunction!(classify_stability, m)?)?;
    m.add_function(wrap_pyfunction!(period_doubling_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(p1db_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(iip3_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_curve, m)?)?;
    m.add_function(wrap_pyfunction!(stark_shift_line, m)?)?;
    m.add_function(wrap_pyfunction!(drive_photon_number, m)?)?;
    Ok(())
}
