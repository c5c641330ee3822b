//! Sweep orchestration and data emission: flux sweeps, 2-D stability and
//! saturation maps, the dressed Kerr-free-point search, and figure-ready
//! CSV/JSON files.
//!
//! Everything here is deterministic: fixed grid iteration orders, no RNG,
//! and no wall-clock content in the CSV payloads (the manifest carries the
//! only timestamp). Re-running a command with the same config produces
//! byte-identical CSV files.

use crate::constants::{dbm_to_watts, gain_to_db, watts_to_dbm, TWO_PI};
use crate::error::{Error, Result};
use crate::metrics::{iip3, operating_point, p1db, p1db_numeric, saturation_curve};
use crate::mode::{solve_mode, solve_mode_tracked, CircuitSpec, KappaSpec};
use crate::oracle::{gain_oracle, period_doubling_oracle, stark_shift_oracle};
use crate::pump::{
    classify_stability, effective_params, np_for_gain, period_doubling_amplitudes,
    stability_boundaries, threshold_np,
};
use crate::snail::SnailSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

fn default_flux_grid() -> Vec<f64> {
    (0..=80).map(|i| 0.05 + 0.005 * i as f64).collect()
}

fn default_delta_grid() -> Vec<f64> {
    (0..=160).map(|i| -400.0 + 5.0 * i as f64).collect()
}

fn default_pin_grid() -> Vec<f64> {
    (0..=160).map(|i| -160.0 + 0.5 * i as f64).collect()
}

fn default_gain_db() -> f64 {
    20.0
}

fn default_truncation() -> u8 {
    4
}

fn default_out_dir() -> String {
    "out".into()
}

/// Run configuration. Keys carry explicit units; CLI flags override file
/// values. The default is the fitted device.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    #[serde(rename = "Zc_ohm", default = "DeviceConfig::default_zc")]
    pub zc_ohm: f64,
    #[serde(rename = "omega0_GHz", default = "DeviceConfig::default_omega0")]
    pub omega0_ghz: f64,
    #[serde(rename = "LJ_pH", default = "DeviceConfig::default_lj")]
    pub lj_ph: f64,
    #[serde(default = "DeviceConfig::default_alpha")]
    pub alpha: f64,
    #[serde(rename = "M", default = "DeviceConfig::default_m")]
    pub m: u32,
    /// Constant damping; ignored when `kappa_table` is present.
    #[serde(rename = "kappa_MHz", default = "DeviceConfig::default_kappa")]
    pub kappa_mhz: f64,
    /// Optional (flux, kappa_MHz) knots.
    #[serde(rename = "kappa_table_MHz", default)]
    pub kappa_table_mhz: Option<Vec<(f64, f64)>>,
    #[serde(rename = "target_gain_dB", default = "default_gain_db")]
    pub target_gain_db: f64,
    #[serde(default = "default_flux_grid")]
    pub flux_grid: Vec<f64>,
    #[serde(rename = "delta_MHz_grid", default = "default_delta_grid")]
    pub delta_mhz_grid: Vec<f64>,
    #[serde(rename = "pin_dBm_grid", default = "default_pin_grid")]
    pub pin_dbm_grid: Vec<f64>,
    /// Optional pump-photon grid for the stability map; derived from the
    /// thresholds when absent.
    #[serde(default)]
    pub np_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub oracle_enabled: bool,
    #[serde(default = "default_truncation")]
    pub oracle_truncation: u8,
    /// Pump-port coupling for the efficiency column, if known.
    #[serde(rename = "kappa_pump_MHz", default)]
    pub kappa_pump_mhz: Option<f64>,
    /// Optional detuning recalibration added to every delta, MHz.
    #[serde(rename = "frequency_offset_MHz", default)]
    pub frequency_offset_mhz: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl DeviceConfig {
    fn default_zc() -> f64 {
        45.8
    }
    fn default_omega0() -> f64 {
        16.0
    }
    fn default_lj() -> f64 {
        38.0
    }
    fn default_alpha() -> f64 {
        0.065
    }
    fn default_m() -> u32 {
        20
    }
    fn default_kappa() -> f64 {
        200.0
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let cfg: DeviceConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [
            ("flux_grid", &self.flux_grid),
            ("delta_MHz_grid", &self.delta_mhz_grid),
            ("pin_dBm_grid", &self.pin_dbm_grid),
        ] {
            if grid.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} is empty")));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(format!("{name} not strictly increasing")));
            }
        }
        if let Some(np) = &self.np_grid {
            if np.is_empty() || np.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig("np_grid not strictly increasing".into()));
            }
        }
        if !(self.target_gain_db >= 0.0) {
            return Err(Error::InvalidConfig("target_gain_dB must be >= 0".into()));
        }
        self.circuit()?;
        Ok(())
    }

    /// Resolved circuit description in SI units.
    pub fn circuit(&self) -> Result<CircuitSpec> {
        let snail = SnailSpec::new(self.lj_ph * 1e-12, self.alpha, self.m)?;
        let kappa = match &self.kappa_table_mhz {
            Some(t) => KappaSpec::Table(
                t.iter().map(|&(f, k)| (f, TWO_PI * k * 1e6)).collect(),
            ),
            None => KappaSpec::Constant(TWO_PI * self.kappa_mhz * 1e6),
        };
        CircuitSpec::new(self.zc_ohm, TWO_PI * self.omega0_ghz * 1e9, kappa, snail)
    }

    /// Target gain, linear.
    pub fn target_gain(&self) -> f64 {
        crate::constants::db_to_gain(self.target_gain_db)
    }

    /// Detuning in rad/s including the calibration offset.
    pub fn delta_rad(&self, delta_mhz: f64) -> f64 {
        TWO_PI * (delta_mhz + self.frequency_offset_mhz) * 1e6
    }

    /// Hash of the canonical JSON serialization; stamped into every row.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

impl Default for DeviceConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Where a sweep landed on disk.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Rows that carry a non-empty error column.
    pub flagged_rows: usize,
    /// Rows emitted in total.
    pub total_rows: usize,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else {
        String::new()
    }
}

fn axis(x: f64) -> String {
    format!("{x}")
}

struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
    rows: usize,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_writer(fs::File::create(&path)?);
        writer.write_record(header)?;
        Ok(Self { path, writer, rows: 0 })
    }

    fn write(&mut self, record: &[String]) -> Result<()> {
        self.writer.write_record(record)?;
        self.rows += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<(PathBuf, usize)> {
        self.writer.flush()?;
        Ok((self.path, self.rows))
    }
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &DeviceConfig,
    files: &[(PathBuf, usize)],
    extra: serde_json::Value,
) -> Result<PathBuf> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let manifest = serde_json::json!({
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg,
        "files": files
            .iter()
            .map(|(p, rows)| {
                serde_json::json!({
                    "name": p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                    "rows": rows,
                })
            })
            .collect::<Vec<_>>(),
        "extra": extra,
        "generated_unix_ms": stamp,
    });
    let path = dir.join(format!("{command}_manifest.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest json"))?;
    Ok(path)
}

fn ensure_dir(cfg: &DeviceConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Taylor and mode coefficients, one row per flux (or a single `--flux`).
pub fn run_coeffs(cfg: &DeviceConfig, flux: Option<f64>) -> Result<SweepOutcome> {
    let circuit = cfg.circuit()?;
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let mut file = CsvFile::create(
        &dir,
        "coeffs.csv",
        &[
            "config_hash", "flux", "phi_min_rad", "c2", "c3", "c4", "c5", "c6",
            "omega_a_GHz", "Ls_pH", "C1_fF", "L1_nH", "Z1_ohm", "phi_zpf_Wb",
            "g3_MHz", "g4star_MHz", "g4_MHz", "kappa_MHz", "error",
        ],
    )?;
    let fluxes: Vec<f64> = match flux {
        Some(f) => vec![f],
        None => cfg.flux_grid.clone(),
    };
    let mut flagged = 0;
    let mut prev = None;
    for f in fluxes {
        match solve_mode_tracked(f, prev, &circuit) {
            Ok(m) => {
                prev = Some(m.coeffs.phi_min);
                file.write(&[
                    hash.clone(),
                    axis(f),
                    num(m.coeffs.phi_min),
                    num(m.coeffs.c2),
                    num(m.coeffs.c3),
                    num(m.coeffs.c4),
                    m.coeffs.c5.map(num).unwrap_or_default(),
                    m.coeffs.c6.map(num).unwrap_or_default(),
                    num(m.omega_a / TWO_PI / 1e9),
                    num(m.l_s * 1e12),
                    num(m.c1 * 1e15),
                    num(m.l1 * 1e9),
                    num(m.z1),
                    num(m.phi_zpf),
                    num(m.g3 / TWO_PI / 1e6),
                    num(m.g4_star / TWO_PI / 1e6),
                    num(m.g4 / TWO_PI / 1e6),
                    num(m.kappa / TWO_PI / 1e6),
                    String::new(),
                ])?;
            }
            Err(e) => {
                flagged += 1;
                let mut row = vec![hash.clone(), axis(f)];
                row.extend(std::iter::repeat_n(String::new(), 16));
                row.push(e.to_string());
                file.write(&row)?;
            }
        }
    }
    let (path, rows) = file.finish()?;
    let manifest = write_manifest(&dir, "coeffs", cfg, &[(path.clone(), rows)], serde_json::json!({}))?;
    Ok(SweepOutcome { files: vec![path], manifest, flagged_rows: flagged, total_rows: rows })
}

/// Hamiltonian parameters versus flux plus P1dB/IIP3 at zero detuning and
/// the configured target gain.
pub fn run_flux_sweep(cfg: &DeviceConfig) -> Result<SweepOutcome> {
    let circuit = cfg.circuit()?;
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let target = cfg.target_gain();
    let mut file = CsvFile::create(
        &dir,
        "flux_sweep.csv",
        &[
            "config_hash", "flux", "omega_a_GHz", "kappa_MHz", "g3_MHz", "g4star_MHz",
            "g4_MHz", "K_MHz", "Z1_ohm", "np_target_gain", "p1db_dBm",
            "iip3_pump_off_dBm", "iip3_target_gain_dBm", "error",
        ],
    )?;
    let mut flagged = 0;
    let mut prev = None;
    let mut crossing: Option<f64> = None;
    let mut last: Option<(f64, f64)> = None;
    for &f in &cfg.flux_grid {
        let m = match solve_mode_tracked(f, prev, &circuit) {
            Ok(m) => m,
            Err(e) => {
                flagged += 1;
                let mut row = vec![hash.clone(), axis(f)];
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push(e.to_string());
                file.write(&row)?;
                continue;
            }
        };
        prev = Some(m.coeffs.phi_min);
        if let Some((f0, g0)) = last {
            if g0 * m.g4_star < 0.0 {
                // linear interpolation of the sign change
                crossing = Some(f0 + (f - f0) * g0 / (g0 - m.g4_star));
            }
        }
        last = Some((f, m.g4_star));

        let unpumped = effective_params(0.0, 0.0, &m);
        let iip3_off = iip3(1.0, &unpumped).map(watts_to_dbm).ok();
        let mut errors: Vec<String> = Vec::new();
        let delta0 = cfg.delta_rad(0.0);
        let (np_col, p1db_col, iip3_on) = match operating_point(target, delta0, &m) {
            Ok(op) => {
                let p = match p1db(&op) {
                    Ok(p) => Some(watts_to_dbm(p)),
                    Err(e) => {
                        errors.push(format!("p1db: {e}"));
                        None
                    }
                };
                let i3 = iip3(target, &op.model).map(watts_to_dbm).ok();
                (Some(op.model.n_p), p, i3)
            }
            Err(e) => {
                errors.push(format!("operating point at delta=0: {e}"));
                (None, None, None)
            }
        };
        if !errors.is_empty() {
            flagged += 1;
        }
        file.write(&[
            hash.clone(),
            axis(f),
            num(m.omega_a / TWO_PI / 1e9),
            num(m.kappa / TWO_PI / 1e6),
            num(m.g3 / TWO_PI / 1e6),
            num(m.g4_star / TWO_PI / 1e6),
            num(m.g4 / TWO_PI / 1e6),
            num(12.0 * m.g4_star / TWO_PI / 1e6),
            num(m.z1),
            np_col.map(num).unwrap_or_default(),
            p1db_col.map(num).unwrap_or_default(),
            iip3_off.map(num).unwrap_or_default(),
            iip3_on.map(num).unwrap_or_default(),
            errors.join("; "),
        ])?;
    }
    let (path, rows) = file.finish()?;
    let extra = serde_json::json!({
        "g4_star_zero_crossing_flux": crossing,
        "target_gain_dB": cfg.target_gain_db,
    });
    let manifest = write_manifest(&dir, "flux_sweep", cfg, &[(path.clone(), rows)], extra)?;
    Ok(SweepOutcome { files: vec![path], manifest, flagged_rows: flagged, total_rows: rows })
}

/// Region label per (delta, n_p) cell plus boundary polylines and the
/// target-gain locus at one flux.
pub fn run_stability_map(cfg: &DeviceConfig, flux: f64) -> Result<SweepOutcome> {
    let circuit = cfg.circuit()?;
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let m = solve_mode(flux, &circuit)?;
    let deltas: Vec<f64> = cfg.delta_mhz_grid.iter().map(|&d| cfg.delta_rad(d)).collect();

    // pump-photon grid: configured, or log-spaced up to 3x the largest
    // finite threshold
    let np_grid: Vec<f64> = match &cfg.np_grid {
        Some(g) => g.clone(),
        None => {
            let nmax = deltas
                .iter()
                .filter_map(|&d| threshold_np(d, &m).ok())
                .fold(0.0f64, f64::max);
            let top = if nmax > 0.0 { 3.0 * nmax } else { 1e4 };
            (0..=120)
                .map(|i| 10f64.powf((top.log10()) * i as f64 / 120.0))
                .collect()
        }
    };

    let mut cells = CsvFile::create(
        &dir,
        "stability_cells.csv",
        &["config_hash", "flux", "delta_MHz", "np", "region"],
    )?;
    let labels: Vec<Vec<&'static str>> = cfg
        .delta_mhz_grid
        .par_iter()
        .map(|&dmhz| {
            let d = cfg.delta_rad(dmhz);
            np_grid
                .iter()
                .map(|&n| match classify_stability(d, n, &m) {
                    crate::pump::StabilityRegion::Monostable => "I",
                    crate::pump::StabilityRegion::Bistable => "II",
                    crate::pump::StabilityRegion::Tristable => "III",
                })
                .collect()
        })
        .collect();
    for (i, &dmhz) in cfg.delta_mhz_grid.iter().enumerate() {
        for (j, &n) in np_grid.iter().enumerate() {
            cells.write(&[
                hash.clone(),
                axis(flux),
                axis(dmhz),
                num(n),
                labels[i][j].to_string(),
            ])?;
        }
    }

    let bounds = stability_boundaries(&deltas, &m);
    let mut boundary_file = CsvFile::create(
        &dir,
        "stability_boundaries.csv",
        &["config_hash", "flux", "boundary", "delta_MHz", "np"],
    )?;
    for (name, line) in [
        ("I/II", &bounds.i_ii),
        ("I/III", &bounds.i_iii),
        ("II/III", &bounds.ii_iii),
    ] {
        for &(d, n) in line {
            boundary_file.write(&[
                hash.clone(),
                axis(flux),
                name.to_string(),
                num((d / TWO_PI / 1e6) - cfg.frequency_offset_mhz),
                num(n),
            ])?;
        }
    }

    let mut locus = CsvFile::create(
        &dir,
        "stability_gain_locus.csv",
        &["config_hash", "flux", "delta_MHz", "np_target_gain", "error"],
    )?;
    let target = cfg.target_gain();
    let locus_rows: Vec<(f64, std::result::Result<f64, Error>)> = cfg
        .delta_mhz_grid
        .par_iter()
        .map(|&dmhz| (dmhz, np_for_gain(target, cfg.delta_rad(dmhz), &m)))
        .collect();
    let mut flagged = 0;
    for (dmhz, res) in locus_rows {
        match res {
            Ok(n) => locus.write(&[hash.clone(), axis(flux), axis(dmhz), num(n), String::new()])?,
            Err(e) => {
                flagged += 1;
                locus.write(&[hash.clone(), axis(flux), axis(dmhz), String::new(), e.to_string()])?;
            }
        }
    }

    let (cells_path, cells_rows) = cells.finish()?;
    let (bpath, brows) = boundary_file.finish()?;
    let (lpath, lrows) = locus.finish()?;
    let total = cells_rows + brows + lrows;
    let files = vec![(cells_path, cells_rows), (bpath, brows), (lpath, lrows)];
    let manifest = write_manifest(
        &dir,
        "stability_map",
        cfg,
        &files,
        serde_json::json!({ "flux": flux, "target_gain_dB": cfg.target_gain_db }),
    )?;
    Ok(SweepOutcome {
        files: files.into_iter().map(|(p, _)| p).collect(),
        manifest,
        flagged_rows: flagged,
        total_rows: total,
    })
}

struct SaturationRow {
    delta_mhz: f64,
    result: std::result::Result<SaturationRowOk, Error>,
}

struct SaturationRowOk {
    n_p: f64,
    g0_db: f64,
    p1db_dbm: Option<f64>,
    p1db_numeric_dbm: Option<f64>,
    iip3_dbm: Option<f64>,
    shark_fin: bool,
    low_branch_end_dbm: Option<f64>,
    eta_p: Option<f64>,
    curve: Vec<(f64, Vec<f64>)>,
}

/// Saturation branches over the power grid for every reachable detuning at
/// one flux; unreachable detunings are flagged and bound the sweep window.
pub fn run_saturation_map(cfg: &DeviceConfig, flux: f64) -> Result<SweepOutcome> {
    let circuit = cfg.circuit()?;
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let m = solve_mode(flux, &circuit)?;
    let target = cfg.target_gain();
    let pin_watts: Vec<f64> = cfg.pin_dbm_grid.iter().map(|&d| dbm_to_watts(d)).collect();

    let rows: Vec<SaturationRow> = cfg
        .delta_mhz_grid
        .par_iter()
        .map(|&dmhz| {
            let delta = cfg.delta_rad(dmhz);
            let result = operating_point(target, delta, &m).map(|op| {
                let curve = saturation_curve(&op, &pin_watts);
                let closed = p1db(&op).ok();
                let numeric = p1db_numeric(&op).ok();
                let i3 = iip3(target, &op.model).ok();
                let eta = closed.and_then(|p| {
                    cfg.kappa_pump_mhz.and_then(|kp| {
                        crate::metrics::power_efficiency_at(
                            &op,
                            p,
                            None,
                            Some(TWO_PI * kp * 1e6),
                        )
                        .ok()
                    })
                });
                SaturationRowOk {
                    n_p: op.model.n_p,
                    g0_db: gain_to_db(op.g0),
                    p1db_dbm: closed.map(watts_to_dbm),
                    p1db_numeric_dbm: numeric.map(watts_to_dbm),
                    iip3_dbm: i3.map(watts_to_dbm),
                    shark_fin: curve.shark_fin,
                    low_branch_end_dbm: curve.low_branch_end.map(watts_to_dbm),
                    eta_p: eta,
                    curve: curve
                        .points
                        .iter()
                        .map(|p| (watts_to_dbm(p.p_in), p.gains.clone()))
                        .collect(),
                }
            });
            SaturationRow { delta_mhz: dmhz, result }
        })
        .collect();

    let mut summary = CsvFile::create(
        &dir,
        "saturation_summary.csv",
        &[
            "config_hash", "flux", "delta_MHz", "np", "G0_dB", "p1db_dBm",
            "p1db_numeric_dBm", "iip3_dBm", "shark_fin", "low_branch_end_dBm",
            "eta_p", "error",
        ],
    )?;
    let mut curves = CsvFile::create(
        &dir,
        "saturation_curves.csv",
        &[
            "config_hash", "flux", "delta_MHz", "pin_dBm", "branches",
            "g_branch1_dB", "g_branch2_dB", "g_branch3_dB",
        ],
    )?;
    let mut flagged = 0;
    for row in &rows {
        match &row.result {
            Ok(ok) => {
                summary.write(&[
                    hash.clone(),
                    axis(flux),
                    axis(row.delta_mhz),
                    num(ok.n_p),
                    num(ok.g0_db),
                    ok.p1db_dbm.map(num).unwrap_or_default(),
                    ok.p1db_numeric_dbm.map(num).unwrap_or_default(),
                    ok.iip3_dbm.map(num).unwrap_or_default(),
                    ok.shark_fin.to_string(),
                    ok.low_branch_end_dbm.map(num).unwrap_or_default(),
                    ok.eta_p.map(num).unwrap_or_default(),
                    String::new(),
                ])?;
                for (pin_dbm, gains) in &ok.curve {
                    let mut rec = vec![
                        hash.clone(),
                        axis(flux),
                        axis(row.delta_mhz),
                        num(*pin_dbm),
                        gains.len().to_string(),
                    ];
                    for i in 0..3 {
                        rec.push(gains.get(i).map(|g| num(gain_to_db(*g))).unwrap_or_default());
                    }
                    curves.write(&rec)?;
                }
            }
            Err(e) => {
                flagged += 1;
                let mut rec = vec![hash.clone(), axis(flux), axis(row.delta_mhz)];
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(e.to_string());
                summary.write(&rec)?;
            }
        }
    }
    let (spath, srows) = summary.finish()?;
    let (cpath, crows) = curves.finish()?;
    let files = vec![(spath, srows), (cpath, crows)];
    let manifest = write_manifest(
        &dir,
        "saturation_map",
        cfg,
        &files,
        serde_json::json!({ "flux": flux, "target_gain_dB": cfg.target_gain_db }),
    )?;
    Ok(SweepOutcome {
        files: files.into_iter().map(|(p, _)| p).collect(),
        manifest,
        flagged_rows: flagged,
        total_rows: srows + crows,
    })
}

/// Result of the empirical Kerr-free-point search.
#[derive(Debug, Clone)]
pub struct KerrFreePoint {
    pub flux: f64,
    pub delta_mhz: f64,
    /// W.
    pub p1db: f64,
    pub n_p: f64,
}

/// Coarse grid scan of P1dB(flux, delta) followed by three rounds of
/// alternating golden-section refinement, clamped to the grid bounds. The
/// full evaluation trace is persisted.
pub fn find_kerr_free_point(cfg: &DeviceConfig) -> Result<(KerrFreePoint, SweepOutcome)> {
    let circuit = cfg.circuit()?;
    let target = cfg.target_gain();
    let eval = |flux: f64, delta_mhz: f64| -> Option<(f64, f64)> {
        let m = solve_mode(flux, &circuit).ok()?;
        let op = operating_point(target, cfg.delta_rad(delta_mhz), &m).ok()?;
        let p = p1db(&op).ok()?;
        p.is_finite().then_some((p, op.model.n_p))
    };
    find_kerr_free_point_with(cfg, eval)
}

/// Search skeleton with an injectable evaluator (used directly by tests to
/// exercise degenerate landscapes).
pub fn find_kerr_free_point_with<F>(
    cfg: &DeviceConfig,
    eval: F,
) -> Result<(KerrFreePoint, SweepOutcome)>
where
    F: Fn(f64, f64) -> Option<(f64, f64)>,
{
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let mut trace = CsvFile::create(
        &dir,
        "kerr_free_trace.csv",
        &["config_hash", "stage", "flux", "delta_MHz", "p1db_dBm", "np"],
    )?;
    let mut log = |stage: &str, f: f64, d: f64, v: Option<(f64, f64)>| -> Result<()> {
        trace.write(&[
            hash.clone(),
            stage.to_string(),
            axis(f),
            axis(d),
            v.map(|(p, _)| num(watts_to_dbm(p))).unwrap_or_default(),
            v.map(|(_, n)| num(n)).unwrap_or_default(),
        ])
    };

    let mut best: Option<(f64, f64, f64, f64)> = None; // p1db, flux, delta, np
    for &f in &cfg.flux_grid {
        for &d in &cfg.delta_mhz_grid {
            let v = eval(f, d);
            log("coarse", f, d, v)?;
            if let Some((p, n)) = v {
                if best.map(|b| p > b.0).unwrap_or(true) {
                    best = Some((p, f, d, n));
                }
            }
        }
    }
    let (mut p_best, mut f_best, mut d_best, mut n_best) =
        best.ok_or(Error::SearchFailed)?;

    let (f_lo, f_hi) = (cfg.flux_grid[0], *cfg.flux_grid.last().unwrap());
    let (d_lo, d_hi) = (cfg.delta_mhz_grid[0], *cfg.delta_mhz_grid.last().unwrap());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f_step = (f_hi - f_lo) / (cfg.flux_grid.len() - 1).max(1) as f64;
    let d_step = (d_hi - d_lo) / (cfg.delta_mhz_grid.len() - 1).max(1) as f64;

    for round in 0..3 {
        // flux axis
        let (mut a, mut b) = (
            (f_best - f_step).max(f_lo),
            (f_best + f_step).min(f_hi),
        );
        for _ in 0..16 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            let v1 = eval(x1, d_best);
            let v2 = eval(x2, d_best);
            log(&format!("refine_flux_{round}"), x1, d_best, v1)?;
            log(&format!("refine_flux_{round}"), x2, d_best, v2)?;
            let p1 = v1.map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
            let p2 = v2.map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
            if p1 < p2 {
                a = x1;
                if p2 > p_best {
                    (p_best, f_best, n_best) = (p2, x2, v2.unwrap().1);
                }
            } else {
                b = x2;
                if p1 > p_best {
                    (p_best, f_best, n_best) = (p1, x1, v1.unwrap().1);
                }
            }
        }
        // delta axis
        let (mut a, mut b) = (
            (d_best - d_step).max(d_lo),
            (d_best + d_step).min(d_hi),
        );
        for _ in 0..16 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            let v1 = eval(f_best, x1);
            let v2 = eval(f_best, x2);
            log(&format!("refine_delta_{round}"), f_best, x1, v1)?;
            log(&format!("refine_delta_{round}"), f_best, x2, v2)?;
            let p1 = v1.map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
            let p2 = v2.map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
            if p1 < p2 {
                a = x1;
                if p2 > p_best {
                    (p_best, d_best, n_best) = (p2, x2, v2.unwrap().1);
                }
            } else {
                b = x2;
                if p1 > p_best {
                    (p_best, d_best, n_best) = (p1, x1, v1.unwrap().1);
                }
            }
        }
    }

    let (tpath, trows) = trace.finish()?;
    let point = KerrFreePoint {
        flux: f_best,
        delta_mhz: d_best,
        p1db: p_best,
        n_p: n_best,
    };
    let manifest = write_manifest(
        &dir,
        "kerr_free",
        cfg,
        &[(tpath.clone(), trows)],
        serde_json::json!({
            "flux": point.flux,
            "delta_MHz": point.delta_mhz,
            "p1db_dBm": watts_to_dbm(point.p1db),
            "np": point.n_p,
        }),
    )?;
    Ok((
        point,
        SweepOutcome { files: vec![tpath], manifest, flagged_rows: 0, total_rows: trows },
    ))
}

/// Closed form against the time-domain oracle at one operating point:
/// small-signal gain, period-doubled intensity (when the pump-only point
/// for 1.5x threshold is period-doubled) and the Stark line.
pub fn run_oracle(cfg: &DeviceConfig, flux: f64, delta_mhz: f64) -> Result<SweepOutcome> {
    let circuit = cfg.circuit()?;
    let dir = ensure_dir(cfg)?;
    let hash = cfg.hash();
    let m = solve_mode(flux, &circuit)?;
    let truncation = cfg.oracle_truncation;
    let mut file = CsvFile::create(
        &dir,
        "oracle_check.csv",
        &["config_hash", "flux", "delta_MHz", "quantity", "closed_form", "oracle", "rel_diff"],
    )?;
    let mut flagged = 0;

    let delta = cfg.delta_rad(delta_mhz);
    match operating_point(cfg.target_gain(), delta, &m) {
        Ok(op) => {
            let offset = m.kappa / 64.0;
            let oracle_g = gain_oracle(&m, &circuit, delta, op.model.n_p, offset, 1e-3 * m.kappa, truncation)?;
            let closed = crate::pump::small_signal_gain(&op.model)?;
            file.write(&[
                hash.clone(),
                axis(flux),
                axis(delta_mhz),
                "small_signal_gain".into(),
                num(closed),
                num(oracle_g),
                num((oracle_g / closed - 1.0).abs()),
            ])?;
        }
        Err(e) => {
            flagged += 1;
            file.write(&[
                hash.clone(),
                axis(flux),
                axis(delta_mhz),
                "small_signal_gain".into(),
                String::new(),
                String::new(),
                e.to_string(),
            ])?;
        }
    }

    if let Ok(n_th) = threshold_np(delta, &m) {
        let n_p = 1.5 * n_th;
        let model = effective_params(delta, n_p, &m);
        if let Ok(roots) = period_doubling_amplitudes(&model) {
            if let Some(r) = roots.last() {
                let oracle_h =
                    period_doubling_oracle(&m, &circuit, delta, n_p, truncation, Some(r.amp_sq))?;
                file.write(&[
                    hash.clone(),
                    axis(flux),
                    axis(delta_mhz),
                    "period_doubled_intensity".into(),
                    num(r.amp_sq),
                    num(oracle_h),
                    num((oracle_h / r.amp_sq - 1.0).abs()),
                ])?;
            }
        }
    }

    let omega_d = m.omega_a + 7.0 * m.kappa;
    for nbar in [20.0, 60.0, 120.0] {
        let (nbar_meas, shift) = stark_shift_oracle(&m, &circuit, omega_d, nbar, truncation)?;
        let line_at_meas = 24.0 * m.g4_star * nbar_meas;
        file.write(&[
            hash.clone(),
            axis(flux),
            axis(delta_mhz),
            format!("stark_shift_nbar_{nbar}"),
            num(line_at_meas),
            num(shift),
            num(if line_at_meas != 0.0 {
                (shift / line_at_meas - 1.0).abs()
            } else {
                f64::INFINITY
            }),
        ])?;
    }

    let (path, rows) = file.finish()?;
    let manifest = write_manifest(
        &dir,
        "oracle",
        cfg,
        &[(path.clone(), rows)],
        serde_json::json!({ "flux": flux, "delta_MHz": delta_mhz, "truncation": truncation }),
    )?;
    Ok(SweepOutcome { files: vec![path], manifest, flagged_rows: flagged, total_rows: rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_hash_stable() {
        let cfg = DeviceConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.hash(), cfg.clone().hash());
        let mut other = cfg.clone();
        other.target_gain_db = 21.0;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn config_rejects_bad_grids() {
        let mut cfg = DeviceConfig::default();
        cfg.flux_grid = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = DeviceConfig::default();
        cfg.delta_mhz_grid = vec![0.0, -5.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_parses_unit_suffixed_keys() {
        let cfg: DeviceConfig = serde_json::from_str(
            r#"{"Zc_ohm": 50.0, "omega0_GHz": 15.0, "LJ_pH": 40.0, "kappa_MHz": 180.0,
                "target_gain_dB": 18.0, "kappa_table_MHz": [[0.0, 150.0], [0.5, 240.0]]}"#,
        )
        .unwrap();
        assert_eq!(cfg.zc_ohm, 50.0);
        assert_eq!(cfg.target_gain_db, 18.0);
        let circuit = cfg.circuit().unwrap();
        assert!((circuit.kappa.at(0.25) - TWO_PI * 195e6).abs() < 1.0);
        assert!(serde_json::from_str::<DeviceConfig>(r#"{"bogus_key": 1}"#).is_err());
    }
}
