//! Run configuration: a TOML document plus command-line overrides.
//!
//! Quantities carry their unit in the key name. Relative paths resolve
//! against the directory of the configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Subcommand this file is meant for; checked against the invoked one.
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub device: Option<String>,
    /// Directory with `table1.tsv` and `table2.tsv` replacing the bundled tables.
    pub data_dir: Option<PathBuf>,
    pub constants: Constants,
    pub fit: FitConfig,
    pub spectrum: SpectrumConfig,
    pub fit_tp: FitTpConfig,
    pub simulate_rts: SimulateConfig,
    pub thermal_fit: ThermalConfig,
    pub antenna: AntennaConfig,
    pub jumps: JumpsConfig,
    pub coherence_fit: CoherenceConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub delta0_uev: f64,
    pub delta_uev: f64,
    pub gamma_conv_hz: f64,
    pub recomb_time_ns: f64,
    pub bandage_volume_um3: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            delta0_uev: qparity::units::DELTA0_DEFAULT_UEV,
            delta_uev: 217.0,
            gamma_conv_hz: qparity::antenna::DEFAULT_GAMMA_CONV,
            recomb_time_ns: 120.0,
            bandage_volume_um3: 4.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    pub step_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let d = qparity::FitOptions::default();
        Self {
            max_iterations: d.max_iterations,
            gradient_tol: d.gradient_tol,
            step_tol: d.step_tol,
        }
    }
}

impl FitConfig {
    pub fn options(&self) -> qparity::FitOptions {
        qparity::FitOptions {
            max_iterations: self.max_iterations,
            gradient_tol: self.gradient_tol,
            step_tol: self.step_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub ng_min: f64,
    pub ng_max: f64,
    pub points: usize,
    /// Highest level reached from the ground state; one column per level.
    pub max_level: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            ng_min: -1.0,
            ng_max: 1.0,
            points: 201,
            max_level: 1,
        }
    }
}

/// Telegraph-ensemble parameters shared by `simulate-rts` and the simulated
/// input of `fit-tp`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub gamma_p_hz: f64,
    pub n_traces: usize,
    pub duration_s: f64,
    pub dt_ms: f64,
    pub noise_sigma: f64,
    pub excitation_prob: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            gamma_p_hz: 0.37,
            n_traces: 200,
            duration_s: 18.0,
            dt_ms: 0.3,
            noise_sigma: 0.0,
            excitation_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitTpConfig {
    /// Measured traces; the ensemble is simulated when absent.
    pub traces_dir: Option<PathBuf>,
    pub simulate: SimulateConfig,
    pub concatenate: bool,
    /// `rectangular` or `hann`.
    pub window: String,
    pub band_min_hz: Option<f64>,
    pub band_max_hz: Option<f64>,
    pub max_lag_s: Option<f64>,
    /// Fixed classification threshold; automatic split when absent.
    pub threshold: Option<f64>,
    /// Relative disagreement between estimators that gets flagged.
    pub cross_check_tol: f64,
}

impl Default for FitTpConfig {
    fn default() -> Self {
        Self {
            traces_dir: None,
            simulate: SimulateConfig::default(),
            concatenate: false,
            window: "rectangular".into(),
            band_min_hz: None,
            band_max_hz: None,
            max_lag_s: None,
            threshold: None,
            cross_check_tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalConfig {
    /// Measured series; synthetic data for `chip` is generated when absent.
    pub series: Option<PathBuf>,
    pub chip: String,
    pub temperatures_mk: Vec<f64>,
    pub noise: f64,
    pub delta_init_uev: f64,
    pub fixed_delta_uev: Option<f64>,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            series: None,
            chip: "S4".into(),
            temperatures_mk: vec![20.0, 60.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0, 220.0, 240.0],
            noise: 0.02,
            delta_init_uev: 210.0,
            fixed_delta_uev: None,
        }
    }
}

/// Equivalent-circuit elements in fF, Ω and pH.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub c0_ff: f64,
    pub r1_ohm: f64,
    pub l1_ph: f64,
    pub c1_ff: f64,
    pub r2_ohm: f64,
    pub l2_ph: f64,
    pub c2_ff: f64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let c = qparity::EquivCircuit::reference();
        Self {
            c0_ff: c.c0_f * 1e15,
            r1_ohm: c.r1_ohm,
            l1_ph: c.l1_h * 1e12,
            c1_ff: c.c1_f * 1e15,
            r2_ohm: c.r2_ohm,
            l2_ph: c.l2_h * 1e12,
            c2_ff: c.c2_f * 1e15,
        }
    }
}

impl CircuitConfig {
    pub fn circuit(&self) -> qparity::EquivCircuit {
        qparity::EquivCircuit {
            c0_f: self.c0_ff * 1e-15,
            r1_ohm: self.r1_ohm,
            l1_h: self.l1_ph * 1e-12,
            c1_f: self.c1_ff * 1e-15,
            r2_ohm: self.r2_ohm,
            l2_h: self.l2_ph * 1e-12,
            c2_f: self.c2_ff * 1e-15,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaConfig {
    /// Tabulated `Z_rad`; the circuit is used when absent.
    pub impedance_table: Option<PathBuf>,
    pub circuit: CircuitConfig,
    pub rn_kohm: f64,
    pub cj_ff: f64,
    pub f_min_ghz: f64,
    pub f_max_ghz: f64,
    pub points: usize,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        let j = qparity::JunctionParams::reference();
        Self {
            impedance_table: None,
            circuit: CircuitConfig::default(),
            rn_kohm: j.rn_ohm * 1e-3,
            cj_ff: j.cj_f * 1e15,
            f_min_ghz: 10.0,
            f_max_ghz: 400.0,
            points: 391,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JumpsConfig {
    pub trajectories: Option<PathBuf>,
    pub threshold_e: f64,
}

impl Default for JumpsConfig {
    fn default() -> Self {
        Self {
            trajectories: None,
            threshold_e: qparity::traces::DEFAULT_JUMP_THRESHOLD_E,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceConfig {
    pub relaxation: Option<PathBuf>,
    pub echo: Option<PathBuf>,
    /// `T₁` for the echo fit when no relaxation curve is given.
    pub t1_us: Option<f64>,
    pub kappa_mhz: f64,
    pub chi_mhz: f64,
    pub fr_ghz: f64,
    pub temperatures_mk: Vec<f64>,
    /// Charge-dispersion slope; taken from the device at `ng` when absent.
    pub slope_mhz_per_ng: Option<f64>,
    pub ng: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self {
            relaxation: None,
            echo: None,
            t1_us: None,
            kappa_mhz: 0.8,
            chi_mhz: 0.4,
            fr_ghz: 5.556,
            temperatures_mk: (1..=15).map(|i| 10.0 * i as f64).collect(),
            slope_mhz_per_ng: None,
            ng: 0.25,
        }
    }
}

/// Parsed configuration together with the digest of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl LoadedConfig {
    pub fn from_str(text: &str, base: &Path, name: &str) -> Result<Self, CliError> {
        let mut config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("{name}: {}", e.to_string().trim_end())))?;
        config.resolve_paths(base);
        Ok(Self {
            config,
            sha256: sha256_hex(text.as_bytes()),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                config: RunConfig::default(),
                sha256: sha256_hex(b""),
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str(&text, base, &path.display().to_string())
    }
}

impl RunConfig {
    fn input_paths_mut(&mut self) -> Vec<&mut PathBuf> {
        [
            self.data_dir.as_mut(),
            self.fit_tp.traces_dir.as_mut(),
            self.thermal_fit.series.as_mut(),
            self.antenna.impedance_table.as_mut(),
            self.jumps.trajectories.as_mut(),
            self.coherence_fit.relaxation.as_mut(),
            self.coherence_fit.echo.as_mut(),
        ]
        .into_iter()
        .flatten()
        .collect()
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in self.input_paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = self.out.as_mut() {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
    }

    /// Every referenced input must exist before any command runs.
    pub fn validate_paths(&mut self) -> Result<(), CliError> {
        for p in self.input_paths_mut() {
            if !p.exists() {
                return Err(CliError::config(format!("input path does not exist: {}", p.display())));
            }
        }
        Ok(())
    }
}
