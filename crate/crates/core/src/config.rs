//! TOML run configuration.
//!
//! Dimensioned inputs are either bare numbers in internal units (omega_r = 1)
//! or strings with a unit suffix:
//!
//! * frequencies: `"1.5 MHz"`, `"3.86 kHz"`, `"-1 kappa"` (multiples of the cavity linewidth);
//! * times: `"3.77e6 /kappa"`, `"2 ms"`, `"10 us"`, `"1 s"`.
//!
//! Laboratory frequencies are angular frequencies `2 pi f` and are converted
//! with the recoil frequency of `[system]` (`recoil_frequency`, or
//! `wavelength` plus `mass_u`; 85Rb at 3.86 kHz by default).
//!
//! ```toml
//! [system]
//! n_atoms = 100
//! kappa = "1.5 MHz"
//! delta_c = "-1 kappa"
//!
//! [protocol]
//! kind = "sudden"
//! alpha_final = [2.0, 2.0]
//! t_final = "3.77e6 /kappa"
//!
//! [integrator]
//! dt = 1e-3
//!
//! [ensemble]
//! model = "adiabatic"
//! trajectories = 500
//! seed = 1
//!
//! [output]
//! dir = "out"
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::dynamics::{adiabatic, IntegratorConfig, Scheme};
use crate::ensemble::{AverageWindow, Model, OutputGrid, RunSpec};
use crate::error::{Error, Result};
use crate::observables::{DEFAULT_BIN_WIDTH, DEFAULT_NEMATIC_THRESHOLD};
use crate::params::SystemParams;
use crate::protocol::{Protocol, ProtocolKind, DEFAULT_EPSILON};
use crate::units::{LabUnits, DEFAULT_KAPPA};

/// A bare number in internal units or a string with a unit suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Value(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Value(v)
    }
}

impl From<&str> for Quantity {
    fn from(v: &str) -> Self {
        Quantity::Text(v.to_string())
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn split_unit(s: &str) -> Result<(f64, String)> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|(i, c)| {
            // the number ends at the first character that cannot continue it
            !(c.is_ascii_digit() || *c == '.' || *c == '+' || *c == '-' || *c == 'e' || *c == 'E')
                || ((*c == 'e' || *c == 'E') && !s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let value: f64 = s[..end].trim().parse().map_err(|_| config_error(format!("cannot parse a number in {s:?}")))?;
    Ok((value, s[end..].trim().to_string()))
}

impl Quantity {
    /// Frequency in units of omega_r. `kappa` resolves the `kappa` suffix.
    pub fn frequency(&self, lab: &LabUnits, kappa: Option<f64>) -> Result<f64> {
        let v = match self {
            Quantity::Value(v) => *v,
            Quantity::Text(s) => {
                let (x, unit) = split_unit(s)?;
                match unit.as_str() {
                    "" => x,
                    "Hz" => lab.frequency_from_hz(x),
                    "kHz" => lab.frequency_from_hz(x * 1e3),
                    "MHz" => lab.frequency_from_hz(x * 1e6),
                    "GHz" => lab.frequency_from_hz(x * 1e9),
                    "kappa" => x * kappa.ok_or_else(|| config_error("kappa cannot be given relative to itself"))?,
                    "omega_r" => x,
                    u => return Err(config_error(format!("unknown frequency unit {u:?} in {s:?}"))),
                }
            }
        };
        if !v.is_finite() {
            return Err(config_error("frequency must be finite"));
        }
        Ok(v)
    }

    /// Time in units of 1/omega_r.
    pub fn time(&self, lab: &LabUnits, kappa: f64) -> Result<f64> {
        let v = match self {
            Quantity::Value(v) => *v,
            Quantity::Text(s) => {
                let (x, unit) = split_unit(s)?;
                match unit.replace(' ', "").as_str() {
                    "" | "/omega_r" => x,
                    "/kappa" => x / kappa,
                    "s" => lab.time_from_seconds(x),
                    "ms" => lab.time_from_seconds(x * 1e-3),
                    "us" => lab.time_from_seconds(x * 1e-6),
                    "ns" => lab.time_from_seconds(x * 1e-9),
                    u => return Err(config_error(format!("unknown time unit {u:?} in {s:?}"))),
                }
            }
        };
        if !v.is_finite() {
            return Err(config_error("time must be finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_atoms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<Quantity>,
    /// `omega_r / 2 pi`, e.g. `"3.86 kHz"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recoil_frequency: Option<String>,
    /// Transition wavelength, e.g. `"780 nm"`; requires `mass_u`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSection {
    Sudden {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_initial: Option<[f64; 2]>,
        alpha_final: [f64; 2],
        t_final: Quantity,
    },
    LinearRamp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        alpha_final: [f64; 2],
        tau: Quantity,
        t_final: Quantity,
    },
    TwoStep {
        alpha_intermediate: [f64; 2],
        alpha_final: [f64; 2],
        tau: Quantity,
        t_final: Quantity,
    },
    TemperatureQuench {
        /// Initial temperature in units of the minimal temperature hbar kappa / 2.
        t_initial: f64,
        alpha_final: [f64; 2],
        t_final: Quantity,
    },
}

/// `"auto"` or a time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "auto")]
    pub dt: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrap: Option<bool>,
}

fn auto() -> Quantity {
    Quantity::Text("auto".into())
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { dt: auto(), scheme: None, wrap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_model")]
    pub model: Model,
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_model() -> Model {
    Model::Adiabatic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_decade: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_initial: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_from: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nematic_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory the configuration was read from; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn parse_length_nm(s: &str) -> Result<f64> {
    let (x, unit) = split_unit(s)?;
    match unit.as_str() {
        "nm" => Ok(x),
        "um" => Ok(x * 1e3),
        "m" => Ok(x * 1e9),
        u => Err(config_error(format!("unknown length unit {u:?} in {s:?}"))),
    }
}

fn parse_hz(s: &str) -> Result<f64> {
    let (x, unit) = split_unit(s)?;
    match unit.as_str() {
        "Hz" => Ok(x),
        "kHz" => Ok(x * 1e3),
        "MHz" => Ok(x * 1e6),
        u => Err(config_error(format!("unknown frequency unit {u:?} in {s:?}"))),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Reads a configuration file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = Some(path.parent().map(Path::to_path_buf).unwrap_or_default());
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(e.to_string()))
    }

    pub fn lab_units(&self) -> Result<LabUnits> {
        let s = &self.system;
        match (&s.recoil_frequency, &s.wavelength, s.mass_u) {
            (Some(_), Some(_), _) => Err(config_error("give either recoil_frequency or wavelength, not both")),
            (Some(f), None, None) => {
                let hz = parse_hz(f)?;
                if !(hz > 0.0) {
                    return Err(config_error("recoil frequency must be > 0"));
                }
                Ok(LabUnits { recoil_frequency_hz: hz })
            }
            (None, Some(w), Some(m)) => {
                let nm = parse_length_nm(w)?;
                if !(nm > 0.0 && m > 0.0) {
                    return Err(config_error("wavelength and mass must be > 0"));
                }
                Ok(LabUnits::from_wavelength(nm, m))
            }
            (None, Some(_), None) => Err(config_error("wavelength requires mass_u")),
            (_, None, Some(_)) => Err(config_error("mass_u requires wavelength")),
            (None, None, None) => Ok(LabUnits::default()),
        }
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let lab = self.lab_units()?;
        let kappa = match &self.system.kappa {
            Some(q) => q.frequency(&lab, None)?,
            None => DEFAULT_KAPPA,
        };
        let delta_c = match &self.system.delta_c {
            Some(q) => q.frequency(&lab, Some(kappa))?,
            None => -kappa,
        };
        let final_alpha = match &self.protocol {
            ProtocolSection::Sudden { alpha_final, .. }
            | ProtocolSection::LinearRamp { alpha_final, .. }
            | ProtocolSection::TwoStep { alpha_final, .. }
            | ProtocolSection::TemperatureQuench { alpha_final, .. } => *alpha_final,
        };
        SystemParams::new(self.system.n_atoms, kappa, delta_c, final_alpha).map_err(|e| config_error(e.to_string()))
    }

    pub fn protocol(&self) -> Result<Protocol> {
        let lab = self.lab_units()?;
        let kappa = self.system_params()?.kappa;
        let time = |q: &Quantity| q.time(&lab, kappa);
        let (kind, t_final) = match &self.protocol {
            ProtocolSection::Sudden { alpha_initial, alpha_final, t_final } => (
                ProtocolKind::Sudden {
                    alpha_initial: alpha_initial.unwrap_or([DEFAULT_EPSILON, DEFAULT_EPSILON]),
                    alpha_final: *alpha_final,
                },
                time(t_final)?,
            ),
            ProtocolSection::LinearRamp { epsilon, alpha_final, tau, t_final } => (
                ProtocolKind::LinearRamp {
                    epsilon: epsilon.unwrap_or(DEFAULT_EPSILON),
                    alpha_final: *alpha_final,
                    tau: time(tau)?,
                },
                time(t_final)?,
            ),
            ProtocolSection::TwoStep { alpha_intermediate, alpha_final, tau, t_final } => (
                ProtocolKind::TwoStep { alpha_intermediate: *alpha_intermediate, alpha_final: *alpha_final, tau: time(tau)? },
                time(t_final)?,
            ),
            ProtocolSection::TemperatureQuench { t_initial, alpha_final, t_final } => {
                (ProtocolKind::TemperatureQuench { t_initial: *t_initial, alpha_final: *alpha_final }, time(t_final)?)
            }
        };
        Protocol::new(kind, t_final).map_err(|e| config_error(e.to_string()))
    }

    /// Integrator settings; `dt = "auto"` runs the step-halving calibration.
    pub fn integrator(&self, params: &SystemParams, protocol: &Protocol) -> Result<IntegratorConfig> {
        let mut cfg = match &self.integrator.dt {
            Quantity::Text(s) if s.trim() == "auto" => adiabatic::calibrate_dt(params, protocol.max_alpha())?,
            q => IntegratorConfig::with_dt(q.time(&self.lab_units()?, params.kappa)?),
        };
        if let Some(s) = self.integrator.scheme {
            cfg.scheme = s;
        }
        if let Some(w) = self.integrator.wrap {
            cfg.wrap = w;
        }
        Ok(cfg)
    }

    pub fn output_grid(&self, kappa: f64) -> Result<OutputGrid> {
        let lab = self.lab_units()?;
        let o = &self.output;
        let mut grid = OutputGrid::default();
        if let Some(t) = &o.t_min {
            grid.t_min_kappa = t.time(&lab, kappa)? * kappa;
        }
        if let Some(p) = o.points_per_decade {
            grid.points_per_decade = p;
        }
        if let Some(i) = o.include_initial {
            grid.include_initial = i;
        }
        let default_window = grid.window.unwrap_or(AverageWindow { start_kappa: 1e6, points: 113 });
        let start_kappa = match &o.average_from {
            Some(t) => t.time(&lab, kappa)? * kappa,
            None => default_window.start_kappa,
        };
        let points = o.average_points.unwrap_or(default_window.points);
        grid.window = if points == 0 { None } else { Some(AverageWindow { start_kappa, points }) };
        Ok(grid)
    }

    /// Fully resolved run description in internal units.
    pub fn to_run_spec(&self) -> Result<RunSpec> {
        let params = self.system_params()?;
        let protocol = self.protocol()?;
        let integrator = self.integrator(&params, &protocol)?;
        let model = self.ensemble.model;
        let spec = RunSpec {
            model,
            params,
            protocol,
            integrator,
            trajectories: self.ensemble.trajectories,
            base_seed: self.ensemble.seed,
            grid: self.output_grid(params.kappa)?,
            nematic_threshold: self.output.nematic_threshold.unwrap_or(DEFAULT_NEMATIC_THRESHOLD),
            bin_width: self.output.bin_width.unwrap_or(DEFAULT_BIN_WIDTH),
        };
        spec.validate().map_err(|e| match e {
            Error::Unstable(m) => Error::Config(format!("integrator: {m}")),
            e => config_error(e.to_string()),
        })?;
        Ok(spec)
    }

    /// Output directory resolved against the configuration's directory.
    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.dir.as_ref().map(|d| self.resolve(d))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EXAMPLE: &str = r#"
[system]
n_atoms = 100
kappa = "1.5 MHz"
delta_c = "-1 kappa"

[protocol]
kind = "linear-ramp"
alpha_final = [2.0, 2.0]
tau = "550 /kappa"
t_final = "3.77e6 /kappa"

[integrator]
dt = 1e-3

[ensemble]
trajectories = 50
seed = 7

[output]
dir = "out"
points_per_decade = 20
"#;

    #[test]
    fn parses_lab_units() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let spec = cfg.to_run_spec().unwrap();
        assert_relative_eq!(spec.params.kappa, 1.5e6 / 3.86e3, max_relative = 1e-12);
        assert_relative_eq!(spec.params.delta_c, -spec.params.kappa, max_relative = 1e-12);
        assert_relative_eq!(spec.protocol.t_final * spec.params.kappa, 3.77e6, max_relative = 1e-12);
        match spec.protocol.kind {
            ProtocolKind::LinearRamp { tau, epsilon, .. } => {
                assert_relative_eq!(tau * spec.params.kappa, 550.0, max_relative = 1e-12);
                assert_eq!(epsilon, DEFAULT_EPSILON);
            }
            k => panic!("{k:?}"),
        }
        assert_eq!(spec.base_seed, 7);
        assert_eq!(spec.grid.points_per_decade, 20);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        let once = cfg.to_toml_string().unwrap();
        let again = RunConfig::from_toml_str(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml_string().unwrap(), once);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = EXAMPLE.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = EXAMPLE.replace("tau = ", "tua = ");
        assert!(RunConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn quantity_units() {
        let lab = LabUnits::default();
        assert_relative_eq!(Quantity::from("3.86 kHz").frequency(&lab, None).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(Quantity::from("-2 kappa").frequency(&lab, Some(10.0)).unwrap(), -20.0);
        assert!(Quantity::from("1 kappa").frequency(&lab, None).is_err());
        assert_relative_eq!(Quantity::from("1e3 /kappa").time(&lab, 500.0).unwrap(), 2.0, max_relative = 1e-12);
        let one_ms = Quantity::from("1 ms").time(&lab, 1.0).unwrap();
        assert_relative_eq!(one_ms, 1e-3 * std::f64::consts::TAU * 3.86e3, max_relative = 1e-12);
        assert!(Quantity::from("3 parsec").time(&lab, 1.0).is_err());
        assert_eq!(Quantity::from(2.5).time(&lab, 1.0).unwrap(), 2.5);
        assert_eq!(Quantity::from("1e-3").time(&lab, 1.0).unwrap(), 1e-3);
    }

    #[test]
    fn wavelength_sets_recoil() {
        let text = EXAMPLE.replace("delta_c = \"-1 kappa\"", "wavelength = \"780 nm\"\nmass_u = 84.91");
        let lab = RunConfig::from_toml_str(&text).unwrap().lab_units().unwrap();
        assert!((lab.recoil_frequency_hz - 3.86e3).abs() < 20.0, "{}", lab.recoil_frequency_hz);
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let mut cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        cfg.base_dir = Some(PathBuf::from("/data/runs"));
        assert_eq!(cfg.output_dir().unwrap(), PathBuf::from("/data/runs/out"));
    }

    #[test]
    fn unstable_step_is_a_config_error() {
        let text = EXAMPLE.replace("dt = 1e-3", "dt = 0.01");
        assert!(matches!(RunConfig::from_toml_str(&text).unwrap().to_run_spec(), Err(Error::Config(_))));
    }
}
