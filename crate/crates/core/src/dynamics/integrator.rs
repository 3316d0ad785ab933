use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Starting point of the automatic time-step selection (1/omega_r).
pub const DEFAULT_DT: f64 = 1e-2;
/// Upper bound on `dt * kappa`.
pub const MAX_DT_KAPPA: f64 = 0.5;
/// Upper bound on `dt * omega_0`.
pub const MAX_DT_OMEGA0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Time step in 1/omega_r.
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_wrap")]
    pub wrap: bool,
}

fn default_wrap() -> bool {
    true
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, scheme: Scheme::EulerMaruyama, wrap: true }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    /// Checks `dt > 0`, `dt kappa <= 0.5` and `dt omega_0 <= 0.1` for the
    /// deepest lattice reachable with pump strengths `alpha_max`.
    pub fn check_stability(&self, params: &SystemParams, alpha_max: [f64; 2]) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt * params.kappa > MAX_DT_KAPPA {
            return Err(Error::Unstable(format!(
                "dt * kappa = {:.4} exceeds {MAX_DT_KAPPA}",
                self.dt * params.kappa
            )));
        }
        let w0 = max_trap_frequency(params, alpha_max);
        if self.dt * w0 > MAX_DT_OMEGA0 {
            return Err(Error::Unstable(format!(
                "dt * omega_0 = {:.4} exceeds {MAX_DT_OMEGA0} (omega_0 = {w0:.2})",
                self.dt * w0
            )));
        }
        Ok(())
    }
}

/// Harmonic frequency of a perfectly ordered lattice (Theta_1 = Theta_2 = 1).
pub fn max_trap_frequency(params: &SystemParams, alpha_max: [f64; 2]) -> f64 {
    let d = params.delta_c;
    ((d * d + params.kappa * params.kappa) / -d * (alpha_max[0] + 4.0 * alpha_max[1])).sqrt()
}

/// Outcome of the setup-time step-halving comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepHalvingReport {
    pub dt: f64,
    /// RMS momentum difference between the `dt` and `dt/2` paths relative to the RMS momentum.
    pub momentum_error: f64,
    /// RMS (wrapped) phase difference in radians.
    pub position_error: f64,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_at_default_parameters() {
        let p = SystemParams::with_defaults(100, [2.0, 2.0]);
        assert!(IntegratorConfig::with_dt(1e-3).check_stability(&p, [2.0, 2.0]).is_ok());
        assert!(IntegratorConfig::with_dt(1e-2).check_stability(&p, [2.0, 2.0]).is_err());
        assert!(IntegratorConfig::with_dt(0.0).check_stability(&p, [2.0, 2.0]).is_err());
        // the omega_0 bound alone
        let p = SystemParams::new(100, 1.0, -1.0, [2.0, 2.0]).unwrap();
        let w0 = max_trap_frequency(&p, [2.0, 2.0]);
        assert!((w0 - 20f64.sqrt()).abs() < 1e-12);
        assert!(IntegratorConfig::with_dt(0.2 / w0).check_stability(&p, [2.0, 2.0]).is_err());
    }
}
