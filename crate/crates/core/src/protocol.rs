//! Time-dependent pump schedules and initial-state recipes.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::params::{minimal_temperature, thermal_momentum_variance, SystemParams};
use crate::state::EnsembleState;

/// Default "vanishingly small" initial pump strength.
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolKind {
    /// Pump switched at t = 0 from `alpha_initial` to `alpha_final`.
    Sudden {
        #[serde(default = "default_initial")]
        alpha_initial: [f64; 2],
        alpha_final: [f64; 2],
    },
    /// `alpha_n(t) = epsilon + alpha_nf t / tau`, capped at `alpha_nf`.
    LinearRamp {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        alpha_final: [f64; 2],
        tau: f64,
    },
    /// `alpha_intermediate` on `[0, tau)`, `alpha_final` afterwards.
    TwoStep {
        alpha_intermediate: [f64; 2],
        alpha_final: [f64; 2],
        tau: f64,
    },
    /// Sudden quench from zero pump, starting from a thermal momentum
    /// distribution at `t_initial` (in units of the minimal temperature T_0).
    TemperatureQuench { t_initial: f64, alpha_final: [f64; 2] },
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_initial() -> [f64; 2] {
    [DEFAULT_EPSILON, DEFAULT_EPSILON]
}

/// A pump schedule together with its duration. Times are in 1/omega_r; the
/// detuning is held constant and lives in [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub t_final: f64,
}

impl Protocol {
    pub fn new(kind: ProtocolKind, t_final: f64) -> Result<Self> {
        let p = Self { kind, t_final };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be >= 0, got {}", self.t_final));
        }
        let pairs: Vec<[f64; 2]> = match self.kind {
            ProtocolKind::Sudden { alpha_initial, alpha_final } => vec![alpha_initial, alpha_final],
            ProtocolKind::LinearRamp { epsilon, alpha_final, tau } => {
                if !(epsilon >= 0.0) {
                    return bad(format!("epsilon must be >= 0, got {epsilon}"));
                }
                if !(tau >= 0.0 && tau.is_finite()) {
                    return bad(format!("tau must be >= 0, got {tau}"));
                }
                vec![alpha_final]
            }
            ProtocolKind::TwoStep { alpha_intermediate, alpha_final, tau } => {
                if !(tau >= 0.0 && tau.is_finite()) {
                    return bad(format!("tau must be >= 0, got {tau}"));
                }
                vec![alpha_intermediate, alpha_final]
            }
            ProtocolKind::TemperatureQuench { t_initial, alpha_final } => {
                if !(t_initial > 0.0 && t_initial.is_finite()) {
                    return bad(format!("initial temperature must be > 0, got {t_initial}"));
                }
                vec![alpha_final]
            }
        };
        if pairs.iter().flatten().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return bad("pump parameters must be finite and >= 0".into());
        }
        Ok(())
    }

    /// Pump strengths `(alpha_1(t), alpha_2(t))`.
    pub fn alpha_at(&self, t: f64) -> [f64; 2] {
        match self.kind {
            ProtocolKind::Sudden { alpha_initial, alpha_final } => {
                if t < 0.0 {
                    alpha_initial
                } else {
                    alpha_final
                }
            }
            ProtocolKind::LinearRamp { epsilon, alpha_final, tau } => {
                if t >= tau {
                    return alpha_final;
                }
                let t = t.max(0.0);
                alpha_final.map(|af| (epsilon + af * t / tau).min(af))
            }
            ProtocolKind::TwoStep { alpha_intermediate, alpha_final, tau } => {
                if t < tau {
                    alpha_intermediate
                } else {
                    alpha_final
                }
            }
            ProtocolKind::TemperatureQuench { alpha_final, .. } => {
                if t < 0.0 {
                    [0.0, 0.0]
                } else {
                    alpha_final
                }
            }
        }
    }

    /// Pump strengths of the stationary state the ensemble is prepared in.
    pub fn initial_alpha(&self) -> [f64; 2] {
        match self.kind {
            ProtocolKind::Sudden { alpha_initial, .. } => alpha_initial,
            ProtocolKind::LinearRamp { epsilon, .. } => [epsilon, epsilon],
            ProtocolKind::TwoStep { .. } => default_initial(),
            ProtocolKind::TemperatureQuench { .. } => [0.0, 0.0],
        }
    }

    pub fn final_alpha(&self) -> [f64; 2] {
        match self.kind {
            ProtocolKind::Sudden { alpha_final, .. }
            | ProtocolKind::LinearRamp { alpha_final, .. }
            | ProtocolKind::TwoStep { alpha_final, .. }
            | ProtocolKind::TemperatureQuench { alpha_final, .. } => alpha_final,
        }
    }

    /// Largest pump strength per mode reached over the schedule.
    pub fn max_alpha(&self) -> [f64; 2] {
        let a = self.final_alpha();
        let b = match self.kind {
            ProtocolKind::TwoStep { alpha_intermediate, .. } => alpha_intermediate,
            _ => self.initial_alpha(),
        };
        [a[0].max(b[0]), a[1].max(b[1])]
    }

    pub fn params_at(&self, base: &SystemParams, t: f64) -> SystemParams {
        base.with_alpha(self.alpha_at(t))
    }

    /// Temperature of the initial momentum distribution in hbar omega_r.
    pub fn initial_temperature(&self, params: &SystemParams) -> f64 {
        match self.kind {
            ProtocolKind::TemperatureQuench { t_initial, .. } => {
                t_initial * minimal_temperature(params.kappa)
            }
            _ => params.temperature(),
        }
    }
}

/// Spatially homogeneous thermal state: uniform phases, Gaussian momenta with
/// variance `m k_B T_ini`.
pub fn sample_initial_state<R: Rng + ?Sized>(
    protocol: &Protocol,
    params: &SystemParams,
    rng: &mut R,
) -> EnsembleState {
    let variance = thermal_momentum_variance(protocol.initial_temperature(params));
    if variance <= 1.0 {
        warn!(
            "momentum width {:.3} hbar k is not large compared to the photon recoil; \
             the semi-classical description is questionable",
            variance.sqrt()
        );
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite variance");
    let n = params.n_atoms;
    let positions = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    let momenta = (0..n).map(|_| normal.sample(rng)).collect();
    EnsembleState { time: 0.0, positions, momenta }
}
