//! System parameters and the closed-form relations between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{DEFAULT_KAPPA, MASS};

/// Physical constants and pump strengths of the two-mode cavity, in internal units.
///
/// Both modes share `kappa` and `delta_c`, which makes their inverse
/// temperatures equal and guarantees a thermal stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_atoms: usize,
    pub kappa: f64,
    pub delta_c: f64,
    pub alpha: [f64; 2],
}

impl SystemParams {
    pub fn new(n_atoms: usize, kappa: f64, delta_c: f64, alpha: [f64; 2]) -> Result<Self> {
        let p = Self { n_atoms, kappa, delta_c, alpha };
        p.validate()?;
        Ok(p)
    }

    /// The default setup: kappa = 388.6 omega_r, delta_c = -kappa.
    pub fn with_defaults(n_atoms: usize, alpha: [f64; 2]) -> Self {
        Self { n_atoms, kappa: DEFAULT_KAPPA, delta_c: -DEFAULT_KAPPA, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidParameter("n_atoms must be positive".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.delta_c < 0.0 && self.delta_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta_c must be < 0 for a stationary state, got {}",
                self.delta_c
            )));
        }
        for (n, a) in self.alpha.iter().enumerate() {
            if !(*a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("alpha{} must be >= 0, got {a}", n + 1)));
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: [f64; 2]) -> Self {
        self.alpha = alpha;
        self
    }

    /// Stationary temperature `k_B T` in units of hbar omega_r.
    pub fn temperature(&self) -> f64 {
        temperature_of(self.delta_c, self.kappa)
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature()
    }

    /// `kappa / (-delta_c)`.
    pub fn retardation_ratio(&self) -> f64 {
        self.kappa / -self.delta_c
    }

    /// Coefficient `c_n` of the rank-1 momentum diffusion of mode `n` (1 or 2):
    /// `D_ij^n = c_n sin(n u_i) sin(n u_j)`.
    pub fn diffusion_coefficient(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf * nf * self.alpha[n - 1] * self.temperature() * self.retardation_ratio()
            / self.n_atoms as f64
    }

    /// Friction coefficient `g_n` of mode `n`: `F_ret,j = -g_n sin(n u_j) sum_l p_l sin(n u_l)`.
    pub fn friction_coefficient(&self, n: usize) -> f64 {
        let nf = n as f64;
        2.0 * nf * nf * self.alpha[n - 1] * self.retardation_ratio() / self.n_atoms as f64
    }

    /// Single-atom scattering amplitudes `S_n` reproducing `alpha_n`.
    pub fn pump_amplitudes(&self) -> [f64; 2] {
        [
            pump_from_alpha(self.n_atoms, self.alpha[0], self.delta_c, self.kappa),
            pump_from_alpha(self.n_atoms, self.alpha[1], self.delta_c, self.kappa),
        ]
    }
}

fn check_detuning(delta: f64, kappa: f64) -> Result<()> {
    if !(delta < 0.0) {
        return Err(Error::InvalidParameter(format!("detuning must be negative, got {delta}")));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// Inverse temperature `beta = -4 delta / (delta^2 + kappa^2)` (units 1/(hbar omega_r)).
pub fn beta_of(delta: f64, kappa: f64) -> Result<f64> {
    check_detuning(delta, kappa)?;
    Ok(-4.0 * delta / (delta * delta + kappa * kappa))
}

/// `k_B T = (delta^2 + kappa^2) / (-4 delta)`; callers guarantee `delta < 0`.
pub fn temperature_of(delta: f64, kappa: f64) -> f64 {
    (delta * delta + kappa * kappa) / (-4.0 * delta)
}

/// Minimal cavity-cooling temperature `k_B T_0 = kappa / 2`, reached at `delta = -kappa`.
pub fn minimal_temperature(kappa: f64) -> f64 {
    kappa / 2.0
}

/// Kinetic energy per particle `<p^2>` at the minimal temperature, hbar kappa / 4.
pub fn minimal_kinetic_energy(kappa: f64) -> f64 {
    thermal_momentum_variance(minimal_temperature(kappa))
}

/// Dimensionless pump parameter `alpha = 4 N S^2 delta^2 / (delta^2 + kappa^2)^2`.
pub fn alpha_from_pump(n_atoms: usize, s: f64, delta: f64, kappa: f64) -> Result<f64> {
    check_detuning(delta, kappa)?;
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("pump amplitude must be >= 0, got {s}")));
    }
    let d2 = delta * delta;
    let l = d2 + kappa * kappa;
    Ok(4.0 * n_atoms as f64 * s * s * d2 / (l * l))
}

/// Non-negative `S` such that [`alpha_from_pump`] returns `alpha`.
pub fn pump_from_alpha(n_atoms: usize, alpha: f64, delta: f64, kappa: f64) -> f64 {
    let d2 = delta * delta;
    let l = d2 + kappa * kappa;
    (alpha * l * l / (4.0 * n_atoms as f64 * d2)).sqrt()
}

/// Squared oscillation frequency about the lattice minima,
/// `omega_0^2 = (delta^2 + kappa^2)/(-delta) (alpha1 theta1 + 4 alpha2 theta2)`.
pub fn trap_frequency_squared(params: &SystemParams, theta1: f64, theta2: f64) -> Result<f64> {
    let curvature = params.alpha[0] * theta1 + 4.0 * params.alpha[1] * theta2;
    if curvature < 0.0 {
        return Err(Error::NegativeTrapCurvature(curvature));
    }
    let d = params.delta_c;
    Ok((d * d + params.kappa * params.kappa) / -d * curvature)
}

/// Harmonic trap frequency `omega_0` in units of omega_r.
pub fn trap_frequency(params: &SystemParams, theta1: f64, theta2: f64) -> Result<f64> {
    trap_frequency_squared(params, theta1, theta2).map(f64::sqrt)
}

/// Stationary temperature corrected for localization at the lattice minima:
/// `k_B T~ = (delta^2 + kappa^2)/(4|delta|) + omega_0^2/|delta|`.
pub fn corrected_temperature(params: &SystemParams, theta1: f64, theta2: f64) -> Result<f64> {
    let w2 = trap_frequency_squared(params, theta1, theta2)?;
    Ok(params.temperature() + w2 / params.delta_c.abs())
}

/// Pump parameters rescaled to the corrected temperature: `alpha~_n = alpha_n T_0 / T~`.
pub fn rescaled_alpha(params: &SystemParams, theta1: f64, theta2: f64) -> Result<[f64; 2]> {
    let ratio = minimal_temperature(params.kappa) / corrected_temperature(params, theta1, theta2)?;
    Ok([params.alpha[0] * ratio, params.alpha[1] * ratio])
}

/// Momentum variance `m k_B T` of a thermal distribution at temperature `temperature`.
pub fn thermal_momentum_variance(temperature: f64) -> f64 {
    MASS * temperature
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn temperature_at_delta_minus_kappa_is_t0() {
        let kappa = 388.6;
        let beta = beta_of(-kappa, kappa).unwrap();
        assert_relative_eq!(1.0 / beta, kappa / 2.0, max_relative = 1e-15);
        assert_relative_eq!(1.0 / beta, minimal_temperature(kappa), max_relative = 1e-15);
    }

    #[test]
    fn temperature_at_twice_kappa() {
        let kappa = 3.0;
        let t = 1.0 / beta_of(-2.0 * kappa, kappa).unwrap();
        assert_relative_eq!(t, 5.0 * kappa / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn temperature_minimized_at_delta_minus_kappa() {
        let kappa = 10.0;
        let t0 = temperature_of(-kappa, kappa);
        for i in 1..2000 {
            let d = -(i as f64) * 0.01;
            assert!(temperature_of(d, kappa) >= t0 - 1e-12, "delta = {d}");
        }
    }

    #[test]
    fn beta_times_temperature_is_one() {
        for (d, k) in [(-1.0, 1.0), (-0.3, 7.0), (-400.0, 388.6), (-1e-3, 2.0)] {
            assert_relative_eq!(beta_of(d, k).unwrap() * temperature_of(d, k), 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn beta_rejects_non_negative_detuning() {
        assert!(beta_of(0.0, 1.0).is_err());
        assert!(beta_of(2.0, 1.0).is_err());
        assert!(beta_of(-1.0, 0.0).is_err());
    }

    #[test]
    fn alpha_pump_relations() {
        let kappa = 388.6;
        let n = 100;
        // delta = -kappa: N S^2 = alpha kappa^2
        let s = 12.5;
        let a = alpha_from_pump(n, s, -kappa, kappa).unwrap();
        assert_relative_eq!(n as f64 * s * s, a * kappa * kappa, max_relative = 1e-14);
        assert_eq!(alpha_from_pump(n, 0.0, -kappa, kappa).unwrap(), 0.0);
        for s in [0.1, 3.0, 55.0, 1e3] {
            for d in [-0.5 * kappa, -kappa, -3.0 * kappa] {
                let a = alpha_from_pump(n, s, d, kappa).unwrap();
                assert_relative_eq!(pump_from_alpha(n, a, d, kappa), s, max_relative = 1e-14);
            }
        }
        assert!(alpha_from_pump(n, -1.0, -kappa, kappa).is_err());
    }

    #[test]
    fn validation() {
        assert!(SystemParams::new(10, 1.0, -1.0, [0.0, 2.0]).is_ok());
        assert!(SystemParams::new(0, 1.0, -1.0, [0.0, 0.0]).is_err());
        assert!(SystemParams::new(10, 1.0, 0.0, [0.0, 0.0]).is_err());
        assert!(SystemParams::new(10, -1.0, -1.0, [0.0, 0.0]).is_err());
        assert!(SystemParams::new(10, 1.0, -1.0, [-0.1, 0.0]).is_err());
    }

    #[test]
    fn fluctuation_dissipation_ratio() {
        let p = SystemParams::new(37, 5.0, -2.0, [1.3, 0.7]).unwrap();
        for n in [1, 2] {
            let ratio = p.diffusion_coefficient(n) / p.friction_coefficient(n);
            assert_relative_eq!(ratio, MASS * p.temperature(), max_relative = 1e-14);
        }
    }

    #[test]
    fn corrected_temperature_without_order_is_plain() {
        let p = SystemParams::with_defaults(100, [2.0, 2.0]);
        assert_relative_eq!(corrected_temperature(&p, 0.0, 0.0).unwrap(), p.temperature());
    }

    #[test]
    fn corrected_temperature_at_bistable_point() {
        // delta = -kappa, alpha = (2, 2), theta = (0.97, 0.88): k_B T~ ~ 1.1 k_B T_0
        let p = SystemParams::with_defaults(100, [2.0, 2.0]);
        let t = corrected_temperature(&p, 0.97, 0.88).unwrap();
        let ratio = t / minimal_temperature(p.kappa);
        assert!((ratio - 1.1).abs() < 0.05, "{ratio}");
        // omega_0^2/|delta| / T_0 = 2 * 2 (alpha1 theta1 + 4 alpha2 theta2) / kappa ... exact value
        let exact = 1.0 + 4.0 * (2.0 * 0.97 + 8.0 * 0.88) / p.kappa;
        assert_relative_eq!(ratio, exact, max_relative = 1e-14);
        let a = rescaled_alpha(&p, 0.97, 0.88).unwrap();
        assert!(a[0] < 2.0 && a[1] < 2.0);
        assert_relative_eq!(a[0], 2.0 / exact, max_relative = 1e-14);
    }

    #[test]
    fn negative_curvature_is_rejected() {
        let p = SystemParams::with_defaults(10, [1.0, 1.0]);
        assert!(matches!(trap_frequency(&p, -0.5, 0.0), Err(Error::NegativeTrapCurvature(_))));
    }
}
