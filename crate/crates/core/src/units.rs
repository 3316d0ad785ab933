//! Internal unit convention.
//!
//! Everything inside the crate uses hbar = k = omega_r = 1, so the atomic mass
//! is m = 1/2 and the recoil relation omega_r = hbar k^2 / (2m) holds identically.
//! Positions are phases `u = k x` in radians, momenta are `p / (hbar k)`, times
//! are `omega_r t` and energies are in units of `hbar omega_r`.
//!
//! Laboratory units only appear at the I/O boundary through [`LabUnits`].

use std::f64::consts::TAU;

/// Particle mass in internal units.
pub const MASS: f64 = 0.5;

/// Reduced Planck constant in SI units (J s).
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Atomic mass unit in kg.
pub const ATOMIC_MASS_UNIT_SI: f64 = 1.660_539_066_60e-27;

/// Recoil frequency `omega_r / 2 pi` used for the default 85Rb D2 setup, in Hz.
pub const RB85_RECOIL_FREQUENCY_HZ: f64 = 3.86e3;

/// Default cavity linewidth in units of omega_r (kappa = 2 pi x 1.5 MHz for 85Rb).
pub const DEFAULT_KAPPA: f64 = 388.6;

/// Converts between laboratory frequencies/times and the internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabUnits {
    /// `omega_r / 2 pi` in Hz.
    pub recoil_frequency_hz: f64,
}

impl Default for LabUnits {
    fn default() -> Self {
        Self { recoil_frequency_hz: RB85_RECOIL_FREQUENCY_HZ }
    }
}

impl LabUnits {
    /// Recoil frequency of an atom of mass `mass_u` (atomic mass units) on a
    /// transition of wavelength `wavelength_nm`.
    pub fn from_wavelength(wavelength_nm: f64, mass_u: f64) -> Self {
        let k = TAU / (wavelength_nm * 1e-9);
        let omega_r = HBAR_SI * k * k / (2.0 * mass_u * ATOMIC_MASS_UNIT_SI);
        Self { recoil_frequency_hz: omega_r / TAU }
    }

    /// Angular frequency `2 pi f` (f in Hz) expressed in units of omega_r.
    pub fn frequency_from_hz(&self, f_hz: f64) -> f64 {
        f_hz / self.recoil_frequency_hz
    }

    pub fn frequency_to_hz(&self, omega: f64) -> f64 {
        omega * self.recoil_frequency_hz
    }

    /// A laboratory time in seconds expressed in units of 1/omega_r.
    pub fn time_from_seconds(&self, t_s: f64) -> f64 {
        t_s * TAU * self.recoil_frequency_hz
    }
}

/// Converts an internal time (1/omega_r) to units of 1/kappa.
pub fn time_to_kappa_units(t: f64, kappa: f64) -> f64 {
    t * kappa
}

/// Converts a time in units of 1/kappa to internal units.
pub fn time_from_kappa_units(t_kappa: f64, kappa: f64) -> f64 {
    t_kappa / kappa
}

/// Maps a phase into `[0, 2 pi)`.
#[inline]
pub fn wrap_phase(u: f64) -> f64 {
    let w = u.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recoil_relation_holds_in_internal_units() {
        // omega_r = hbar k^2 / 2m with hbar = k = 1
        assert_eq!(1.0 / (2.0 * MASS), 1.0);
    }

    #[test]
    fn rb85_recoil_from_wavelength() {
        let lab = LabUnits::from_wavelength(780.0, 84.911_789_738);
        assert!((lab.recoil_frequency_hz - 3.86e3).abs() < 10.0, "{}", lab.recoil_frequency_hz);
    }

    #[test]
    fn default_kappa_matches_lab_linewidth() {
        let lab = LabUnits::default();
        let kappa = lab.frequency_from_hz(1.5e6);
        assert!((kappa - DEFAULT_KAPPA).abs() < 0.1, "{kappa}");
    }

    #[test]
    fn wrap_phase_range() {
        for u in [-1e-300, -TAU, -0.1, 0.0, 3.0, TAU, 7.0 * TAU + 0.5, 1e6] {
            let w = wrap_phase(u);
            assert!((0.0..TAU).contains(&w), "{u} -> {w}");
        }
    }
}
