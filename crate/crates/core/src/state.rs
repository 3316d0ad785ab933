//! Phase-space state of the atomic ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::wrap_phase;

/// Positions (phases `u = k x`) and momenta (units of hbar k) of N atoms at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    /// Time in units of 1/omega_r.
    pub time: f64,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl EnsembleState {
    pub fn new(time: f64, positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        if positions.len() != momenta.len() {
            return Err(Error::InvalidParameter(format!(
                "{} positions but {} momenta",
                positions.len(),
                momenta.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Self { time, positions, momenta })
    }

    /// All atoms at rest at the same phase.
    pub fn uniform_at(n: usize, u: f64) -> Self {
        Self { time: 0.0, positions: vec![wrap_phase(u); n], momenta: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn wrap(&mut self) {
        for u in &mut self.positions {
            *u = wrap_phase(*u);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.positions.iter().all(|x| x.is_finite())
            && self.momenta.iter().all(|x| x.is_finite())
    }

    /// `sum_j p_j^2`, the total kinetic energy in hbar omega_r.
    pub fn kinetic_energy(&self) -> f64 {
        self.momenta.iter().map(|p| p * p).sum()
    }

    /// Mean kinetic energy per particle `<p^2/2m>` in hbar omega_r.
    pub fn kinetic_energy_per_particle(&self) -> f64 {
        self.kinetic_energy() / self.len() as f64
    }
}

/// Atomic ensemble together with the two complex cavity-field amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub particle: EnsembleState,
    /// Real quadratures of modes 1 and 2.
    pub field_re: [f64; 2],
    /// Imaginary quadratures of modes 1 and 2.
    pub field_im: [f64; 2],
}

impl FieldState {
    pub fn is_finite(&self) -> bool {
        self.particle.is_finite()
            && self.field_re.iter().chain(&self.field_im).all(|x| x.is_finite())
    }
}
