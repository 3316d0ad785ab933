//! Forces, diffusion and order parameters of the adiabatically eliminated model.
//!
//! Dimensionless forms (hbar = k = omega_r = 1, `g = kappa/(-delta_c)`):
//!
//! * adiabatic force `F_ad,j = -sum_n 2 n alpha_n k_B T sin(n u_j) Theta_n`
//! * retardation force `F_ret,j = -sum_n 2 n^2 alpha_n g sin(n u_j) (1/N) sum_l p_l sin(n u_l)`
//! * diffusion `D_ij^n = c_n sin(n u_i) sin(n u_j)` with `c_n = n^2 alpha_n k_B T g / N`
//!
//! Each mode contributes a rank-1 diffusion matrix, so a momentum kick is
//! realized from a single normal draw per mode.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::state::EnsembleState;

/// Collective sums shared by the force and noise evaluations of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeSums {
    /// `Theta_n = (1/N) sum_j cos(n u_j)`.
    pub theta: [f64; 2],
    /// `(1/N) sum_j p_j sin(n u_j)`.
    pub momentum_projection: [f64; 2],
}

impl ModeSums {
    pub fn of(state: &EnsembleState) -> Self {
        let mut acc = [0.0; 4];
        for (&u, &p) in state.positions.iter().zip(&state.momenta) {
            let (s1, c1) = u.sin_cos();
            let (s2, c2) = (2.0 * s1 * c1, 2.0 * c1 * c1 - 1.0);
            acc[0] += c1;
            acc[1] += c2;
            acc[2] += p * s1;
            acc[3] += p * s2;
        }
        let inv_n = 1.0 / state.len() as f64;
        Self {
            theta: [acc[0] * inv_n, acc[1] * inv_n],
            momentum_projection: [acc[2] * inv_n, acc[3] * inv_n],
        }
    }
}

/// Bragg order parameter `Theta_n = (1/N) sum_j cos(n u_j)` for mode `n` in {1, 2}.
pub fn order_parameter(state: &EnsembleState, n: usize) -> Result<f64> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidMode(n));
    }
    if state.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let nf = n as f64;
    let sum: f64 = state.positions.iter().map(|u| (nf * u).cos()).sum();
    Ok(sum / state.len() as f64)
}

/// Per-mode prefactors of the adiabatic force, `2 n alpha_n k_B T Theta_n`.
pub(crate) fn adiabatic_amplitudes(params: &SystemParams, theta: [f64; 2]) -> [f64; 2] {
    let t = params.temperature();
    [2.0 * params.alpha[0] * t * theta[0], 4.0 * params.alpha[1] * t * theta[1]]
}

/// Per-mode prefactors of the retardation force, `2 n^2 alpha_n g (1/N) sum_l p_l sin(n u_l)`.
pub(crate) fn retardation_amplitudes(params: &SystemParams, projection: [f64; 2]) -> [f64; 2] {
    let g = params.retardation_ratio();
    [2.0 * params.alpha[0] * g * projection[0], 8.0 * params.alpha[1] * g * projection[1]]
}

/// Conservative cavity-mediated force on every atom.
pub fn adiabatic_force(state: &EnsembleState, params: &SystemParams) -> Vec<f64> {
    let sums = ModeSums::of(state);
    let a = adiabatic_amplitudes(params, sums.theta);
    state.positions.iter().map(|&u| -(a[0] * u.sin() + a[1] * (2.0 * u).sin())).collect()
}

/// Friction force from the finite cavity response time.
pub fn retardation_force(state: &EnsembleState, params: &SystemParams) -> Vec<f64> {
    let sums = ModeSums::of(state);
    let b = retardation_amplitudes(params, sums.momentum_projection);
    state.positions.iter().map(|&u| -(b[0] * u.sin() + b[1] * (2.0 * u).sin())).collect()
}

/// Momentum increments over `dt` given the two mode Wiener increments `dB`
/// (each with variance `dt`).
pub fn noise_from_increments(state: &EnsembleState, params: &SystemParams, d_b: [f64; 2]) -> Vec<f64> {
    let w = [
        (2.0 * params.diffusion_coefficient(1)).sqrt() * d_b[0],
        (2.0 * params.diffusion_coefficient(2)).sqrt() * d_b[1],
    ];
    state.positions.iter().map(|&u| w[0] * u.sin() + w[1] * (2.0 * u).sin()).collect()
}

/// Samples the correlated momentum diffusion increments over one step `dt`.
///
/// Two standard normal draws (one per mode) are shared by all atoms, which
/// reproduces `<dW_i^(n) dW_j^(m)> = 2 D_ij^n delta_nm dt` exactly.
pub fn sample_adiabatic_noise<R: Rng + ?Sized>(
    state: &EnsembleState,
    params: &SystemParams,
    dt: f64,
    rng: &mut R,
) -> Vec<f64> {
    let sq = dt.sqrt();
    let eta1: f64 = rng.sample(StandardNormal);
    let eta2: f64 = rng.sample(StandardNormal);
    noise_from_increments(state, params, [sq * eta1, sq * eta2])
}

/// Closed-form diffusion matrix `D^n` of mode `n` (row-major, N x N).
pub fn diffusion_matrix(state: &EnsembleState, params: &SystemParams, n: usize) -> Result<Vec<f64>> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidMode(n));
    }
    let c = params.diffusion_coefficient(n);
    let nf = n as f64;
    let s: Vec<f64> = state.positions.iter().map(|u| (nf * u).sin()).collect();
    let len = s.len();
    let mut d = vec![0.0; len * len];
    for i in 0..len {
        for j in 0..len {
            d[i * len + j] = c * s[i] * s[j];
        }
    }
    Ok(d)
}

/// Effective Hamiltonian `sum_j p_j^2 - N k_B T (alpha_1 Theta_1^2 + alpha_2 Theta_2^2)`.
pub fn effective_hamiltonian(state: &EnsembleState, params: &SystemParams) -> f64 {
    let sums = ModeSums::of(state);
    let [t1, t2] = sums.theta;
    state.kinetic_energy()
        - state.len() as f64
            * params.temperature()
            * (params.alpha[0] * t1 * t1 + params.alpha[1] * t2 * t2)
}
