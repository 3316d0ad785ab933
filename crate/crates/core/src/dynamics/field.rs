//! Integrator for the model that keeps the two cavity-field amplitudes as
//! dynamical variables.
//!
//! Mode amplitudes obey `dE_n = ((i delta - kappa) E_n - i N S_n Theta_n) dt + dxi_n`
//! with independent quadrature noises of variance `kappa/2 dt`, and the atoms
//! feel `dp_j = sum_n 2 n S_n Re(E_n) sin(n u_j) dt`.
//!
//! The linear field part is propagated with its exact exponential solution
//! over each step (atoms frozen), then the momenta are kicked with the updated
//! field and the phases drift with the updated momenta.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::adiabatic::{check_grid, AdiabaticStepper};
use super::integrator::IntegratorConfig;
use super::observer::Observer;
use super::step_sizes;
use crate::error::{Error, Result};
use crate::model::ModeSums;
use crate::params::{pump_from_alpha, SystemParams};
use crate::protocol::Protocol;
use crate::state::{EnsembleState, FieldState};

/// Largest `dt * max(kappa, |delta_c|)` used by default.
pub const FIELD_DT_RATE: f64 = 0.05;
/// Hard stiffness limit on `dt * max(kappa, |delta_c|)`.
pub const FIELD_MAX_DT_RATE: f64 = 0.5;

/// Time step for the field model: `min(dt, 0.05/kappa, 0.05/|delta_c|)`.
pub fn field_dt(cfg: &IntegratorConfig, params: &SystemParams) -> f64 {
    cfg.dt.min(FIELD_DT_RATE / params.kappa).min(FIELD_DT_RATE / params.delta_c.abs())
}

/// Stationary variance of each field quadrature without atoms.
pub const VACUUM_QUADRATURE_VARIANCE: f64 = 0.25;

/// Steady-state field `N S Theta (delta - i kappa)/(delta^2 + kappa^2)` for frozen atoms,
/// returned as (real, imaginary).
pub fn steady_field(n_atoms: usize, s: f64, theta: f64, delta: f64, kappa: f64) -> (f64, f64) {
    let a = n_atoms as f64 * s * theta / (delta * delta + kappa * kappa);
    (a * delta, -a * kappa)
}

/// Draws each field quadrature from the pump-free stationary distribution.
pub fn sample_vacuum_fields<R: Rng + ?Sized>(particle: EnsembleState, rng: &mut R) -> FieldState {
    let normal = Normal::new(0.0, VACUUM_QUADRATURE_VARIANCE.sqrt()).unwrap();
    let field_re = [normal.sample(rng), normal.sample(rng)];
    let field_im = [normal.sample(rng), normal.sample(rng)];
    FieldState { particle, field_re, field_im }
}

#[derive(Debug, Clone, Default)]
pub struct FieldStepper {
    trig: AdiabaticStepper,
}

impl FieldStepper {
    pub fn new(n: usize) -> Self {
        Self { trig: AdiabaticStepper::new(n) }
    }

    pub fn prepare(&mut self, state: &FieldState) -> ModeSums {
        self.trig.prepare(&state.particle)
    }

    /// Advances by `h`; `noise` holds standard normal draws
    /// `[re_1, im_1, re_2, im_2]`.
    pub fn advance(
        &mut self,
        state: &mut FieldState,
        sums: &ModeSums,
        params: &SystemParams,
        h: f64,
        noise: [f64; 4],
        wrap: bool,
    ) -> ModeSums {
        let kappa = params.kappa;
        let delta = params.delta_c;
        let n_atoms = params.n_atoms as f64;
        let decay = (-kappa * h).exp();
        let (sin_r, cos_r) = (delta * h).sin_cos();
        // exact propagator of dE = (z E + source) dt with z = i delta - kappa
        let (er, ei) = (decay * cos_r, decay * sin_r);
        let z2 = delta * delta + kappa * kappa;
        // (e^{zh} - 1) / z
        let (gr, gi) = ((er - 1.0) * -kappa + ei * delta, ei * -kappa - (er - 1.0) * delta);
        let (gr, gi) = (gr / z2, gi / z2);
        let sigma = ((1.0 - decay * decay) / 4.0).sqrt();
        let mut kick = [0.0; 2];
        for n in 0..2 {
            let s = pump_from_alpha(params.n_atoms, params.alpha[n], delta, kappa);
            let (re, im) = (state.field_re[n], state.field_im[n]);
            // source = -i N S Theta
            let src = -n_atoms * s * sums.theta[n];
            let new_re = er * re - ei * im + (-gi * src) + sigma * noise[2 * n];
            let new_im = ei * re + er * im + gr * src + sigma * noise[2 * n + 1];
            state.field_re[n] = new_re;
            state.field_im[n] = new_im;
            kick[n] = 2.0 * (n + 1) as f64 * s * new_re * h;
        }
        let next = self.trig.kick_drift(&mut state.particle, [kick[0], kick[1]], h, wrap);
        state.particle.time += h;
        next
    }
}

fn draw_field_noise<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ]
}

fn check_stiffness(h: f64, params: &SystemParams) -> Result<()> {
    let rate = params.kappa.max(params.delta_c.abs());
    if !(h > 0.0) || h * rate > FIELD_MAX_DT_RATE {
        return Err(Error::Unstable(format!(
            "field model needs dt * max(kappa, |delta|) <= {FIELD_MAX_DT_RATE}, got {}",
            h * rate
        )));
    }
    Ok(())
}

/// One step of size `cfg.dt` of the field model.
pub fn step_field<R: Rng + ?Sized>(
    state: &FieldState,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    rng: &mut R,
) -> Result<FieldState> {
    check_stiffness(cfg.dt, params)?;
    let mut next = state.clone();
    let mut stepper = FieldStepper::new(state.particle.len());
    let sums = stepper.prepare(&next);
    stepper.advance(&mut next, &sums, params, cfg.dt, draw_field_noise(rng), cfg.wrap);
    if !next.is_finite() {
        return Err(Error::NonFinite { trajectory: 0, time: state.particle.time });
    }
    Ok(next)
}

/// Field-model counterpart of [`super::adiabatic::run_trajectory`]; the step
/// is [`field_dt`] of `cfg`.
pub fn run_trajectory<R: Rng + ?Sized, O: Observer + ?Sized>(
    initial: &FieldState,
    base: &SystemParams,
    protocol: &Protocol,
    cfg: &IntegratorConfig,
    grid: &[f64],
    observer: &mut O,
    rng: &mut R,
) -> Result<FieldState> {
    check_grid(grid, initial.particle.time)?;
    let dt = field_dt(cfg, base);
    check_stiffness(dt, base)?;
    let mut state = initial.clone();
    if cfg.wrap {
        state.particle.wrap();
    }
    let mut stepper = FieldStepper::new(state.particle.len());
    let mut sums = stepper.prepare(&state);
    let mut params = protocol.params_at(base, state.particle.time);
    for &target in grid {
        let start = state.particle.time;
        for h in step_sizes(start, target, dt) {
            params.alpha = protocol.alpha_at(state.particle.time);
            sums = stepper.advance(&mut state, &sums, &params, h, draw_field_noise(rng), cfg.wrap);
            let finite = sums.theta.iter().chain(&sums.momentum_projection).all(|x| x.is_finite())
                && state.field_re.iter().chain(&state.field_im).all(|x| x.is_finite());
            if !finite {
                return Err(Error::NonFinite { trajectory: 0, time: state.particle.time });
            }
        }
        state.particle.time = target;
        params.alpha = protocol.alpha_at(target);
        observer.observe(&state.particle, &params, &sums);
    }
    Ok(state)
}
