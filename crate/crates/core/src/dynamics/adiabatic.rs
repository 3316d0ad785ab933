//! Euler-Maruyama integration of the adiabatically eliminated model.
//!
//! Each step kicks the momenta with the current forces and noise and then
//! drifts the phases with the updated momenta (`du/dtau = 2 p`), so the
//! conservative lattice motion is integrated symplectically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use std::f64::consts::{PI, TAU};

use super::integrator::{IntegratorConfig, StepHalvingReport, DEFAULT_DT};
use super::observer::Observer;
use super::step_sizes;
use super::trig::sin_cos;
use crate::error::{Error, Result};
use crate::model::{adiabatic_amplitudes, retardation_amplitudes, ModeSums};
use crate::params::{thermal_momentum_variance, SystemParams};
use crate::protocol::Protocol;
use crate::state::EnsembleState;

/// Relative RMS momentum difference accepted by the step-halving check.
pub const HALVING_MOMENTUM_TOL: f64 = 0.05;
/// RMS phase difference (radians) accepted by the step-halving check.
pub const HALVING_POSITION_TOL: f64 = 0.05;
/// Physical horizon of the step-halving probe (1/omega_r).
pub const HALVING_HORIZON: f64 = 0.05;

/// Steps between exact re-evaluations of the cached sines and cosines.
const RESYNC_INTERVAL: u32 = 64;
/// Largest phase increment per step handled by [`rotate`].
const MAX_ROTATION: f64 = 0.3;
/// Accumulator lanes of the mode sums.
const L: usize = 4;

/// `(sin(u + d), cos(u + d))` from `(sin u, cos u)` for `|d| <= MAX_ROTATION`.
#[inline(always)]
fn rotate(s: f64, c: f64, d: f64) -> (f64, f64) {
    let d2 = d * d;
    let sd = d * (1.0 - d2 * (1.0 / 6.0) * (1.0 - d2 * (1.0 / 20.0) * (1.0 - d2 * (1.0 / 42.0) * (1.0 - d2 * (1.0 / 72.0)))));
    let cd = 1.0
        - d2 * 0.5
            * (1.0 - d2 * (1.0 / 12.0) * (1.0 - d2 * (1.0 / 30.0) * (1.0 - d2 * (1.0 / 56.0) * (1.0 - d2 * (1.0 / 90.0)))));
    (s * cd + c * sd, c * cd - s * sd)
}

/// Reusable per-trajectory buffers holding `sin u` and `cos u` of every
/// particle; they are advanced incrementally and refreshed periodically.
#[derive(Debug, Clone, Default)]
pub struct AdiabaticStepper {
    pub(super) sin1: Vec<f64>,
    pub(super) cos1: Vec<f64>,
    since_sync: u32,
}

impl AdiabaticStepper {
    pub fn new(n: usize) -> Self {
        Self { sin1: vec![0.0; n], cos1: vec![0.0; n], since_sync: 0 }
    }

    /// Fills the trigonometric caches for the current positions and returns the mode sums.
    pub fn prepare(&mut self, state: &EnsembleState) -> ModeSums {
        let n = state.len();
        self.sin1.resize(n, 0.0);
        self.cos1.resize(n, 0.0);
        self.since_sync = 0;
        let mut acc = [0.0; 4];
        for (j, (&u, &p)) in state.positions.iter().zip(&state.momenta).enumerate() {
            let (s, c) = u.sin_cos();
            self.sin1[j] = s;
            self.cos1[j] = c;
            acc[0] += c;
            acc[1] += 2.0 * c * c - 1.0;
            acc[2] += p * s;
            acc[3] += 2.0 * p * s * c;
        }
        let inv_n = 1.0 / n as f64;
        ModeSums {
            theta: [acc[0] * inv_n, acc[1] * inv_n],
            momentum_projection: [acc[2] * inv_n, acc[3] * inv_n],
        }
    }

    /// Advances by `h` with mode Wiener increments `d_b` (variance `h` each)
    /// and returns the mode sums of the new state. `sums` must be those of
    /// the current state as returned by [`Self::prepare`] or the previous call.
    pub fn advance(
        &mut self,
        state: &mut EnsembleState,
        sums: &ModeSums,
        params: &SystemParams,
        h: f64,
        d_b: [f64; 2],
        wrap: bool,
    ) -> ModeSums {
        let a = adiabatic_amplitudes(params, sums.theta);
        let b = retardation_amplitudes(params, sums.momentum_projection);
        let w1 = (2.0 * params.diffusion_coefficient(1)).sqrt() * d_b[0];
        let w2 = (2.0 * params.diffusion_coefficient(2)).sqrt() * d_b[1];
        let k1 = -(a[0] + b[0]) * h + w1;
        let k2 = -(a[1] + b[1]) * h + w2;
        let next = self.kick_drift(state, [k1, k2], h, wrap);
        state.time += h;
        next
    }

    /// Applies the momentum kick `sin u (k1 + 2 k2 cos u)`, then drifts the
    /// phases over `h`, refreshes the caches and returns the new mode sums.
    pub(super) fn kick_drift(&mut self, state: &mut EnsembleState, k: [f64; 2], h: f64, wrap: bool) -> ModeSums {
        if !wrap {
            for ((u, p), (&s, &c)) in
                state.positions.iter_mut().zip(state.momenta.iter_mut()).zip(self.sin1.iter().zip(&self.cos1))
            {
                *p += s * (k[0] + 2.0 * k[1] * c);
                *u += 2.0 * h * *p;
            }
            return self.prepare(state);
        }
        let (k1, k2c) = (k[0], 2.0 * k[1]);
        let drift = 2.0 * h;
        let n = state.len();
        self.since_sync += 1;
        let exact = self.since_sync >= RESYNC_INTERVAL;
        if exact {
            self.since_sync = 0;
        }
        let (u, p) = (&mut state.positions[..], &mut state.momenta[..n]);
        let (sv, cv) = (&mut self.sin1[..n], &mut self.cos1[..n]);
        for j in 0..n {
            p[j] += sv[j] * (k1 + k2c * cv[j]);
            let x = u[j] + drift * p[j];
            let x = x - if x >= TAU { TAU } else { 0.0 };
            u[j] = x + if x < 0.0 { TAU } else { 0.0 };
        }
        let mut pmax = [0.0f64; L];
        for ch in p.chunks(L) {
            for (m, x) in pmax.iter_mut().zip(ch) {
                *m = if x.abs() > *m { x.abs() } else { *m };
            }
        }
        let pmax = pmax.iter().fold(0.0f64, |m, x| m.max(*x));
        if !(drift * pmax < MAX_ROTATION) {
            // phase increments outside the range of the incremental update
            state.wrap();
            return self.prepare(state);
        }
        if exact {
            for j in 0..n {
                let (sn, cn) = sin_cos(u[j]);
                sv[j] = sn;
                cv[j] = cn;
            }
        } else {
            for j in 0..n {
                let (sn, cn) = rotate(sv[j], cv[j], drift * p[j]);
                sv[j] = sn;
                cv[j] = cn;
            }
        }
        let mut acc = [[0.0; L]; 4];
        for ((ps, ss), cs) in p.chunks(L).zip(sv.chunks(L)).zip(cv.chunks(L)) {
            for l in 0..ps.len() {
                let (pj, sn, cn) = (ps[l], ss[l], cs[l]);
                acc[0][l] += cn;
                acc[1][l] += 2.0 * cn * cn - 1.0;
                acc[2][l] += pj * sn;
                acc[3][l] += 2.0 * pj * sn * cn;
            }
        }
        let inv_n = 1.0 / n as f64;
        let total = |row: &[f64; L]| row.iter().sum::<f64>() * inv_n;
        ModeSums {
            theta: [total(&acc[0]), total(&acc[1])],
            momentum_projection: [total(&acc[2]), total(&acc[3])],
        }
    }
}

fn draw_increments<R: Rng + ?Sized>(h: f64, rng: &mut R) -> [f64; 2] {
    let sq = h.sqrt();
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    [sq * e1, sq * e2]
}

/// One Euler-Maruyama step of size `cfg.dt` with parameters `params`.
pub fn step<R: Rng + ?Sized>(
    state: &EnsembleState,
    params: &SystemParams,
    cfg: &IntegratorConfig,
    rng: &mut R,
) -> Result<EnsembleState> {
    let mut next = state.clone();
    let mut stepper = AdiabaticStepper::new(state.len());
    let sums = stepper.prepare(&next);
    let d_b = draw_increments(cfg.dt, rng);
    stepper.advance(&mut next, &sums, params, cfg.dt, d_b, cfg.wrap);
    if !next.is_finite() {
        return Err(Error::NonFinite { trajectory: 0, time: state.time });
    }
    Ok(next)
}

fn sums_finite(s: &ModeSums) -> bool {
    s.theta.iter().chain(&s.momentum_projection).all(|x| x.is_finite())
}

pub(crate) fn check_grid(grid: &[f64], t0: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty output grid".into()));
    }
    if grid[0] < t0 {
        return Err(Error::InvalidParameter(format!(
            "output grid starts at {} before the initial time {t0}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("output grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Integrates from `initial.time` to the last grid time under `protocol`,
/// calling `observer` at every grid time (including the initial time when it
/// is on the grid). The trajectory is a deterministic function of the inputs
/// and the RNG state.
pub fn run_trajectory<R: Rng + ?Sized, O: Observer + ?Sized>(
    initial: &EnsembleState,
    base: &SystemParams,
    protocol: &Protocol,
    cfg: &IntegratorConfig,
    grid: &[f64],
    observer: &mut O,
    rng: &mut R,
) -> Result<EnsembleState> {
    check_grid(grid, initial.time)?;
    let mut state = initial.clone();
    if cfg.wrap {
        state.wrap();
    }
    let mut stepper = AdiabaticStepper::new(state.len());
    let mut sums = stepper.prepare(&state);
    let mut params = protocol.params_at(base, state.time);
    for &target in grid {
        let start = state.time;
        for h in step_sizes(start, target, cfg.dt) {
            params.alpha = protocol.alpha_at(state.time);
            let d_b = draw_increments(h, rng);
            sums = stepper.advance(&mut state, &sums, &params, h, d_b, cfg.wrap);
            if !sums_finite(&sums) {
                return Err(Error::NonFinite { trajectory: 0, time: state.time });
            }
        }
        state.time = target;
        params.alpha = protocol.alpha_at(state.time);
        observer.observe(&state, &params, &sums);
    }
    Ok(state)
}

/// Compares one `dt` path against the `dt/2` refinement of the same Brownian
/// path over a short horizon, starting from a thermal state localized on the
/// lattice of the strongest pump.
pub fn step_halving_check(params: &SystemParams, alpha_max: [f64; 2], dt: f64, seed: u64) -> StepHalvingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_atoms.min(100);
    let probe_params = SystemParams { n_atoms: n, alpha: alpha_max, ..*params };
    let spread = Normal::new(0.0, 0.3).unwrap();
    let thermal = Normal::new(0.0, thermal_momentum_variance(params.temperature()).sqrt()).unwrap();
    let positions = (0..n)
        .map(|j| {
            // with mode 1 off, both 0 and pi are lattice minima
            let site = if alpha_max[0] == 0.0 && j % 2 == 1 { PI } else { 0.0 };
            crate::units::wrap_phase(site + spread.sample(&mut rng))
        })
        .collect();
    let momenta = (0..n).map(|_| thermal.sample(&mut rng)).collect();
    let start = EnsembleState { time: 0.0, positions, momenta };

    let steps = (HALVING_HORIZON / dt).ceil().max(1.0) as usize;
    let mut coarse = start.clone();
    let mut fine = start.clone();
    let mut sc = AdiabaticStepper::new(n);
    let mut sf = AdiabaticStepper::new(n);
    let mut coarse_sums = sc.prepare(&coarse);
    let mut fine_sums = sf.prepare(&fine);
    let half = 0.5 * dt;
    for _ in 0..steps {
        let a = draw_increments(half, &mut rng);
        let b = draw_increments(half, &mut rng);
        fine_sums = sf.advance(&mut fine, &fine_sums, &probe_params, half, a, true);
        fine_sums = sf.advance(&mut fine, &fine_sums, &probe_params, half, b, true);
        coarse_sums = sc.advance(&mut coarse, &coarse_sums, &probe_params, dt, [a[0] + b[0], a[1] + b[1]], true);
    }
    let mut dp2 = 0.0;
    let mut p2 = 0.0;
    let mut du2 = 0.0;
    for j in 0..n {
        let dp = coarse.momenta[j] - fine.momenta[j];
        dp2 += dp * dp;
        p2 += fine.momenta[j] * fine.momenta[j];
        let mut du = (coarse.positions[j] - fine.positions[j]).rem_euclid(TAU);
        if du > PI {
            du -= TAU;
        }
        du2 += du * du;
    }
    let momentum_error = (dp2 / p2.max(f64::MIN_POSITIVE)).sqrt();
    let position_error = (du2 / n as f64).sqrt();
    let passed = momentum_error.is_finite()
        && momentum_error < HALVING_MOMENTUM_TOL
        && position_error < HALVING_POSITION_TOL;
    StepHalvingReport { dt, momentum_error, position_error, passed }
}

/// Default time step: starts at 1e-2/omega_r and halves until both the
/// stability guard and the step-halving check pass.
pub fn calibrate_dt(params: &SystemParams, alpha_max: [f64; 2]) -> Result<IntegratorConfig> {
    let mut cfg = IntegratorConfig::with_dt(DEFAULT_DT);
    for _ in 0..40 {
        if cfg.check_stability(params, alpha_max).is_ok() && step_halving_check(params, alpha_max, cfg.dt, 0x5eed).passed {
            return Ok(cfg);
        }
        cfg.dt *= 0.5;
    }
    Err(Error::Unstable("no time step passed the step-halving check".into()))
}
