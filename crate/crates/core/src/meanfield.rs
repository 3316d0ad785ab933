//! Mean-field free energy of the self-organized phases.
//!
//! In the thermodynamic limit at fixed `alpha_n`, the configurational free
//! energy per particle (in units of k_B T) is the variational functional
//!
//! `beta f(theta) = alpha_1 theta_1^2 + alpha_2 theta_2^2 - ln <exp(2 alpha_1 theta_1 cos u + 2 alpha_2 theta_2 cos 2u)>_u`
//!
//! where `<.>_u` averages over one lattice period. Its stationary points obey
//! `theta_n = <cos(n u)>` under the tilted single-site weight and its global
//! minima are the stationary phases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Default number of trapezoid nodes on [0, 2 pi).
pub const QUADRATURE_NODES: usize = 512;
/// Relative agreement required between the full and half-resolution rules.
pub const QUADRATURE_TOL: f64 = 1e-11;
/// Order parameters below this magnitude count as zero.
pub const ZERO_TOL: f64 = 1e-6;
/// Minima closer than this are merged.
pub const MERGE_TOL: f64 = 1e-4;
/// Minima within this free-energy difference of the lowest are global.
pub const GLOBAL_TOL: f64 = 1e-9;
/// Seeds per axis of the multi-start search.
pub const SEEDS_PER_AXIS: usize = 21;
/// A global-minimum jump larger than this across a localized boundary marks a first-order transition.
pub const JUMP_TOL: f64 = 1e-3;
/// Width in alpha to which phase boundaries are localized.
pub const BOUNDARY_WIDTH: f64 = 1e-9;
/// Bracket width at which the jump is compared with the final one.
pub const PERSISTENCE_WIDTH: f64 = 1e-6;
/// A discontinuity keeps at least this fraction of its jump from
/// [`PERSISTENCE_WIDTH`] down to [`BOUNDARY_WIDTH`].
pub const PERSISTENCE_RATIO: f64 = 0.5;

/// Free-energy functional at fixed pump strengths.
#[derive(Debug, Clone)]
pub struct FreeEnergy {
    alpha: [f64; 2],
    cos1: Vec<f64>,
    cos2: Vec<f64>,
}

/// Value and derivatives of `beta f` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    /// `<cos u>` and `<cos 2u>` under the tilted single-site weight.
    pub moments: [f64; 2],
}

impl FreeEnergy {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        Self::with_nodes(alpha1, alpha2, QUADRATURE_NODES)
    }

    pub fn with_nodes(alpha1: f64, alpha2: f64, nodes: usize) -> Result<Self> {
        if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got ({alpha1}, {alpha2})")));
        }
        if nodes < 8 || nodes % 2 != 0 {
            return Err(Error::InvalidParameter("quadrature needs an even number (>= 8) of nodes".into()));
        }
        let cos1 = (0..nodes).map(|k| (TAU * k as f64 / nodes as f64).cos()).collect();
        let cos2 = (0..nodes).map(|k| (2.0 * TAU * k as f64 / nodes as f64).cos()).collect();
        Ok(Self { alpha: [alpha1, alpha2], cos1, cos2 })
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    fn exponents(&self, theta: [f64; 2]) -> impl Iterator<Item = f64> + '_ {
        let a = 2.0 * self.alpha[0] * theta[0];
        let b = 2.0 * self.alpha[1] * theta[1];
        self.cos1.iter().zip(&self.cos2).map(move |(c1, c2)| a * c1 + b * c2)
    }

    /// `beta f(theta1, theta2)`.
    pub fn value(&self, theta1: f64, theta2: f64) -> Result<f64> {
        self.evaluate([theta1, theta2]).map(|e| e.value)
    }

    pub fn evaluate(&self, theta: [f64; 2]) -> Result<Evaluation> {
        // evaluated at |theta1| so that f is exactly even in theta1
        let sign = if theta[0] < 0.0 { -1.0 } else { 1.0 };
        let requested = theta;
        let theta = [theta[0].abs(), theta[1]];
        let shift = self.exponents(theta).fold(f64::NEG_INFINITY, f64::max);
        let nodes = self.cos1.len();
        // sums over all nodes and over the even-indexed half rule
        let (mut z, mut z_half) = (0.0, 0.0);
        let (mut m1, mut m2, mut m11, mut m22, mut m12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, e) in self.exponents(theta).enumerate() {
            let w = (e - shift).exp();
            let (c1, c2) = (self.cos1[k], self.cos2[k]);
            z += w;
            if k % 2 == 0 {
                z_half += w;
            }
            m1 += w * c1;
            m2 += w * c2;
            m11 += w * c1 * c1;
            m22 += w * c2 * c2;
            m12 += w * c1 * c2;
        }
        let mean = z / nodes as f64;
        let mean_half = z_half / (nodes / 2) as f64;
        if !((mean - mean_half).abs() <= QUADRATURE_TOL * mean) {
            return Err(Error::Quadrature(format!(
                "trapezoid rule not converged at theta = {requested:?}, alpha = {:?}",
                self.alpha
            )));
        }
        let ln_i = shift + mean.ln();
        let [a1, a2] = self.alpha;
        let (m1, m2) = (m1 / z, m2 / z);
        let (v11, v22, v12) = (m11 / z - m1 * m1, m22 / z - m2 * m2, sign * (m12 / z - m1 * m2));
        let m1 = sign * m1;
        let theta = requested;
        Ok(Evaluation {
            value: a1 * theta[0] * theta[0] + a2 * theta[1] * theta[1] - ln_i,
            gradient: [2.0 * a1 * (theta[0] - m1), 2.0 * a2 * (theta[1] - m2)],
            hessian: [
                [2.0 * a1 - 4.0 * a1 * a1 * v11, -4.0 * a1 * a2 * v12],
                [-4.0 * a1 * a2 * v12, 2.0 * a2 - 4.0 * a2 * a2 * v22],
            ],
            moments: [m1, m2],
        })
    }
}

/// Intensive configurational free energy `beta f` (units of k_B T).
pub fn intensive_free_energy(theta1: f64, theta2: f64, alpha1: f64, alpha2: f64) -> Result<f64> {
    FreeEnergy::new(alpha1, alpha2)?.value(theta1, theta2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Paramagnetic,
    Nematic,
    Ferromagnetic,
}

impl Phase {
    pub fn classify(theta1: f64, theta2: f64) -> Self {
        if theta1.abs() > ZERO_TOL {
            Phase::Ferromagnetic
        } else if theta2.abs() > ZERO_TOL {
            Phase::Nematic
        } else {
            Phase::Paramagnetic
        }
    }

    /// Integer code used in the delimited-text exports.
    pub fn code(self) -> u8 {
        match self {
            Phase::Paramagnetic => 0,
            Phase::Nematic => 1,
            Phase::Ferromagnetic => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Paramagnetic => "paramagnetic",
            Phase::Nematic => "nematic",
            Phase::Ferromagnetic => "ferromagnetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub theta1: f64,
    pub theta2: f64,
    pub value: f64,
    pub phase: Phase,
    pub global: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaSet {
    pub alpha: [f64; 2],
    /// Sorted by free energy, then by theta1 and theta2.
    pub minima: Vec<Minimum>,
    /// Starts on which the local descent did not converge.
    pub failed_starts: usize,
}

impl MinimaSet {
    pub fn global(&self) -> impl Iterator<Item = &Minimum> {
        self.minima.iter().filter(|m| m.global)
    }

    /// A representative global minimum (the one with theta1 >= 0 and the
    /// largest theta2 among ties).
    pub fn global_representative(&self) -> &Minimum {
        self.global()
            .max_by(|a, b| {
                (a.theta1 >= -ZERO_TOL, a.theta2)
                    .partial_cmp(&(b.theta1 >= -ZERO_TOL, b.theta2))
                    .unwrap()
            })
            .expect("at least one minimum")
    }

    pub fn global_phase(&self) -> Phase {
        self.global_representative().phase
    }

    /// Whether a non-global local minimum of the given phase exists.
    pub fn has_metastable(&self, phase: Phase) -> bool {
        let global = self.global_phase();
        self.minima.iter().any(|m| !m.global && m.phase == phase && phase != global)
    }
}

const MAX_ITER: usize = 500;
const STEP_TOL: f64 = 1e-13;
const HESSIAN_TOL: f64 = 1e-9;
// order parameters below this are tested for being zero at a flat minimum
const SNAP_RANGE: f64 = 5e-3;
// curvature below which the symmetric point counts as marginally stable
const FLAT_CURVATURE: f64 = 1e-12;
// rounding floor of the gradient; flat (critical) minima end here
const GRAD_TOL: f64 = 1e-14;

enum Descent {
    Converged(Evaluation),
    Failed,
}

fn clamp_box(x: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(-1.0, 1.0), x[1].clamp(-1.0, 1.0)]
}

/// Damped Newton descent restricted to the coordinates with non-zero pump.
fn descend(fe: &FreeEnergy, start: [f64; 2]) -> Result<Descent> {
    let active = [fe.alpha[0] > 0.0, fe.alpha[1] > 0.0];
    let mut x = start;
    for (n, on) in active.iter().enumerate() {
        if !on {
            x[n] = 0.0;
        }
    }
    let mut e = fe.evaluate(x)?;
    for _ in 0..MAX_ITER {
        let g = [
            if active[0] { e.gradient[0] } else { 0.0 },
            if active[1] { e.gradient[1] } else { 0.0 },
        ];
        if g[0].abs().max(g[1].abs()) <= GRAD_TOL {
            return Ok(Descent::Converged(e));
        }
        let h = e.hessian;
        let dir = match active {
            [true, true] => {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if det > 0.0 && h[0][0] > 0.0 {
                    [-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(h[0][0] * g[1] - h[1][0] * g[0]) / det]
                } else {
                    [-g[0], -g[1]]
                }
            }
            [true, false] if h[0][0] > 0.0 => [-g[0] / h[0][0], 0.0],
            [false, true] if h[1][1] > 0.0 => [0.0, -g[1] / h[1][1]],
            _ => [-g[0], -g[1]],
        };
        if dir[0].hypot(dir[1]) < STEP_TOL {
            return Ok(Descent::Converged(e));
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = clamp_box([x[0] + t * dir[0], x[1] + t * dir[1]]);
            let et = fe.evaluate(trial)?;
            // close to a minimum the decrease drops below rounding; then a
            // shrinking gradient decides
            let flat = (et.value - e.value).abs() <= 1e-14 * (1.0 + e.value.abs());
            let g_new = et.gradient[0].abs().max(et.gradient[1].abs());
            if et.value < e.value || (flat && g_new < g[0].abs().max(g[1].abs())) {
                accepted = Some((trial, et));
                break;
            }
            t *= 0.5;
        }
        let Some((next, en)) = accepted else {
            let gnorm = g[0].hypot(g[1]);
            return Ok(if gnorm < 1e-8 { Descent::Converged(e) } else { Descent::Failed });
        };
        let step = (next[0] - x[0]).hypot(next[1] - x[1]);
        x = next;
        e = en;
        if step < STEP_TOL {
            return Ok(Descent::Converged(e));
        }
    }
    Ok(Descent::Failed)
}

fn is_local_minimum(fe: &FreeEnergy, e: &Evaluation) -> bool {
    let h = e.hessian;
    match [fe.alpha[0] > 0.0, fe.alpha[1] > 0.0] {
        [true, true] => {
            let tr = h[0][0] + h[1][1];
            let disc = ((h[0][0] - h[1][1]).powi(2) + 4.0 * h[0][1] * h[1][0]).max(0.0).sqrt();
            0.5 * (tr - disc) > -HESSIAN_TOL
        }
        [true, false] => h[0][0] > -HESSIAN_TOL,
        [false, true] => h[1][1] > -HESSIAN_TOL,
        [false, false] => true,
    }
}

/// Local minima from a set of starting points; returns physical order
/// parameters `<cos(n u)>` at each minimum.
fn minima_from_starts(fe: &FreeEnergy, starts: &[[f64; 2]]) -> Result<(Vec<Minimum>, usize)> {
    let mut found: Vec<Minimum> = Vec::new();
    let mut failed = 0;
    let push = |found: &mut Vec<Minimum>, e: &Evaluation| -> Result<()> {
        let mut t = e.moments;
        if fe.alpha[0] == 0.0 {
            t[0] = 0.0;
        }
        // at critical points the minimum is flat and the descent stops at a
        // small but finite order parameter; drop it when it carries no energy
        let small = [t[0].abs() < SNAP_RANGE, t[1].abs() < SNAP_RANGE];
        let trials: &[&[usize]] = match small {
            [true, true] => &[&[0, 1], &[0], &[1]],
            [true, false] => &[&[0]],
            [false, true] => &[&[1]],
            [false, false] => &[],
        };
        for zeroed in trials {
            let mut z = t;
            for &n in *zeroed {
                z[n] = 0.0;
            }
            let ez = fe.evaluate(z)?;
            let marginal = zeroed.iter().all(|&n| ez.hessian[n][n] >= -FLAT_CURVATURE);
            if marginal && ez.value - e.value <= 1e-15 * (1.0 + e.value.abs()) {
                t = z;
                break;
            }
        }
        let [t1, t2] = t;
        if !found.iter().any(|m| (m.theta1 - t1).abs() < MERGE_TOL && (m.theta2 - t2).abs() < MERGE_TOL) {
            found.push(Minimum { theta1: t1, theta2: t2, value: e.value, phase: Phase::classify(t1, t2), global: false });
        }
        Ok(())
    };
    for &s in starts {
        match descend(fe, s)? {
            Descent::Converged(e) if is_local_minimum(fe, &e) => push(&mut found, &e)?,
            Descent::Converged(..) => {}
            Descent::Failed => failed += 1,
        }
    }
    // symmetry images theta1 -> -theta1, polished
    let images: Vec<[f64; 2]> = found
        .iter()
        .filter(|m| m.theta1.abs() > ZERO_TOL)
        .map(|m| [-m.theta1, m.theta2])
        .collect();
    for s in images {
        match descend(fe, s)? {
            Descent::Converged(e) if is_local_minimum(fe, &e) => push(&mut found, &e)?,
            Descent::Converged(..) => {}
            Descent::Failed => failed += 1,
        }
    }
    Ok((found, failed))
}

fn finish(alpha: [f64; 2], mut minima: Vec<Minimum>, failed_starts: usize) -> MinimaSet {
    let best = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    for m in &mut minima {
        m.global = m.value - best <= GLOBAL_TOL;
    }
    minima.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.theta1.partial_cmp(&b.theta1).unwrap())
            .then(a.theta2.partial_cmp(&b.theta2).unwrap())
    });
    MinimaSet { alpha, minima, failed_starts }
}

fn seed_grid() -> Vec<[f64; 2]> {
    let k = SEEDS_PER_AXIS;
    let axis: Vec<f64> = (0..k).map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64).collect();
    // the grid is symmetric in theta1, images are added after the descent
    let mut seeds = Vec::with_capacity(k * k);
    for &t1 in axis.iter().filter(|t| **t >= 0.0) {
        for &t2 in &axis {
            // keep interior: |<cos>| < 1 for any finite pump
            seeds.push([t1.clamp(-0.999, 0.999), t2.clamp(-0.999, 0.999)]);
        }
    }
    seeds
}

/// All local minima of `beta f` found by multi-start Newton descent.
pub fn find_minima(alpha1: f64, alpha2: f64) -> Result<MinimaSet> {
    let fe = FreeEnergy::new(alpha1, alpha2)?;
    if alpha1 == 0.0 && alpha2 == 0.0 {
        let e = fe.evaluate([0.0, 0.0])?;
        let m = Minimum { theta1: 0.0, theta2: 0.0, value: e.value, phase: Phase::Paramagnetic, global: true };
        return Ok(MinimaSet { alpha: [alpha1, alpha2], minima: vec![m], failed_starts: 0 });
    }
    let (found, failed) = minima_from_starts(&fe, &seed_grid())?;
    if found.is_empty() {
        return Err(Error::Quadrature(format!("no minimum found at alpha = ({alpha1}, {alpha2})")));
    }
    Ok(finish([alpha1, alpha2], found, failed))
}

/// Predicted `(|Theta_1|, |Theta_2|)` at the global minimum.
pub fn steady_observables(alpha1: f64, alpha2: f64) -> Result<(f64, f64)> {
    let set = find_minima(alpha1, alpha2)?;
    let g = set.global_representative();
    Ok((g.theta1.abs(), g.theta2.abs()))
}

/// Free-energy values on a square grid over `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub alpha: [f64; 2],
    /// `k_B T` in hbar omega_r of the state the landscape describes (informational).
    pub temperature: f64,
    /// Grid coordinates shared by both axes.
    pub axis: Vec<f64>,
    /// `values[i2 * len + i1] = beta f(axis[i1], axis[i2])`.
    pub values: Vec<f64>,
}

impl Landscape {
    pub fn compute(alpha1: f64, alpha2: f64, temperature: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter("landscape needs at least 2 points per axis".into()));
        }
        let fe = FreeEnergy::new(alpha1, alpha2)?;
        let axis: Vec<f64> = (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect();
        let mut values = Vec::with_capacity(points * points);
        for &t2 in &axis {
            for &t1 in &axis {
                values.push(fe.value(t1, t2)?);
            }
        }
        Ok(Self { alpha: [alpha1, alpha2], temperature, axis, values })
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.axis.len() + i1]
    }
}

/// Transition order at a localized phase boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// Grid indices `(i1, i2)` of the two neighbouring cells.
    pub cells: [(usize, usize); 2],
    pub phases: [Phase; 2],
    /// Location of the transition on the segment joining the cells.
    pub alpha: [f64; 2],
    /// Largest change of `(|Theta_1|, |Theta_2|)` across the localized boundary.
    pub jump: f64,
    pub order: TransitionOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub alpha: [f64; 2],
    pub phase: Phase,
    pub theta: [f64; 2],
    /// Non-global paramagnetic local minimum present.
    pub metastable_paramagnetic: bool,
    /// Non-global nematic local minimum present.
    pub metastable_nematic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub axis: Vec<f64>,
    /// `cells[i2 * len + i1]` at `(axis[i1], axis[i2])`.
    pub cells: Vec<PhaseCell>,
    pub boundaries: Vec<Boundary>,
}

impl PhaseDiagram {
    pub fn cell(&self, i1: usize, i2: usize) -> &PhaseCell {
        &self.cells[i2 * self.axis.len() + i1]
    }

    /// Strongest boundary order touching a cell: 0 none, 1 second, 2 first.
    pub fn boundary_code(&self, i1: usize, i2: usize) -> u8 {
        self.boundaries
            .iter()
            .filter(|b| b.cells.contains(&(i1, i2)))
            .map(|b| match b.order {
                TransitionOrder::First => 2,
                TransitionOrder::Second => 1,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Global minimum at `alpha` obtained by polishing candidate locations.
fn polished_global(alpha: [f64; 2], candidates: &[[f64; 2]]) -> Result<MinimaSet> {
    let fe = FreeEnergy::new(alpha[0], alpha[1])?;
    let mut starts: Vec<[f64; 2]> = Vec::new();
    for c in candidates {
        starts.push(*c);
        // nudge off the symmetry lines so that saddles there can be left
        starts.push([c[0] + 1e-3, c[1]]);
        starts.push([c[0], c[1] + 1e-3]);
        starts.push([c[0], c[1] - 1e-3]);
    }
    let (found, failed) = minima_from_starts(&fe, &starts)?;
    if found.is_empty() {
        return find_minima(alpha[0], alpha[1]);
    }
    Ok(finish(alpha, found, failed))
}

fn magnitudes(set: &MinimaSet) -> [f64; 2] {
    let g = set.global_representative();
    [g.theta1.abs(), g.theta2.abs()]
}

fn candidates_of(set: &MinimaSet) -> Vec<[f64; 2]> {
    set.minima.iter().map(|m| [m.theta1, m.theta2]).collect()
}

/// Bisects the segment between two cells with different global minima and
/// measures the order-parameter jump across the localized transition.
fn localize(a: [f64; 2], set_a: &MinimaSet, b: [f64; 2], set_b: &MinimaSet) -> Result<([f64; 2], f64, f64)> {
    let (mut lo, mut hi) = (a, b);
    let mut cand: Vec<[f64; 2]> = candidates_of(set_a);
    for c in candidates_of(set_b) {
        if !cand.iter().any(|x| (x[0] - c[0]).abs() < MERGE_TOL && (x[1] - c[1]).abs() < MERGE_TOL) {
            cand.push(c);
        }
    }
    let mut m_lo = magnitudes(set_a);
    let mut m_hi = magnitudes(set_b);
    let phase_lo = set_a.global_phase();
    let same_phase = set_a.global_phase() == set_b.global_phase();
    let dist = |x: [f64; 2], y: [f64; 2]| (x[0] - y[0]).abs().max((x[1] - y[1]).abs());
    let mut coarse_jump = None;
    while dist(hi, lo) > BOUNDARY_WIDTH {
        if coarse_jump.is_none() && dist(hi, lo) <= PERSISTENCE_WIDTH {
            coarse_jump = Some(dist(m_hi, m_lo));
        }
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let set = polished_global(mid, &cand)?;
        let m = magnitudes(&set);
        let on_lo_side = if same_phase {
            (m[0] - m_lo[0]).abs().max((m[1] - m_lo[1]).abs()) < (m[0] - m_hi[0]).abs().max((m[1] - m_hi[1]).abs())
        } else {
            set.global_phase() == phase_lo
        };
        for c in candidates_of(&set) {
            if !cand.iter().any(|x| (x[0] - c[0]).abs() < MERGE_TOL && (x[1] - c[1]).abs() < MERGE_TOL) {
                cand.push(c);
            }
        }
        if on_lo_side {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
            m_hi = m;
        }
    }
    let jump = dist(m_hi, m_lo);
    Ok(([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])], jump, coarse_jump.unwrap_or(jump)))
}

/// Global-minimum change between neighbouring cells of the same phase that
/// triggers a search for a first-order jump.
const SAME_PHASE_JUMP_SCAN: f64 = 0.1;

/// Phase diagram on an `resolution x resolution` grid over `[0, alpha_max]^2`.
pub fn phase_diagram(alpha_max: f64, resolution: usize) -> Result<PhaseDiagram> {
    if !(alpha_max > 0.0 && alpha_max.is_finite()) || resolution < 2 {
        return Err(Error::InvalidParameter("phase diagram needs alpha_max > 0 and resolution >= 2".into()));
    }
    let axis: Vec<f64> = (0..resolution).map(|i| alpha_max * i as f64 / (resolution - 1) as f64).collect();
    let points: Vec<[f64; 2]> =
        (0..resolution * resolution).map(|k| [axis[k % resolution], axis[k / resolution]]).collect();
    let sets: Vec<MinimaSet> = points.par_iter().map(|a| find_minima(a[0], a[1])).collect::<Result<_>>()?;
    let cells: Vec<PhaseCell> = sets
        .iter()
        .zip(&points)
        .map(|(s, a)| PhaseCell {
            alpha: *a,
            phase: s.global_phase(),
            theta: magnitudes(s),
            metastable_paramagnetic: s.has_metastable(Phase::Paramagnetic),
            metastable_nematic: s.has_metastable(Phase::Nematic),
        })
        .collect();
    let mut pairs = Vec::new();
    for i2 in 0..resolution {
        for i1 in 0..resolution {
            let k = i2 * resolution + i1;
            for (j1, j2) in [(i1 + 1, i2), (i1, i2 + 1)] {
                if j1 >= resolution || j2 >= resolution {
                    continue;
                }
                let l = j2 * resolution + j1;
                let (ca, cb) = (&cells[k], &cells[l]);
                let dtheta = (ca.theta[0] - cb.theta[0]).abs().max((ca.theta[1] - cb.theta[1]).abs());
                if ca.phase != cb.phase || dtheta > SAME_PHASE_JUMP_SCAN {
                    pairs.push(((i1, i2), (j1, j2), k, l));
                }
            }
        }
    }
    let located: Vec<Option<Boundary>> = pairs
        .par_iter()
        .map(|&(ca, cb, k, l)| {
            let (alpha, jump, coarse_jump) = localize(points[k], &sets[k], points[l], &sets[l])?;
            // a continuous transition keeps shrinking its jump with the bracket
            let order = if jump > JUMP_TOL && jump >= PERSISTENCE_RATIO * coarse_jump {
                TransitionOrder::First
            } else {
                TransitionOrder::Second
            };
            if cells[k].phase == cells[l].phase && order == TransitionOrder::Second {
                return Ok(None);
            }
            Ok(Some(Boundary { cells: [ca, cb], phases: [cells[k].phase, cells[l].phase], alpha, jump, order }))
        })
        .collect::<Result<_>>()?;
    Ok(PhaseDiagram { axis, cells, boundaries: located.into_iter().flatten().collect() })
}
