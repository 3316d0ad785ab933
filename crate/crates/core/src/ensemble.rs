//! Parallel ensembles of independent trajectories.
//!
//! Trajectory `i` draws all its randomness from a ChaCha8 generator keyed by
//! `ChaCha8Rng::seed_from_u64(base_seed)` and positioned on stream `i`
//! (`set_stream(i)`), so each trajectory is a pure function of
//! `(base_seed, i)`. Results are collected in index order and reduced
//! sequentially, which makes every aggregate bit-identical for any worker
//! count.

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{adiabatic, field, IntegratorConfig, SnapshotRecorder, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::observables::{HistogramSeries, ObservableSeries, DEFAULT_BIN_WIDTH, DEFAULT_NEMATIC_THRESHOLD};
use crate::params::SystemParams;
use crate::protocol::{sample_initial_state, Protocol};
use crate::units::time_from_kappa_units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Cavity fields adiabatically eliminated.
    Adiabatic,
    /// Cavity fields integrated as dynamical variables.
    Field,
}

/// Linearly spaced extra output times, used for late-time averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageWindow {
    /// Start of the window in units of 1/kappa; the window ends at the final time.
    pub start_kappa: f64,
    pub points: usize,
}

/// Output times: `points_per_decade` geometric points from `t_min_kappa` to
/// the protocol's final time, optionally `t = 0` and a linear window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputGrid {
    pub t_min_kappa: f64,
    pub points_per_decade: usize,
    #[serde(default)]
    pub include_initial: bool,
    #[serde(default)]
    pub window: Option<AverageWindow>,
}

impl Default for OutputGrid {
    fn default() -> Self {
        Self {
            t_min_kappa: 1.0,
            points_per_decade: 40,
            include_initial: true,
            window: Some(AverageWindow { start_kappa: 1e6, points: 113 }),
        }
    }
}

impl OutputGrid {
    /// Output times in 1/omega_r up to `t_final` (1/omega_r), strictly increasing.
    pub fn times(&self, t_final: f64, kappa: f64) -> Result<Vec<f64>> {
        if !(self.t_min_kappa > 0.0) || self.points_per_decade == 0 {
            return Err(Error::InvalidParameter("output grid needs t_min > 0 and points_per_decade >= 1".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time must be > 0, got {t_final}")));
        }
        let t_min = time_from_kappa_units(self.t_min_kappa, kappa);
        let mut times = Vec::new();
        if self.include_initial {
            times.push(0.0);
        }
        if t_min < t_final {
            let step = 10f64.powf(1.0 / self.points_per_decade as f64);
            let mut k = 0;
            loop {
                let t = t_min * step.powi(k);
                if t >= t_final * (1.0 - 1e-12) {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        times.push(t_final);
        if let Some(w) = self.window {
            let start = time_from_kappa_units(w.start_kappa, kappa);
            if w.points >= 2 && start < t_final {
                for i in 0..w.points {
                    times.push(start + (t_final - start) * i as f64 / (w.points - 1) as f64);
                }
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
        Ok(times)
    }
}

/// Everything needed to run an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub model: Model,
    pub params: SystemParams,
    pub protocol: Protocol,
    pub integrator: IntegratorConfig,
    pub trajectories: usize,
    pub base_seed: u64,
    pub grid: OutputGrid,
    pub nematic_threshold: f64,
    pub bin_width: f64,
}

impl RunSpec {
    pub fn new(model: Model, params: SystemParams, protocol: Protocol, integrator: IntegratorConfig, trajectories: usize) -> Self {
        Self {
            model,
            params,
            protocol,
            integrator,
            trajectories,
            base_seed: 0,
            grid: OutputGrid::default(),
            nematic_threshold: DEFAULT_NEMATIC_THRESHOLD,
            bin_width: DEFAULT_BIN_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.protocol.validate()?;
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("at least one trajectory is required".into()));
        }
        if !(self.nematic_threshold > 0.0 && self.nematic_threshold < 1.0) {
            return Err(Error::InvalidParameter("nematic threshold must lie in (0, 1)".into()));
        }
        crate::observables::bin_count(self.bin_width)?;
        if self.model == Model::Adiabatic {
            self.integrator.check_stability(&self.params, self.protocol.max_alpha())?;
        }
        self.times().map(|_| ())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.grid.times(self.protocol.t_final, self.params.kappa)
    }
}

/// Generator of trajectory `index`.
pub fn trajectory_rng(base_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs trajectory `index` of `spec` on the output grid `times`.
pub fn run_single(spec: &RunSpec, times: &[f64], index: usize) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(spec.base_seed, index);
    let initial = sample_initial_state(&spec.protocol, &spec.params, &mut rng);
    let mut rec = SnapshotRecorder::with_capacity(times.len());
    let outcome = match spec.model {
        Model::Adiabatic => adiabatic::run_trajectory(
            &initial,
            &spec.params,
            &spec.protocol,
            &spec.integrator,
            times,
            &mut rec,
            &mut rng,
        )
        .map(|_| ()),
        Model::Field => {
            let initial = field::sample_vacuum_fields(initial, &mut rng);
            field::run_trajectory(&initial, &spec.params, &spec.protocol, &spec.integrator, times, &mut rec, &mut rng)
                .map(|_| ())
        }
    };
    outcome.map_err(|e| match e {
        Error::NonFinite { time, .. } => Error::NonFinite { trajectory: index, time },
        e => e,
    })?;
    Ok(rec.into_record())
}

/// State of one trajectory at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalSummary {
    pub index: usize,
    pub theta: Option<[f64; 2]>,
    /// Kinetic energy per particle.
    pub kinetic_energy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub series: ObservableSeries,
    pub histogram_theta1: HistogramSeries,
    pub histogram_theta2: HistogramSeries,
    pub terminal: Vec<TerminalSummary>,
    pub failed: usize,
    /// Records of the successful trajectories in index order.
    pub records: Vec<TrajectoryRecord>,
}

impl EnsembleResult {
    pub fn is_partial(&self) -> bool {
        self.failed > 0
    }
}

/// Default worker count: the `SELFORG_WORKERS` environment variable if set,
/// otherwise the number of available cores.
pub fn default_workers() -> usize {
    std::env::var("SELFORG_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `spec.trajectories` trajectories on `workers` threads.
pub fn run_ensemble(spec: &RunSpec, workers: usize) -> Result<EnsembleResult> {
    spec.validate()?;
    let times = spec.times()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<TrajectoryRecord>> = pool.install(|| {
        (0..spec.trajectories)
            .into_par_iter()
            .map(|i| {
                let r = run_single(spec, &times, i);
                debug!("trajectory {i} finished");
                r
            })
            .collect()
    });
    reduce(spec, outcomes)
}

fn reduce(spec: &RunSpec, outcomes: Vec<Result<TrajectoryRecord>>) -> Result<EnsembleResult> {
    let mut terminal = Vec::with_capacity(outcomes.len());
    let mut records = Vec::with_capacity(outcomes.len());
    for (index, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => {
                let last = r.last().copied();
                terminal.push(TerminalSummary {
                    index,
                    theta: last.map(|s| s.theta),
                    kinetic_energy: last.map(|s| s.sum_p2 / r.n_atoms as f64),
                    error: None,
                });
                records.push(r);
            }
            Err(e) => {
                warn!("trajectory {index} failed: {e}");
                terminal.push(TerminalSummary { index, theta: None, kinetic_energy: None, error: Some(e.to_string()) });
            }
        }
    }
    let failed = terminal.len() - records.len();
    if records.is_empty() {
        return Err(Error::AllTrajectoriesFailed(failed));
    }
    Ok(EnsembleResult {
        series: ObservableSeries::from_records(&records, spec.nematic_threshold)?,
        histogram_theta1: HistogramSeries::from_records(&records, 1, spec.bin_width)?,
        histogram_theta2: HistogramSeries::from_records(&records, 2, spec.bin_width)?,
        terminal,
        failed,
        records,
    })
}
