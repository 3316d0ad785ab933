use serde::{Deserialize, Serialize};

use crate::model::ModeSums;
use crate::params::SystemParams;
use crate::state::EnsembleState;

/// Callback invoked at each output-grid time.
pub trait Observer {
    fn observe(&mut self, state: &EnsembleState, params: &SystemParams, sums: &ModeSums);
}

/// Per-trajectory snapshot at one output time. Momentum moments are summed
/// over particles so they pool exactly across trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub theta: [f64; 2],
    pub sum_p2: f64,
    pub sum_p4: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n_atoms: usize,
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Records order parameters and momentum moments.
#[derive(Debug, Default)]
pub struct SnapshotRecorder {
    pub record: TrajectoryRecord,
}

impl SnapshotRecorder {
    pub fn with_capacity(n: usize) -> Self {
        Self { record: TrajectoryRecord { n_atoms: 0, samples: Vec::with_capacity(n) } }
    }

    pub fn into_record(self) -> TrajectoryRecord {
        self.record
    }
}

impl Observer for SnapshotRecorder {
    fn observe(&mut self, state: &EnsembleState, _params: &SystemParams, sums: &ModeSums) {
        let (mut p2, mut p4) = (0.0, 0.0);
        for p in &state.momenta {
            let q = p * p;
            p2 += q;
            p4 += q * q;
        }
        self.record.n_atoms = state.len();
        self.record.samples.push(Sample { time: state.time, theta: sums.theta, sum_p2: p2, sum_p4: p4 });
    }
}

impl<F> Observer for F
where
    F: FnMut(&EnsembleState, &SystemParams, &ModeSums),
{
    fn observe(&mut self, state: &EnsembleState, params: &SystemParams, sums: &ModeSums) {
        self(state, params, sums)
    }
}
