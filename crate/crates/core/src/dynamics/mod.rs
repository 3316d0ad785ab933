//! Stochastic integrators for the two dynamical models.

pub mod adiabatic;
pub mod field;
mod integrator;
mod trig;
mod observer;

pub use integrator::{max_trap_frequency, IntegratorConfig, Scheme, StepHalvingReport};
pub use observer::{Observer, Sample, SnapshotRecorder, TrajectoryRecord};

/// Ends of integration sub-intervals that land exactly on each output-grid time.
pub(crate) fn step_sizes(t_from: f64, t_to: f64, dt: f64) -> impl Iterator<Item = f64> {
    let span = t_to - t_from;
    let full = if span > 0.0 { (span / dt).floor() as u64 } else { 0 };
    let rest = span - full as f64 * dt;
    let tail = if rest > 1e-9 * dt { Some(rest) } else { None };
    std::iter::repeat_n(dt, full as usize).chain(tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_sizes_cover_interval() {
        let v: Vec<f64> = step_sizes(0.0, 1.05, 0.1).collect();
        assert_eq!(v.len(), 11);
        assert!((v.iter().sum::<f64>() - 1.05).abs() < 1e-12);
        assert_eq!(step_sizes(2.0, 2.0, 0.1).count(), 0);
        assert_eq!(step_sizes(0.0, 0.3, 0.1).count(), 3);
    }
}
