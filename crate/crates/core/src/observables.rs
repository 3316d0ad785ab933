//! Ensemble statistics of order parameters and momenta.

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};

/// Default histogram bin width on [-1, 1] (111 bins).
pub const DEFAULT_BIN_WIDTH: f64 = 2.0 / 111.0;
/// Default |Theta_1| below which a trajectory counts as nematically trapped.
pub const DEFAULT_NEMATIC_THRESHOLD: f64 = 0.5;

/// Number of bins of width `bin_width` covering [-1, 1]; the last bin may
/// extend past 1 when the width does not divide 2.
pub fn bin_count(bin_width: f64) -> Result<usize> {
    if !(bin_width > 0.0 && bin_width <= 2.0) {
        return Err(Error::InvalidParameter(format!("bin width must lie in (0, 2], got {bin_width}")));
    }
    let n = 2.0 / bin_width;
    // absorb rounding in widths such as 2/111
    let r = n.round();
    Ok(if (n - r).abs() < 1e-9 * r { r as usize } else { n.ceil() as usize })
}

pub fn bin_edges(bin_width: f64) -> Result<Vec<f64>> {
    let n = bin_count(bin_width)?;
    Ok((0..=n).map(|k| -1.0 + k as f64 * bin_width).collect())
}

fn bin_index(x: f64, bin_width: f64, bins: usize) -> usize {
    (((x + 1.0) / bin_width).floor().max(0.0) as usize).min(bins - 1)
}

/// Normalized density `counts / (M * bin_width)` of values in [-1, 1].
pub fn histogram_at(values: &[f64], bin_width: f64) -> Result<Vec<f64>> {
    let bins = bin_count(bin_width)?;
    if values.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if let Some(x) = values.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter(format!("order parameter {x} outside [-1, 1]")));
    }
    let mut density = vec![0.0; bins];
    for &x in values {
        density[bin_index(x, bin_width, bins)] += 1.0;
    }
    let norm = 1.0 / (values.len() as f64 * bin_width);
    density.iter_mut().for_each(|d| *d *= norm);
    Ok(density)
}

/// Fraction of values below zero.
pub fn prob_theta2_negative(theta2: &[f64]) -> Result<f64> {
    if theta2.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(theta2.iter().filter(|t| **t < 0.0).count() as f64 / theta2.len() as f64)
}

/// `<p^4> / <p^2>^2` of the pooled momenta.
pub fn kurtosis(momenta: &[f64]) -> Result<f64> {
    let mut m = MomentSums::default();
    for p in momenta {
        let q = p * p;
        m.push(q, q * q, 1);
    }
    m.kurtosis()
}

/// Pooled momentum moments; partial sums merge exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentSums {
    pub sum_p2: f64,
    pub sum_p4: f64,
    pub count: usize,
}

impl MomentSums {
    pub fn push(&mut self, p2: f64, p4: f64, particles: usize) {
        self.sum_p2 += p2;
        self.sum_p4 += p4;
        self.count += particles;
    }

    pub fn merge(&mut self, other: &Self) {
        self.push(other.sum_p2, other.sum_p4, other.count);
    }

    pub fn mean_p2(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(self.sum_p2 / self.count as f64)
    }

    pub fn kurtosis(&self) -> Result<f64> {
        let m2 = self.mean_p2()?;
        if !(m2 > 0.0) {
            return Err(Error::DegenerateMomenta);
        }
        Ok(self.sum_p4 / self.count as f64 / (m2 * m2))
    }
}

/// `<|Theta_n|>` and `dTheta_n = sqrt(<Theta_n^2> - <|Theta_n|>^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub mean_abs: [f64; 2],
    pub fluctuation: [f64; 2],
}

pub fn order_stats(thetas: &[[f64; 2]]) -> Result<OrderStats> {
    if thetas.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let m = thetas.len() as f64;
    let mut mean_abs = [0.0; 2];
    let mut fluctuation = [0.0; 2];
    for n in 0..2 {
        let a = thetas.iter().map(|t| t[n].abs()).sum::<f64>() / m;
        let sq = thetas.iter().map(|t| t[n] * t[n]).sum::<f64>() / m;
        mean_abs[n] = a;
        fluctuation[n] = (sq - a * a).max(0.0).sqrt();
    }
    Ok(OrderStats { mean_abs, fluctuation })
}

/// Fraction of trajectories with `|Theta_1| < threshold`.
pub fn nematic_fraction(theta1: &[f64], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("nematic threshold must lie in (0, 1), got {threshold}")));
    }
    if theta1.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(theta1.iter().filter(|t| t.abs() < threshold).count() as f64 / theta1.len() as f64)
}

/// Per-time normalized histograms of one order parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub bin_width: f64,
    pub edges: Vec<f64>,
    pub times: Vec<f64>,
    /// `densities[k][b]`: density in bin `b` at `times[k]`.
    pub densities: Vec<Vec<f64>>,
}

impl HistogramSeries {
    /// Histograms of `Theta_mode` (`mode` 1 or 2) across records sharing one time grid.
    pub fn from_records(records: &[TrajectoryRecord], mode: usize, bin_width: f64) -> Result<Self> {
        if !(1..=2).contains(&mode) {
            return Err(Error::InvalidMode(mode));
        }
        let times = common_times(records)?;
        let mut values = vec![0.0; records.len()];
        let mut densities = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            for (v, r) in values.iter_mut().zip(records) {
                *v = r.samples[k].theta[mode - 1].clamp(-1.0, 1.0);
            }
            densities.push(histogram_at(&values, bin_width)?);
        }
        Ok(Self { bin_width, edges: bin_edges(bin_width)?, times, densities })
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn time_averaged(&self, t_start: f64, t_end: f64) -> Result<Vec<f64>> {
        time_averaged_histogram(self, t_start, t_end)
    }
}

/// Mean of the slices with `t_start <= t <= t_end`.
pub fn time_averaged_histogram(series: &HistogramSeries, t_start: f64, t_end: f64) -> Result<Vec<f64>> {
    let slices: Vec<&Vec<f64>> = series
        .times
        .iter()
        .zip(&series.densities)
        .filter(|(t, _)| **t >= t_start && **t <= t_end)
        .map(|(_, d)| d)
        .collect();
    if slices.is_empty() {
        return Err(Error::EmptyWindow(t_start, t_end));
    }
    let mut avg = vec![0.0; slices[0].len()];
    for s in &slices {
        for (a, d) in avg.iter_mut().zip(s.iter()) {
            *a += d;
        }
    }
    let inv = 1.0 / slices.len() as f64;
    avg.iter_mut().for_each(|a| *a *= inv);
    Ok(avg)
}

/// Ensemble statistics at every output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    /// Times in 1/omega_r.
    pub times: Vec<f64>,
    pub mean_abs_theta: Vec<[f64; 2]>,
    pub dtheta: Vec<[f64; 2]>,
    /// Signed ensemble mean of Theta_1 and its standard error.
    pub mean_theta1: Vec<f64>,
    pub stderr_theta1: Vec<f64>,
    /// Kinetic energy per particle, `<p^2>` in hbar omega_r.
    pub kinetic_energy: Vec<f64>,
    pub kurtosis: Vec<f64>,
    pub p_theta2_negative: Vec<f64>,
    pub nematic_fraction: Vec<f64>,
    pub nematic_threshold: f64,
    pub trajectories: usize,
}

fn common_times(records: &[TrajectoryRecord]) -> Result<Vec<f64>> {
    let first = records.first().ok_or(Error::EmptyEnsemble)?;
    let times: Vec<f64> = first.samples.iter().map(|s| s.time).collect();
    for r in records {
        if r.samples.len() != times.len() || r.samples.iter().zip(&times).any(|(s, t)| s.time != *t) {
            return Err(Error::InvalidParameter("trajectory records have different time grids".into()));
        }
    }
    Ok(times)
}

impl ObservableSeries {
    /// Reduces records in the given order (the result is bit-reproducible
    /// for a fixed order).
    pub fn from_records(records: &[TrajectoryRecord], nematic_threshold: f64) -> Result<Self> {
        let times = common_times(records)?;
        let m = records.len();
        let len = times.len();
        let mut out = Self {
            times,
            mean_abs_theta: Vec::with_capacity(len),
            dtheta: Vec::with_capacity(len),
            mean_theta1: Vec::with_capacity(len),
            stderr_theta1: Vec::with_capacity(len),
            kinetic_energy: Vec::with_capacity(len),
            kurtosis: Vec::with_capacity(len),
            p_theta2_negative: Vec::with_capacity(len),
            nematic_fraction: Vec::with_capacity(len),
            nematic_threshold,
            trajectories: m,
        };
        let mut thetas = vec![[0.0; 2]; m];
        let mut theta1 = vec![0.0; m];
        let mut theta2 = vec![0.0; m];
        for k in 0..len {
            let mut moments = MomentSums::default();
            for (j, r) in records.iter().enumerate() {
                let s = &r.samples[k];
                thetas[j] = s.theta;
                theta1[j] = s.theta[0];
                theta2[j] = s.theta[1];
                moments.push(s.sum_p2, s.sum_p4, r.n_atoms);
            }
            let stats = order_stats(&thetas)?;
            let mean = theta1.iter().sum::<f64>() / m as f64;
            let var = if m > 1 {
                theta1.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (m - 1) as f64
            } else {
                0.0
            };
            out.mean_abs_theta.push(stats.mean_abs);
            out.dtheta.push(stats.fluctuation);
            out.mean_theta1.push(mean);
            out.stderr_theta1.push((var / m as f64).sqrt());
            out.kinetic_energy.push(moments.mean_p2()?);
            // a frozen ensemble has no defined kurtosis; report NaN rather than fail the run
            out.kurtosis.push(moments.kurtosis().unwrap_or(f64::NAN));
            out.p_theta2_negative.push(prob_theta2_negative(&theta2)?);
            out.nematic_fraction.push(nematic_fraction(&theta1, nematic_threshold)?);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean kinetic energy per particle over grid times in `[t_start, t_end]`.
    pub fn time_averaged_kinetic_energy(&self, t_start: f64, t_end: f64) -> Result<f64> {
        let v: Vec<f64> = self
            .times
            .iter()
            .zip(&self.kinetic_energy)
            .filter(|(t, _)| **t >= t_start && **t <= t_end)
            .map(|(_, e)| *e)
            .collect();
        if v.is_empty() {
            return Err(Error::EmptyWindow(t_start, t_end));
        }
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// First grid time at which `<|Theta_mode|>` reaches `level`.
    pub fn first_crossing(&self, mode: usize, level: f64) -> Result<Option<f64>> {
        if !(1..=2).contains(&mode) {
            return Err(Error::InvalidMode(mode));
        }
        Ok(self.times.iter().zip(&self.mean_abs_theta).find(|(_, m)| m[mode - 1] >= level).map(|(t, _)| *t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Sample;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn default_binning_has_111_bins() {
        assert_eq!(bin_count(DEFAULT_BIN_WIDTH).unwrap(), 111);
        let e = bin_edges(DEFAULT_BIN_WIDTH).unwrap();
        assert_relative_eq!(e[111], 1.0, epsilon = 1e-12);
        assert_eq!(bin_count(0.3).unwrap(), 7);
        assert!(bin_count(0.0).is_err());
    }

    #[test]
    fn identical_values_fill_one_bin() {
        let d = histogram_at(&[0.3; 17], 0.1).unwrap();
        assert_eq!(d.iter().filter(|x| **x > 0.0).count(), 1);
        assert_relative_eq!(d.iter().cloned().fold(0.0, f64::max), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_values_give_flat_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..200_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = histogram_at(&v, 0.2).unwrap();
        for x in &d {
            assert!((x - 0.5).abs() < 0.02, "{x}");
        }
        assert_relative_eq!(d.iter().sum::<f64>() * 0.2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn edge_values_are_binned() {
        let d = histogram_at(&[-1.0, 1.0], DEFAULT_BIN_WIDTH).unwrap();
        assert!(d[0] > 0.0 && d[110] > 0.0);
        assert!(histogram_at(&[1.5], 0.1).is_err());
        assert!(matches!(histogram_at(&[], 0.1), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn kurtosis_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g: Vec<f64> = (0..400_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        assert!((kurtosis(&g).unwrap() - 3.0).abs() < 0.05);
        let u: Vec<f64> = (0..=20_000).map(|k| -2.0 + 4.0 * k as f64 / 20_000.0).collect();
        assert_relative_eq!(kurtosis(&u).unwrap(), 9.0 / 5.0, max_relative = 1e-3);
        assert_relative_eq!(kurtosis(&[1.5, -1.5, 1.5]).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(kurtosis(&[0.0, 0.0]), Err(Error::DegenerateMomenta)));
    }

    #[test]
    fn order_stats_examples() {
        let s = order_stats(&[[0.9, 0.2], [-0.9, 0.2]]).unwrap();
        assert_relative_eq!(s.mean_abs[0], 0.9, epsilon = 1e-15);
        assert!(s.fluctuation[0] < 1e-7);
        let s = order_stats(&[[0.4, -0.3]]).unwrap();
        assert_eq!(s.mean_abs, [0.4, 0.3]);
        assert!(s.fluctuation.iter().all(|f| *f >= 0.0 && *f < 1e-7));
    }

    #[test]
    fn fractions() {
        assert_eq!(prob_theta2_negative(&[0.1, -0.2, 0.3, -0.4]).unwrap(), 0.5);
        assert_eq!(prob_theta2_negative(&[0.8; 5]).unwrap(), 0.0);
        assert_eq!(nematic_fraction(&[0.97, -0.97], 0.5).unwrap(), 0.0);
        assert_eq!(nematic_fraction(&[0.01, -0.02], 0.5).unwrap(), 1.0);
        assert!(nematic_fraction(&[0.1], 1.0).is_err());
    }

    fn record(thetas: &[[f64; 2]], p2: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            n_atoms: 4,
            samples: thetas
                .iter()
                .enumerate()
                .map(|(k, t)| Sample { time: k as f64, theta: *t, sum_p2: p2, sum_p4: p2 * p2 })
                .collect(),
        }
    }

    #[test]
    fn series_from_records() {
        let a = record(&[[0.1, -0.1], [0.9, 0.8]], 8.0);
        let b = record(&[[-0.1, 0.1], [-0.9, 0.8]], 4.0);
        let s = ObservableSeries::from_records(&[a.clone(), b.clone()], 0.5).unwrap();
        assert_eq!(s.len(), 2);
        assert_relative_eq!(s.kinetic_energy[0], 12.0 / 8.0, epsilon = 1e-15);
        assert_eq!(s.p_theta2_negative, vec![0.5, 0.0]);
        assert_eq!(s.nematic_fraction, vec![1.0, 0.0]);
        assert_eq!(s.mean_theta1[1], 0.0);
        assert_eq!(s.first_crossing(1, 0.5).unwrap(), Some(1.0));
        let h = HistogramSeries::from_records(&[a, b], 1, DEFAULT_BIN_WIDTH).unwrap();
        for d in &h.densities {
            assert_relative_eq!(d.iter().sum::<f64>() * h.bin_width, 1.0, epsilon = 1e-12);
        }
        let short = TrajectoryRecord { n_atoms: 4, samples: vec![] };
        assert!(ObservableSeries::from_records(&[record(&[[0.0, 0.0]], 1.0), short], 0.5).is_err());
    }

    #[test]
    fn time_average_of_identical_slices() {
        let d = histogram_at(&[0.2, 0.4, -0.5], 0.25).unwrap();
        let h = HistogramSeries {
            bin_width: 0.25,
            edges: bin_edges(0.25).unwrap(),
            times: vec![1.0, 2.0, 3.0],
            densities: vec![d.clone(), d.clone(), d.clone()],
        };
        let avg = time_averaged_histogram(&h, 1.5, 3.0).unwrap();
        for (a, b) in avg.iter().zip(&d) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        assert!(matches!(time_averaged_histogram(&h, 4.0, 5.0), Err(Error::EmptyWindow(..))));
    }
}
