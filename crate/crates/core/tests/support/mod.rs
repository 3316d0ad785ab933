//! Independent oracles shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use cavity_selforg::dynamics::{adiabatic, IntegratorConfig, SnapshotRecorder};
use cavity_selforg::ensemble::{run_ensemble, Model, OutputGrid, RunSpec};
use cavity_selforg::meanfield::FreeEnergy;
use cavity_selforg::model::{diffusion_matrix, retardation_force, sample_adiabatic_noise};
use cavity_selforg::protocol::sample_initial_state;
use cavity_selforg::{EnsembleState, Protocol, ProtocolKind, SystemParams};

pub struct Check {
    pub pass: bool,
    pub detail: String,
}

pub fn random_state(n: usize, p_scale: f64, rng: &mut impl Rng) -> EnsembleState {
    let positions = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    let momenta = (0..n).map(|_| p_scale * rng.sample::<f64, _>(StandardNormal)).collect();
    EnsembleState { time: 0.0, positions, momenta }
}

/// `c_n = n^2 alpha_n k_B T (kappa / -delta) / N`, written out from the model
/// constants rather than taken from the crate.
pub fn oracle_diffusion_coefficient(p: &SystemParams, n: usize) -> f64 {
    let d = p.delta_c;
    let k = p.kappa;
    let temperature = (d * d + k * k) / (-4.0 * d);
    let nf = n as f64;
    nf * nf * p.alpha[n - 1] * temperature * (k / -d) / p.n_atoms as f64
}

/// Covariance of the momentum increments over `dt`: `2 dt sum_n c_n s_n s_n^T`.
pub fn oracle_covariance(state: &EnsembleState, p: &SystemParams, dt: f64) -> Vec<f64> {
    let n = state.len();
    let mut c = vec![0.0; n * n];
    for mode in 1..=2 {
        let cn = oracle_diffusion_coefficient(p, mode);
        let s: Vec<f64> = state.positions.iter().map(|u| (mode as f64 * u).sin()).collect();
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] += 2.0 * dt * cn * s[i] * s[j];
            }
        }
    }
    c
}

fn empirical_covariance(samples: &[Vec<f64>], n: usize) -> Vec<f64> {
    let k = samples.len() as f64;
    let mut c = vec![0.0; n * n];
    for x in samples {
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] += x[i] * x[j];
            }
        }
    }
    c.iter().map(|v| v / k).collect()
}

/// Largest deviation between the empirical and the oracle covariance, in
/// units of the standard error of a Gaussian covariance estimate.
fn covariance_z(emp: &[f64], oracle: &[f64], n: usize, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let o = oracle[i * n + j];
            let se = ((oracle[i * n + i] * oracle[j * n + j] + o * o) / k as f64).sqrt();
            let z = (emp[i * n + j] - o).abs() / (se + 1e-300);
            if se > 1e-12 {
                worst = worst.max(z);
            } else if (emp[i * n + j] - o).abs() > 1e-12 {
                worst = f64::INFINITY;
            }
        }
    }
    worst
}

pub fn noise_covariance_check(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for &(n, alpha, delta) in &[(4usize, [1.3, 0.7], -388.6), (6, [2.0, 2.0], -600.0), (3, [0.0, 1.5], -200.0)] {
        let p = SystemParams::new(n, 388.6, delta, alpha).unwrap();
        let state = random_state(n, 10.0, &mut rng);
        let dt = 1e-3;
        let k = 100_000;
        let samples: Vec<Vec<f64>> = (0..k).map(|_| sample_adiabatic_noise(&state, &p, dt, &mut rng)).collect();
        let emp = empirical_covariance(&samples, n);
        worst = worst.max(covariance_z(&emp, &oracle_covariance(&state, &p, dt), n, k));
    }
    Check { pass: worst < 5.0, detail: format!("max |cov - oracle| = {worst:.2} standard errors") }
}

/// Symmetric square root of a positive semi-definite matrix by cyclic Jacobi rotations.
pub fn symmetric_sqrt(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let lambda: Vec<f64> = (0..n).map(|i| m[i * n + i].max(0.0).sqrt()).collect();
    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            r[i * n + j] = (0..n).map(|k| v[i * n + k] * lambda[k] * v[j * n + k]).sum();
        }
    }
    r
}

/// Kolmogorov-Smirnov statistic of two samples.
fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Rank-1 sampler against `sqrt(2 dt D) xi` with a dense matrix square root:
/// marginal KS tests and z-tests on all second moments.
pub fn sampler_equivalence_check(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 40_000;
    let mut worst_ks: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for n in 2..=6 {
        let p = SystemParams::new(n, 388.6, -388.6, [1.0 + 0.2 * n as f64, 2.5 - 0.3 * n as f64]).unwrap();
        let state = random_state(n, 5.0, &mut rng);
        let dt = 1e-3;
        let mut d = diffusion_matrix(&state, &p, 1).unwrap();
        for (x, y) in d.iter_mut().zip(diffusion_matrix(&state, &p, 2).unwrap()) {
            *x = 2.0 * dt * (*x + y);
        }
        let root = symmetric_sqrt(&d, n);
        let rank1: Vec<Vec<f64>> = (0..k).map(|_| sample_adiabatic_noise(&state, &p, dt, &mut rng)).collect();
        let dense: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n).map(|i| (0..n).map(|j| root[i * n + j] * xi[j]).sum()).collect()
            })
            .collect();
        for i in 0..n {
            let mut a: Vec<f64> = rank1.iter().map(|x| x[i]).collect();
            let mut b: Vec<f64> = dense.iter().map(|x| x[i]).collect();
            worst_ks = worst_ks.max(ks_statistic(&mut a, &mut b) * (k as f64 / 2.0).sqrt());
        }
        let ca = empirical_covariance(&rank1, n);
        let cb = empirical_covariance(&dense, n);
        for i in 0..n {
            for j in 0..n {
                let o = d[i * n + j];
                let se = (2.0 * (d[i * n + i] * d[j * n + j] + o * o) / k as f64).sqrt();
                if se > 1e-12 {
                    worst_z = worst_z.max((ca[i * n + j] - cb[i * n + j]).abs() / se);
                }
            }
        }
    }
    // 1.95 is the 0.1% critical value of the scaled two-sample KS statistic
    Check {
        pass: worst_ks < 1.95 && worst_z < 5.0,
        detail: format!("max scaled KS = {worst_ks:.3}, max second-moment z = {worst_z:.2}"),
    }
}

/// `sum_j F_ret,j p_j <= 0` on `count` random states.
pub fn dissipation_check(seed: u64, count: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let n = rng.random_range(1..=64);
        let alpha = [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)];
        let p = SystemParams::new(n, 388.6, -rng.random_range(10.0..2000.0), alpha).unwrap();
        let state = random_state(n, rng.random_range(0.1..50.0), &mut rng);
        let f = retardation_force(&state, &p);
        let power: f64 = f.iter().zip(&state.momenta).map(|(a, b)| a * b).sum();
        let scale: f64 = f.iter().zip(&state.momenta).map(|(a, b)| (a * b).abs()).sum::<f64>() + 1e-300;
        worst = worst.max(power / scale);
    }
    Check { pass: worst <= 1e-12, detail: format!("max normalized power = {worst:.3e}") }
}

/// Central-difference check of the free-energy gradient at random points.
pub fn gradient_check(seed: u64, count: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let a = [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
        let th = [rng.random_range(-0.99..0.99), rng.random_range(-0.99..0.99)];
        worst = worst.max(gradient_error(a, th));
    }
    Check { pass: worst < 1e-6, detail: format!("max relative error = {worst:.2e}") }
}

pub fn gradient_error(alpha: [f64; 2], theta: [f64; 2]) -> f64 {
    let f = FreeEnergy::new(alpha[0], alpha[1]).unwrap();
    let g = f.evaluate(theta).unwrap().gradient;
    let h = 1e-5;
    let fd = [
        (f.value(theta[0] + h, theta[1]).unwrap() - f.value(theta[0] - h, theta[1]).unwrap()) / (2.0 * h),
        (f.value(theta[0], theta[1] + h).unwrap() - f.value(theta[0], theta[1] - h).unwrap()) / (2.0 * h),
    ];
    let scale = g[0].abs().max(g[1].abs()).max(1e-4);
    (g[0] - fd[0]).abs().max((g[1] - fd[1]).abs()) / scale
}

/// Small ensembles of both models rerun on 1, 2 and 3 workers.
pub fn determinism_check() -> Check {
    let mut identical = true;
    for model in [Model::Adiabatic, Model::Field] {
        let params = SystemParams::with_defaults(16, [2.0, 2.0]);
        let protocol = Protocol::new(ProtocolKind::Sudden { alpha_initial: [1e-3, 1e-3], alpha_final: [2.0, 2.0] }, 3.0).unwrap();
        let mut spec = RunSpec::new(model, params, protocol, IntegratorConfig::with_dt(1e-3), 7);
        spec.base_seed = 42;
        spec.grid = OutputGrid { t_min_kappa: 10.0, points_per_decade: 5, include_initial: true, window: None };
        let reference = run_ensemble(&spec, 1).unwrap();
        for w in [2, 3] {
            let other = run_ensemble(&spec, w).unwrap();
            let bits = |r: &cavity_selforg::ensemble::EnsembleResult| -> Vec<u64> {
                r.records
                    .iter()
                    .flat_map(|rec| rec.samples.iter())
                    .flat_map(|s| [s.time, s.theta[0], s.theta[1], s.sum_p2, s.sum_p4])
                    .map(f64::to_bits)
                    .collect()
            };
            identical &= bits(&reference) == bits(&other) && reference == other;
        }
    }
    Check { pass: identical, detail: format!("bit-identical across 1/2/3 workers: {identical}") }
}

pub const EQ_BINS: usize = 6;

fn bin_of(x: f64) -> usize {
    (((x + 1.0) / 2.0 * EQ_BINS as f64) as usize).min(EQ_BINS - 1)
}

/// (Theta_1, Theta_2) histogram of uniform configurations reweighted by
/// `exp(N (alpha_1 Theta_1^2 + alpha_2 Theta_2^2))`, by rejection sampling.
pub fn direct_equilibrium_histogram(n: usize, alpha: [f64; 2], accepted: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut h = vec![0.0; EQ_BINS * EQ_BINS];
    let mut count = 0;
    let bound = n as f64 * (alpha[0] + alpha[1]);
    while count < accepted {
        let (mut t1, mut t2) = (0.0, 0.0);
        for _ in 0..n {
            let u: f64 = rng.random_range(0.0..TAU);
            t1 += u.cos();
            t2 += (2.0 * u).cos();
        }
        t1 /= n as f64;
        t2 /= n as f64;
        let log_w = n as f64 * (alpha[0] * t1 * t1 + alpha[1] * t2 * t2) - bound;
        if rng.random::<f64>() < log_w.exp() {
            h[bin_of(t1) * EQ_BINS + bin_of(t2)] += 1.0;
            count += 1;
        }
    }
    h.iter().map(|x| x / accepted as f64).collect()
}

/// Time-sampled (Theta_1, Theta_2) histogram of long adiabatic trajectories
/// at constant pump.
pub fn dynamic_equilibrium_histogram(
    n: usize,
    alpha: [f64; 2],
    trajectories: usize,
    samples: usize,
    spacing: f64,
    burn_in: f64,
    seed: u64,
) -> Vec<f64> {
    let params = SystemParams::with_defaults(n, alpha);
    let t_final = burn_in + spacing * samples as f64;
    let protocol = Protocol::new(ProtocolKind::Sudden { alpha_initial: alpha, alpha_final: alpha }, t_final).unwrap();
    let cfg = IntegratorConfig::with_dt(1e-3);
    let grid: Vec<f64> = (1..=samples).map(|i| burn_in + spacing * i as f64).collect();
    let mut h = vec![0.0; EQ_BINS * EQ_BINS];
    for traj in 0..trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(traj as u64);
        let initial = sample_initial_state(&protocol, &params, &mut rng);
        let mut rec = SnapshotRecorder::with_capacity(samples);
        adiabatic::run_trajectory(&initial, &params, &protocol, &cfg, &grid, &mut rec, &mut rng).unwrap();
        for s in &rec.into_record().samples {
            h[bin_of(s.theta[0]) * EQ_BINS + bin_of(s.theta[1])] += 1.0;
        }
    }
    let total = (trajectories * samples) as f64;
    h.iter().map(|x| x / total).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn small_n_equilibrium_check(seed: u64) -> Check {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &(n, alpha) in &[(3usize, [1.5, 1.0]), (4, [0.6, 1.2])] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
        let direct = direct_equilibrium_histogram(n, alpha, 100_000, &mut rng);
        let dynamic = dynamic_equilibrium_histogram(n, alpha, 6, 8000, 1.0, 20.0, seed + n as u64);
        let tv = total_variation(&direct, &dynamic);
        worst = worst.max(tv);
        parts.push(format!("N={n}: TV={tv:.4}"));
    }
    Check { pass: worst < 0.05, detail: parts.join(", ") }
}
