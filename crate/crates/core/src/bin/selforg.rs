use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cavity_selforg::config::RunConfig;
use cavity_selforg::ensemble::{default_workers, run_ensemble, EnsembleResult, Model, RunSpec};
use cavity_selforg::meanfield::{find_minima, phase_diagram, Landscape};
use cavity_selforg::output;
use cavity_selforg::params::{corrected_temperature, minimal_kinetic_energy};
use cavity_selforg::units::time_from_kappa_units;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "selforg", version, about = "Self-organization of atoms in a two-mode cavity")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory ensemble described by a TOML configuration.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: SELFORG_WORKERS or the number of cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the mean-field phase diagram on [0, amax]^2.
    PhaseDiagram {
        #[arg(long, default_value_t = 4.0)]
        amax: f64,
        #[arg(long, default_value_t = 81)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Free-energy landscape and its minima at one pump point.
    FreeEnergy {
        #[arg(long)]
        alpha1: f64,
        #[arg(long)]
        alpha2: f64,
        /// Landscape points per axis on [-1, 1].
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the adiabatic and the field model on the same configuration.
    Compare {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error carrying the process exit code.
struct Failure(u8, anyhow::Error);

fn config_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure(EXIT_CONFIG, e.into())
}

fn runtime_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure(EXIT_RUNTIME, e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Simulate { config, seed, workers, out } => simulate(&config, seed, workers, out),
        Command::PhaseDiagram { amax, res, out } => run_phase_diagram(amax, res, &out),
        Command::FreeEnergy { alpha1, alpha2, grid, out } => free_energy(alpha1, alpha2, grid, out),
        Command::Compare { config, seed, workers, out } => compare(&config, seed, workers, out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

struct Prepared {
    config: RunConfig,
    config_text: String,
    spec: RunSpec,
    out: PathBuf,
}

fn prepare(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> std::result::Result<Prepared, Failure> {
    let config = RunConfig::load(path).map_err(config_failure)?;
    let config_text = std::fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(config_failure)?;
    let mut spec = config.to_run_spec().map_err(config_failure)?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let out = out.or_else(|| config.output_dir()).unwrap_or_else(|| PathBuf::from("."));
    Ok(Prepared { config, config_text, spec, out })
}

fn workers_for(cli: Option<usize>, config: &RunConfig) -> usize {
    cli.or(config.ensemble.workers).unwrap_or_else(default_workers).max(1)
}

fn write_run(dir: &Path, p: &Prepared, r: &EnsembleResult, workers: usize, wall: f64) -> Result<()> {
    let kappa = p.spec.params.kappa;
    output::write_text(&dir.join("series.csv"), &output::series_csv(&r.series, kappa))?;
    output::write_text(&dir.join("hist_theta1.csv"), &output::histogram_csv(&r.histogram_theta1, kappa))?;
    output::write_text(&dir.join("hist_theta2.csv"), &output::histogram_csv(&r.histogram_theta2, kappa))?;
    output::write_text(&dir.join("terminal.csv"), &output::terminal_csv(&r.terminal))?;
    let info = json!({
        "config": p.config_text,
        "resolved": p.spec,
        "seeds": {
            "base_seed": p.spec.base_seed,
            "trajectory_stream": "ChaCha8Rng::seed_from_u64(base_seed) with set_stream(trajectory index)",
        },
        "units": {
            "time": "t_kappa = kappa * t_omega_r",
            "kappa_over_omega_r": kappa,
            "ekin0_hbar_omega_r": minimal_kinetic_energy(kappa),
        },
        "trajectories": p.spec.trajectories,
        "failed": r.failed,
        "workers": workers,
        "wall_time_s": wall,
        "versions": {
            "selforg": env!("CARGO_PKG_VERSION"),
        },
    });
    output::write_json(&dir.join("run.json"), &info)?;
    Ok(())
}

fn simulate(path: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) -> std::result::Result<u8, Failure> {
    let p = prepare(path, seed, out)?;
    let workers = workers_for(workers, &p.config);
    log::info!("running {} trajectories on {workers} workers, dt = {}", p.spec.trajectories, p.spec.integrator.dt);
    let start = Instant::now();
    let r = run_ensemble(&p.spec, workers).map_err(runtime_failure)?;
    write_run(&p.out, &p, &r, workers, start.elapsed().as_secs_f64()).map_err(runtime_failure)?;
    if r.is_partial() {
        eprintln!("warning: {} of {} trajectories failed", r.failed, p.spec.trajectories);
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn run_phase_diagram(amax: f64, res: usize, out: &Path) -> std::result::Result<u8, Failure> {
    let d = phase_diagram(amax, res).map_err(config_failure)?;
    output::write_phase_diagram(out, &d).map_err(runtime_failure)?;
    Ok(0)
}

fn free_energy(alpha1: f64, alpha2: f64, grid: usize, out: Option<PathBuf>) -> std::result::Result<u8, Failure> {
    let minima = find_minima(alpha1, alpha2).map_err(config_failure)?;
    let table = output::minima_csv(&minima);
    match out {
        Some(dir) => {
            let l = Landscape::compute(alpha1, alpha2, 1.0, grid).map_err(config_failure)?;
            output::write_text(&dir.join("landscape.csv"), &output::landscape_csv(&l)).map_err(runtime_failure)?;
            output::write_text(&dir.join("minima.csv"), &table).map_err(runtime_failure)?;
        }
        None => print!("{table}"),
    }
    Ok(0)
}

fn compare(path: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) -> std::result::Result<u8, Failure> {
    let p = prepare(path, seed, out)?;
    let workers = workers_for(workers, &p.config);
    let kappa = p.spec.params.kappa;
    let mut results = Vec::new();
    let mut partial = false;
    for model in [Model::Adiabatic, Model::Field] {
        let mut spec = p.spec.clone();
        spec.model = model;
        let start = Instant::now();
        let r = run_ensemble(&spec, workers).map_err(runtime_failure)?;
        partial |= r.is_partial();
        let name = match model {
            Model::Adiabatic => "adiabatic",
            Model::Field => "field",
        };
        let sub = Prepared { config: p.config.clone(), config_text: p.config_text.clone(), spec, out: p.out.join(name) };
        write_run(&sub.out, &sub, &r, workers, start.elapsed().as_secs_f64()).map_err(runtime_failure)?;
        results.push(r);
    }
    let t_end = p.spec.protocol.t_final;
    // the late-time window if the run reaches it, otherwise the second half of the run
    let window_start = p
        .spec
        .grid
        .window
        .map(|w| time_from_kappa_units(w.start_kappa, kappa))
        .filter(|&t| t < t_end)
        .unwrap_or(0.5 * t_end);
    let ke = |r: &EnsembleResult| r.series.time_averaged_kinetic_energy(window_start, t_end);
    let ke_adiabatic = ke(&results[0]).map_err(runtime_failure)?;
    let ke_field = ke(&results[1]).map_err(runtime_failure)?;
    let alpha = p.spec.protocol.final_alpha();
    let params = p.spec.params.with_alpha(alpha);
    let minimum = *find_minima(alpha[0], alpha[1]).map_err(runtime_failure)?.global_representative();
    let predicted = corrected_temperature(&params, minimum.theta1.abs(), minimum.theta2)
        .map(|t| t / params.temperature())
        .ok();
    let summary = json!({
        "average_window_kappa": [window_start * kappa, t_end * kappa],
        "ekin_adiabatic_over_ekin0": ke_adiabatic / minimal_kinetic_energy(kappa),
        "ekin_field_over_ekin0": ke_field / minimal_kinetic_energy(kappa),
        "ekin_ratio_field_over_adiabatic": ke_field / ke_adiabatic,
        "predicted_temperature_ratio": predicted,
        "global_minimum": [minimum.theta1.abs(), minimum.theta2],
    });
    output::write_json(&p.out.join("compare.json"), &summary).map_err(runtime_failure)?;
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    Ok(if partial { EXIT_PARTIAL } else { 0 })
}
