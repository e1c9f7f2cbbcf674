use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dclqr::experiments::{
    self, data_summary, initial_state, run_monte_carlo, run_single_experiment, sample_grid, stream_id, DataMoments,
    ExperimentConfig, GainRecord, NOISE_STREAM,
};
use dclqr::model::{load_vertices, vertices_from_grid, Plant, VertexSystem};
use dclqr::sdp::{assemble_dc_state, assemble_dc_state_input, assemble_robust_lqr, verify_certificate};
use dclqr::solver::dump_sdpa;
use dclqr::simulation::{export_trajectory, simulate_closed_loop, TrajectoryMeta};
use dclqr::synthesis::{MethodRegistry, SynthesisInput, DC_STATE, DC_STATE_INPUT, ROBUST};
use dclqr::Error;

#[derive(Parser)]
#[command(name = "dclqr", version, about = "Robust and data-conforming LQR synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a gain and write it with its certificate check.
    Synthesize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// One of: lqr, robust, dc-state, dc-state-input.
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// Vertex file to use instead of sampling a grid.
        #[arg(long)]
        vertices: Option<PathBuf>,
        /// Grid seed; defaults to the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the assembled program in SDPA sparse format.
        #[arg(long)]
        dump_sdpa: Option<PathBuf>,
    },
    /// Simulate the benchmark plant under a gain from `synthesize`.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        gain: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo stability study over all three controllers.
    Montecarlo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid and closed-loop parameter scatter for one repetition.
    Scatter {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 4,
        Error::Solver { .. }
        | Error::NoConvergence { .. }
        | Error::IllConditioned(_)
        | Error::UnstableClosedLoop(_)
        | Error::Singular(_) => 3,
        _ => 2,
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Error::Parse(format!("cannot read config {}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn synthesize(
    cfg: &ExperimentConfig,
    method: &str,
    out: &Path,
    vertices: Option<&Path>,
    seed: u64,
    dump: Option<&Path>,
) -> Result<(), Error> {
    let registry = MethodRegistry::default();
    registry.get(method)?;
    let plant = cfg.plant();
    let (inclusion, data) = match vertices {
        Some(path) => {
            if cfg.data_moments == DataMoments::Empirical {
                return Err(Error::Invalid(
                    "empirical data moments need a sampled grid, not a vertex file".into(),
                ));
            }
            let inc = load_vertices(path).map_err(|e| match e {
                Error::Io(io) => Error::Parse(format!("cannot read vertices {}: {io}", path.display())),
                other => other,
            })?;
            (inc, cfg.nominal_data()?)
        }
        None => {
            let grid = sample_grid(cfg, seed, 0)?;
            (vertices_from_grid(&plant, &grid)?, data_summary(cfg, &grid)?)
        }
    };
    let weights = cfg.weights()?;
    let noise = cfg.noise()?;
    let (x0, u0) = cfg.origin();
    let (a0, b0) = plant.jacobians(&x0, &u0);
    let nominal = VertexSystem::new(a0, b0);
    let input = SynthesisInput {
        inclusion: &inclusion,
        weights: &weights,
        noise: &noise,
        data: Some(&data),
        nominal: Some(&nominal),
        gamma: cfg.gamma,
        gamma_prime: cfg.gamma_prime,
        solver: cfg.solver,
    };
    if let Some(path) = dump {
        let problem = match method {
            ROBUST => assemble_robust_lqr(&inclusion, &weights, &noise)?,
            DC_STATE => assemble_dc_state(&inclusion, &weights, &noise, &data.sigma, cfg.gamma_prime)?,
            DC_STATE_INPUT => assemble_dc_state_input(&inclusion, &weights, &noise, &data, cfg.gamma)?,
            other => return Err(Error::Invalid(format!("method {other} has no semidefinite program to dump"))),
        };
        fs::write(path, dump_sdpa(&problem)?)?;
    }
    let solution = registry.synthesize(method, &input)?;
    let report = verify_certificate(&solution, &inclusion, &noise)?;
    if !report.passed {
        log::warn!(
            "certificate check failed on {} of {} vertices",
            report.violations().count(),
            report.vertices.len()
        );
    }
    GainRecord::new(&solution, Some(&report)).save(out)
}

fn simulate(cfg: &ExperimentConfig, gain_path: &Path, seed: u64, out: &Path) -> Result<(), Error> {
    let gain = GainRecord::load(gain_path)?.gain_matrix()?;
    let plant = cfg.plant();
    let x0 = initial_state(cfg, seed, 0)?;
    let sim = cfg.sim_config(seed)?.with_stream(stream_id(0, NOISE_STREAM));
    let traj = simulate_closed_loop(&plant, &gain, &x0, &sim)?;
    log::info!(
        "{} steps, {}",
        traj.len(),
        if traj.stable { "stable" } else { "threshold crossed" }
    );
    export_trajectory(&traj, &TrajectoryMeta::new(&traj, &gain, &sim), out)
}

fn montecarlo(mut cfg: ExperimentConfig, reps: Option<usize>, seed: Option<u64>, out: &Path) -> Result<(), Error> {
    if let Some(r) = reps {
        cfg.repetitions = r;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let report = run_monte_carlo(&cfg)?;
    for t in &report.controllers {
        eprintln!(
            "{:<7} {:>6.1}% stable ({} stable, {} unstable, {} failed of {})",
            t.controller.label(),
            t.percentage,
            t.stable_count,
            t.unstable_count,
            t.failed_count,
            t.total
        );
    }
    fs::write(out, report.to_json()?)?;
    Ok(())
}

fn scatter(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<(), Error> {
    let exp = run_single_experiment(cfg, seed)?;
    for run in &exp.runs {
        if let Some(f) = &run.failure {
            log::warn!("{}: {f}", run.controller.label());
        }
    }
    experiments::emit_scatter(&exp, out)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synthesize {
            config,
            method,
            out,
            vertices,
            seed,
            dump_sdpa,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(cfg.master_seed);
            synthesize(&cfg, &method, &out, vertices.as_deref(), seed, dump_sdpa.as_deref())
        }
        Command::Simulate {
            config,
            gain,
            seed,
            out,
        } => simulate(&load_config(config.as_deref())?, &gain, seed, &out),
        Command::Montecarlo {
            config,
            reps,
            seed,
            out,
        } => montecarlo(load_config(config.as_deref())?, reps, seed, &out),
        Command::Scatter { config, seed, out } => scatter(&load_config(config.as_deref())?, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
