//! The benchmark pipeline: grid sampling, synthesis of the three
//! controllers, closed-loop simulation, scatter data and the Monte Carlo
//! stability study.
//!
//! Randomness for repetition `r` under master seed `s` comes from ChaCha20
//! keyed by `s` on stream `4r + p`, where `p` is [`GRID_STREAM`],
//! [`INITIAL_STREAM`] or [`NOISE_STREAM`]. All controllers of a repetition
//! see the same grid, initial state and noise sequence.

mod config;
mod gain_file;

pub use config::{DataMoments, ExperimentConfig, InitialState};
pub use gain_file::{CertificateRecord, GainRecord, ResidualRecord, VertexRecord};

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::model::{vertices_from_grid, DifferenceInclusion, GridPoint, Plant, VertexSystem};
use crate::sdp::ControllerSolution;
use crate::simulation::{parameter_trajectory, simulate_closed_loop, GaussianStream, Trajectory};
use crate::solver::SolveStatus;
use crate::statistics::{summarize, DataSummary};
use crate::synthesis::{MethodRegistry, SynthesisInput, LQR, ROBUST};

pub const GRID_STREAM: u64 = 0;
pub const INITIAL_STREAM: u64 = 1;
pub const NOISE_STREAM: u64 = 2;
const STREAMS_PER_REPETITION: u64 = 4;

pub fn stream_id(repetition: u64, purpose: u64) -> u64 {
    repetition * STREAMS_PER_REPETITION + purpose
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Controller {
    /// Riccati LQR about the origin linearization.
    Lqr,
    Robust,
    /// Data-conforming robust LQR.
    Dc,
}

impl Controller {
    pub const ALL: [Controller; 3] = [Controller::Lqr, Controller::Robust, Controller::Dc];

    pub fn label(self) -> &'static str {
        match self {
            Controller::Lqr => "lqr",
            Controller::Robust => "robust",
            Controller::Dc => "dc",
        }
    }

    fn method(self, cfg: &ExperimentConfig) -> &str {
        match self {
            Controller::Lqr => LQR,
            Controller::Robust => ROBUST,
            Controller::Dc => &cfg.dc_method,
        }
    }
}

/// One controller slot of a repetition.
#[derive(Debug, Clone)]
pub struct ControllerRun {
    pub controller: Controller,
    pub method: String,
    pub solution: Option<ControllerSolution>,
    pub status: Option<SolveStatus>,
    /// Why synthesis produced no gain.
    pub failure: Option<String>,
    pub trajectory: Option<Trajectory>,
    pub parameters: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl ControllerRun {
    pub fn gain(&self) -> Option<&DMatrix<f64>> {
        self.solution.as_ref().map(|s| &s.gain)
    }

    pub fn failed(&self) -> bool {
        self.solution.is_none()
    }

    /// A failed slot is never stable.
    pub fn stable(&self) -> bool {
        self.trajectory.as_ref().is_some_and(|t| t.stable)
    }
}

#[derive(Debug, Clone)]
pub struct SingleExperiment {
    pub seed: u64,
    pub repetition: u64,
    pub grid: Vec<GridPoint>,
    pub inclusion: DifferenceInclusion,
    pub data: DataSummary,
    pub x0: DVector<f64>,
    pub runs: Vec<ControllerRun>,
}

impl SingleExperiment {
    pub fn run(&self, controller: Controller) -> Option<&ControllerRun> {
        self.runs.iter().find(|r| r.controller == controller)
    }
}

/// Draws `(x̄ⁱ, ūⁱ) ~ N(0, [[Σ_data, H_data], [·ᵀ, M_data]])`.
pub fn sample_grid(cfg: &ExperimentConfig, seed: u64, repetition: u64) -> Result<Vec<GridPoint>> {
    let cov = cfg.grid_covariance()?;
    let rx = cfg.sigma_data()?.nrows();
    let root = psd_sqrt(&cov);
    let mut rng = GaussianStream::new(seed, stream_id(repetition, GRID_STREAM));
    Ok((0..cfg.grid_count)
        .map(|_| {
            let z = rng.correlated(&root);
            GridPoint {
                state: z.rows(0, rx).into_owned(),
                input: z.rows(rx, z.len() - rx).into_owned(),
            }
        })
        .collect())
}

pub fn data_summary(cfg: &ExperimentConfig, grid: &[GridPoint]) -> Result<DataSummary> {
    match cfg.data_moments {
        DataMoments::Nominal => cfg.nominal_data(),
        DataMoments::Empirical => {
            let xs: Vec<_> = grid.iter().map(|p| p.state.clone()).collect();
            let us: Vec<_> = grid.iter().map(|p| p.input.clone()).collect();
            summarize(&xs, &us)
        }
    }
}

pub fn initial_state(cfg: &ExperimentConfig, seed: u64, repetition: u64) -> Result<DVector<f64>> {
    let root = psd_sqrt(&cfg.initial_covariance()?);
    Ok(GaussianStream::new(seed, stream_id(repetition, INITIAL_STREAM)).correlated(&root))
}

/// Runs repetition 0 under `seed`.
pub fn run_single_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<SingleExperiment> {
    run_repetition(cfg, &MethodRegistry::default(), seed, 0)
}

/// Samples the grid, synthesizes every controller and simulates each one on
/// the same noise. A synthesis failure only disables its own slot.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    registry: &MethodRegistry,
    seed: u64,
    repetition: u64,
) -> Result<SingleExperiment> {
    cfg.validate()?;
    let plant = cfg.plant();
    let grid = sample_grid(cfg, seed, repetition)?;
    let inclusion = vertices_from_grid(&plant, &grid)?;
    let data = data_summary(cfg, &grid)?;
    let x0 = initial_state(cfg, seed, repetition)?;
    let weights = cfg.weights()?;
    let noise = cfg.noise()?;
    let (x_origin, u_origin) = cfg.origin();
    let (a0, b0) = plant.jacobians(&x_origin, &u_origin);
    let nominal = VertexSystem::new(a0, b0);
    let sim = cfg.sim_config(seed)?.with_stream(stream_id(repetition, NOISE_STREAM));

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

    let mut runs = Vec::with_capacity(Controller::ALL.len());
    for controller in Controller::ALL {
        let method = controller.method(cfg).to_string();
        let mut run = ControllerRun {
            controller,
            method: method.clone(),
            solution: None,
            status: None,
            failure: None,
            trajectory: None,
            parameters: Vec::new(),
        };
        match registry.synthesize(&method, &input) {
            Ok(solution) => {
                let traj = simulate_closed_loop(&plant, &solution.gain, &x0, &sim)?;
                run.parameters = parameter_trajectory(&plant, &traj);
                run.status = Some(solution.status);
                run.trajectory = Some(traj);
                run.solution = Some(solution);
            }
            Err(e) => {
                log::debug!(
                    "seed {seed} repetition {repetition}: {} synthesis failed: {e}",
                    controller.label()
                );
                if let Error::Solver { status, .. } = &e {
                    run.status = Some(*status);
                }
                run.failure = Some(e.to_string());
            }
        }
        runs.push(run);
    }

    Ok(SingleExperiment {
        seed,
        repetition,
        grid,
        inclusion,
        data,
        x0,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerTally {
    pub controller: Controller,
    pub method: String,
    pub stable_count: usize,
    /// Simulated and unstable; excludes failed syntheses.
    pub unstable_count: usize,
    pub failed_count: usize,
    pub total: usize,
    /// `100·stable/total`, failed syntheses counted as unstable.
    pub percentage: f64,
    /// `100·stable/(total − failed)`; absent when every synthesis failed.
    pub percentage_excluding_failures: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub controller: Controller,
    pub status: Option<SolveStatus>,
    pub stable: bool,
    pub failed: bool,
    pub first_violation: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub repetition: u64,
    pub slots: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub master_seed: u64,
    pub repetitions: usize,
    pub controllers: Vec<ControllerTally>,
    pub runs: Vec<RepetitionRecord>,
    pub config: ExperimentConfig,
}

impl MonteCarloReport {
    pub fn tally(&self, controller: Controller) -> Option<&ControllerTally> {
        self.controllers.iter().find(|t| t.controller == controller)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn repetition_record(cfg: &ExperimentConfig, registry: &MethodRegistry, repetition: u64) -> RepetitionRecord {
    let slots = match run_repetition(cfg, registry, cfg.master_seed, repetition) {
        Ok(exp) => exp
            .runs
            .iter()
            .map(|r| SlotRecord {
                controller: r.controller,
                status: r.status,
                stable: r.stable(),
                failed: r.failed(),
                first_violation: r.trajectory.as_ref().and_then(|t| t.first_violation),
                failure: r.failure.clone(),
            })
            .collect(),
        Err(e) => {
            log::error!("repetition {repetition} aborted: {e}");
            Controller::ALL
                .iter()
                .map(|&controller| SlotRecord {
                    controller,
                    status: None,
                    stable: false,
                    failed: true,
                    first_violation: None,
                    failure: Some(e.to_string()),
                })
                .collect()
        }
    };
    RepetitionRecord { repetition, slots }
}

/// Aggregates slot records per controller.
pub fn tally(cfg: &ExperimentConfig, runs: &[RepetitionRecord]) -> Vec<ControllerTally> {
    Controller::ALL
        .iter()
        .map(|&controller| {
            let slots: Vec<_> = runs
                .iter()
                .flat_map(|r| r.slots.iter().filter(move |s| s.controller == controller))
                .collect();
            let total = slots.len();
            let stable_count = slots.iter().filter(|s| s.stable).count();
            let failed_count = slots.iter().filter(|s| s.failed).count();
            let simulated = total - failed_count;
            ControllerTally {
                controller,
                method: controller.method(cfg).to_string(),
                stable_count,
                unstable_count: simulated - stable_count,
                failed_count,
                total,
                percentage: if total == 0 {
                    0.0
                } else {
                    100.0 * stable_count as f64 / total as f64
                },
                percentage_excluding_failures: (simulated > 0).then(|| 100.0 * stable_count as f64 / simulated as f64),
            }
        })
        .collect()
}

/// Runs `cfg.repetitions` independent repetitions under `cfg.master_seed`,
/// in parallel, and tallies stability per controller. The report does not
/// depend on thread count or timing.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let registry = MethodRegistry::default();
    let started = Instant::now();
    let runs: Vec<RepetitionRecord> = (0..cfg.repetitions as u64)
        .into_par_iter()
        .map(|r| repetition_record(cfg, &registry, r))
        .collect();
    let controllers = tally(cfg, &runs);
    log::info!(
        "{} repetitions in {:.1}s",
        cfg.repetitions,
        started.elapsed().as_secs_f64()
    );
    for t in &controllers {
        log::info!(
            "{}: {}/{} stable ({:.1}%), {} failed",
            t.controller.label(),
            t.stable_count,
            t.total,
            t.percentage,
            t.failed_count
        );
    }
    Ok(MonteCarloReport {
        master_seed: cfg.master_seed,
        repetitions: cfg.repetitions,
        controllers,
        runs,
        config: cfg.clone(),
    })
}

/// One scatter point `(A(1,2), B(2,1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub label: &'static str,
    pub a12: f64,
    pub b21: f64,
}

fn scatter_point(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.nrows() < 2 || a.ncols() < 2 || b.nrows() < 2 || b.ncols() < 1 {
        return Err(Error::Dimension("scatter needs A(1,2) and B(2,1)".into()));
    }
    Ok((a[(0, 1)], b[(1, 0)]))
}

/// Grid vertices first, then the parameter trajectory of every controller
/// that produced one.
pub fn scatter_rows(exp: &SingleExperiment) -> Result<Vec<ScatterRow>> {
    let mut rows = Vec::new();
    for v in exp.inclusion.vertices() {
        let (a12, b21) = scatter_point(&v.a, &v.b)?;
        rows.push(ScatterRow {
            label: "grid",
            a12,
            b21,
        });
    }
    for run in &exp.runs {
        for (a, b) in &run.parameters {
            let (a12, b21) = scatter_point(a, b)?;
            rows.push(ScatterRow {
                label: run.controller.label(),
                a12,
                b21,
            });
        }
    }
    Ok(rows)
}

pub fn write_scatter<W: std::io::Write>(exp: &SingleExperiment, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "a12", "b21"])?;
    for row in scatter_rows(exp)? {
        w.write_record([row.label.to_string(), row.a12.to_string(), row.b21.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_scatter(exp: &SingleExperiment, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_scatter(exp, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}
