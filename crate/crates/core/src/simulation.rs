//! Stochastic closed-loop simulation under `u = K x + v`.
//!
//! Randomness comes from [`GaussianStream`]: ChaCha20 keyed by a 64-bit seed
//! (via `seed_from_u64`) with a 64-bit stream selector, and standard normals
//! drawn with the ziggurat sampler of `rand_distr::StandardNormal`.
//! Correlated draws are `C^{1/2} z` with the symmetric PSD square root.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_shape, psd_sqrt, to_rows};
use crate::model::Plant;
use crate::statistics::NoiseSpec;

/// Deterministic source of Gaussian vectors.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha20Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn standard(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_iterator(dim, (0..dim).map(|_| self.rng.sample::<f64, _>(StandardNormal)))
    }

    /// One draw from `N(0, root·rootᵀ)`.
    pub fn correlated(&mut self, root: &DMatrix<f64>) -> DVector<f64> {
        let z = self.standard(root.ncols());
        root * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    pub instability_threshold: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Sub-stream of `seed`; 0 unless a caller splits one seed across runs.
    pub stream: u64,
}

impl SimConfig {
    pub fn new(horizon: usize, instability_threshold: f64, noise: NoiseSpec, seed: u64) -> Result<Self> {
        let cfg = Self {
            horizon,
            instability_threshold,
            noise,
            seed,
            stream: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if !self.instability_threshold.is_finite() || self.instability_threshold <= 0.0 {
            return Err(Error::Invalid(format!(
                "instability threshold must be positive and finite, got {}",
                self.instability_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// `w_k`, one per recorded input.
    pub process_noise: Vec<DVector<f64>>,
    /// `v_k`, one per recorded input.
    pub excitation: Vec<DVector<f64>>,
    pub stable: bool,
    pub first_violation: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

fn violates(x: &DVector<f64>, threshold: f64) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() >= threshold)
}

/// Simulates `x_{k+1} = f(x_k, K x_k + v_k, w_k)` for `cfg.horizon` steps.
///
/// Each step draws `w_k` first, then `v_k`. The run stops at the first state
/// with `‖x‖∞ ≥ threshold` (or a non-finite entry); `x0` itself is checked.
pub fn simulate_closed_loop(
    plant: &dyn Plant,
    gain: &DMatrix<f64>,
    x0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let (rx, ru) = plant.dims();
    ensure_shape("K", gain, ru, rx)?;
    if x0.len() != rx {
        return Err(Error::Dimension(format!("x0 has length {}, expected {rx}", x0.len())));
    }
    ensure_shape("W", &cfg.noise.w, rx, rx)?;
    ensure_shape("V", &cfg.noise.v, ru, ru)?;

    let w_root = psd_sqrt(&cfg.noise.w);
    let v_root = psd_sqrt(&cfg.noise.v);
    let mut rng = GaussianStream::new(cfg.seed, cfg.stream);

    let mut traj = Trajectory {
        states: Vec::with_capacity(cfg.horizon + 1),
        inputs: Vec::with_capacity(cfg.horizon),
        process_noise: Vec::with_capacity(cfg.horizon),
        excitation: Vec::with_capacity(cfg.horizon),
        stable: true,
        first_violation: None,
    };
    traj.states.push(x0.clone());
    if violates(x0, cfg.instability_threshold) {
        traj.stable = false;
        traj.first_violation = Some(0);
        return Ok(traj);
    }

    let mut x = x0.clone();
    for k in 0..cfg.horizon {
        let w = rng.correlated(&w_root);
        let v = rng.correlated(&v_root);
        let u = gain * &x + &v;
        x = plant.step(&x, &u, &w);
        traj.inputs.push(u);
        traj.process_noise.push(w);
        traj.excitation.push(v);
        traj.states.push(x.clone());
        if violates(&x, cfg.instability_threshold) {
            traj.stable = false;
            traj.first_violation = Some(k + 1);
            break;
        }
    }
    Ok(traj)
}

/// Jacobians `(A_k, B_k)` along the recorded state-input pairs.
pub fn parameter_trajectory(plant: &dyn Plant, traj: &Trajectory) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    traj.inputs
        .iter()
        .zip(&traj.states)
        .map(|(u, x)| plant.jacobians(x, u))
        .collect()
}

/// Metadata written next to an exported trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub stream: u64,
    pub gain: Vec<Vec<f64>>,
    pub horizon: usize,
    pub instability_threshold: f64,
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub steps: usize,
    pub stable: bool,
    pub first_violation: Option<usize>,
}

impl TrajectoryMeta {
    pub fn new(traj: &Trajectory, gain: &DMatrix<f64>, cfg: &SimConfig) -> Self {
        Self {
            seed: cfg.seed,
            stream: cfg.stream,
            gain: to_rows(gain),
            horizon: cfg.horizon,
            instability_threshold: cfg.instability_threshold,
            w: to_rows(&cfg.noise.w),
            v: to_rows(&cfg.noise.v),
            steps: traj.len(),
            stable: traj.stable,
            first_violation: traj.first_violation,
        }
    }
}

/// `trajectory.csv` → `trajectory.csv.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `k, x_1…, u_1…` rows. The final state has no input, so its input
/// cells are empty.
pub fn write_trajectory_csv<W: std::io::Write>(traj: &Trajectory, out: W) -> Result<()> {
    let rx = traj.states.first().map_or(0, |x| x.len());
    let ru = traj.inputs.first().map_or(0, |u| u.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend((1..=rx).map(|i| format!("x_{i}")));
    header.extend((1..=ru).map(|i| format!("u_{i}")));
    w.write_record(&header)?;
    for (k, x) in traj.states.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        match traj.inputs.get(k) {
            Some(u) => row.extend(u.iter().map(|v| v.to_string())),
            None => row.extend((0..ru).map(|_| String::new())),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV and its sidecar metadata.
pub fn export_trajectory(traj: &Trajectory, meta: &TrajectoryMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_trajectory_csv(traj, fs::File::create(path)?)?;
    fs::write(meta_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}
