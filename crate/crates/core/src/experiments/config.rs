use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_psd, ensure_shape, ensure_square, from_rows, sym_block2};
use crate::model::BenchmarkPlant;
use crate::sdp::CostWeights;
use crate::simulation::SimConfig;
use crate::statistics::{DataSummary, NoiseSpec};
use crate::synthesis::{DC_STATE, DC_STATE_INPUT};

/// Where the data-conforming programs take `Σ_data`, `H_data`, `M_data` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataMoments {
    /// The covariances the grid is sampled from.
    Nominal,
    /// Second moments of the sampled grid itself.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `x₀ ~ N(0, Σ_data)`.
    DataDistribution,
    Origin,
}

/// Every knob of the benchmark study. Matrices are lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub grid_count: usize,
    pub grid_state_cov: Vec<Vec<f64>>,
    pub grid_input_cov: Vec<Vec<f64>>,
    pub grid_cross_cov: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub dc_method: String,
    pub data_moments: DataMoments,
    pub initial_state: InitialState,
    pub horizon: usize,
    pub threshold: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub solver: crate::solver::SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta: 1.0 / 6.0,
            grid_count: 500,
            grid_state_cov: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            grid_input_cov: vec![vec![0.5]],
            grid_cross_cov: vec![vec![0.0], vec![0.0]],
            q: vec![vec![1.0, 0.0], vec![0.0, 0.5]],
            r: vec![vec![1.0]],
            v: vec![vec![0.05]],
            w: vec![vec![0.2, 0.0], vec![0.0, 0.1]],
            gamma: 10.0,
            gamma_prime: 10.0,
            dc_method: DC_STATE_INPUT.to_string(),
            data_moments: DataMoments::Nominal,
            initial_state: InitialState::DataDistribution,
            horizon: 500,
            threshold: 100.0,
            repetitions: 1000,
            master_seed: 0,
            solver: Default::default(),
        }
    }
}

const RX: usize = 2;
const RU: usize = 1;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::Invalid("theta must be finite".into()));
        }
        if self.grid_count == 0 {
            return Err(Error::Invalid("grid_count must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be at least 1".into()));
        }
        for (name, g) in [("gamma", self.gamma), ("gamma_prime", self.gamma_prime)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be nonnegative, got {g}")));
            }
        }
        if self.dc_method != DC_STATE && self.dc_method != DC_STATE_INPUT {
            return Err(Error::Invalid(format!(
                "dc_method must be `{DC_STATE}` or `{DC_STATE_INPUT}`, got `{}`",
                self.dc_method
            )));
        }
        ensure_psd("grid covariance", &self.grid_covariance()?)?;
        self.weights()?;
        self.noise()?;
        self.sim_config(0)?;
        self.solver.validate()
    }

    pub fn plant(&self) -> BenchmarkPlant {
        BenchmarkPlant::new(self.theta)
    }

    fn matrix(name: &str, rows: &[Vec<f64>], r: usize, c: usize) -> Result<DMatrix<f64>> {
        let m = from_rows(name, rows)?;
        ensure_shape(name, &m, r, c)?;
        Ok(m)
    }

    pub fn sigma_data(&self) -> Result<DMatrix<f64>> {
        Self::matrix("grid_state_cov", &self.grid_state_cov, RX, RX)
    }

    pub fn m_data(&self) -> Result<DMatrix<f64>> {
        Self::matrix("grid_input_cov", &self.grid_input_cov, RU, RU)
    }

    pub fn h_data(&self) -> Result<DMatrix<f64>> {
        Self::matrix("grid_cross_cov", &self.grid_cross_cov, RX, RU)
    }

    /// Joint covariance of `(x̄, ū)` used for grid sampling.
    pub fn grid_covariance(&self) -> Result<DMatrix<f64>> {
        Ok(sym_block2(&self.sigma_data()?, &self.h_data()?, &self.m_data()?))
    }

    pub fn nominal_data(&self) -> Result<DataSummary> {
        DataSummary::from_moments(self.sigma_data()?, self.h_data()?, self.m_data()?, self.grid_count)
    }

    pub fn weights(&self) -> Result<CostWeights> {
        let q = Self::matrix("q", &self.q, RX, RX)?;
        let r = Self::matrix("r", &self.r, RU, RU)?;
        CostWeights::new(q, r)
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let w = from_rows("w", &self.w)?;
        let v = from_rows("v", &self.v)?;
        ensure_square("w", &w, RX)?;
        ensure_square("v", &v, RU)?;
        NoiseSpec::new(w, v)
    }

    pub fn sim_config(&self, seed: u64) -> Result<SimConfig> {
        SimConfig::new(self.horizon, self.threshold, self.noise()?, seed)
    }

    pub fn initial_covariance(&self) -> Result<DMatrix<f64>> {
        match self.initial_state {
            InitialState::DataDistribution => self.sigma_data(),
            InitialState::Origin => Ok(DMatrix::zeros(RX, RX)),
        }
    }

    pub fn origin(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::zeros(RX), DVector::zeros(RU))
    }
}
