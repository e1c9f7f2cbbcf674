//! Named synthesis methods behind a common trait.
//!
//! Each method turns a [`SynthesisInput`] into a [`ControllerSolution`]. The
//! CLI and the experiment driver look methods up by name in a
//! [`MethodRegistry`]; new methods are added by registering another
//! [`Synthesizer`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{DifferenceInclusion, VertexSystem};
use crate::sdp::{
    assemble_dc_state, assemble_dc_state_input, assemble_robust_lqr, riccati_lqr, solve_synthesis, ControllerSolution,
    CostWeights,
};
use crate::solver::{SolveStatus, SolverConfig};
use crate::statistics::{lyapunov_gramian, DataSummary, NoiseSpec};

pub const LQR: &str = "lqr";
pub const ROBUST: &str = "robust";
pub const DC_STATE: &str = "dc-state";
pub const DC_STATE_INPUT: &str = "dc-state-input";

/// Everything a synthesis method may consume.
#[derive(Debug, Clone)]
pub struct SynthesisInput<'a> {
    pub inclusion: &'a DifferenceInclusion,
    pub weights: &'a CostWeights,
    pub noise: &'a NoiseSpec,
    /// Learning-data moments; required by the data-conforming methods.
    pub data: Option<&'a DataSummary>,
    /// Linearization used by certainty-equivalence methods. Defaults to the
    /// vertex mean when absent.
    pub nominal: Option<&'a VertexSystem>,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub solver: SolverConfig,
}

impl SynthesisInput<'_> {
    fn data(&self, method: &str) -> Result<&DataSummary> {
        self.data
            .ok_or_else(|| Error::Invalid(format!("method {method} needs a data summary")))
    }

    fn nominal(&self) -> VertexSystem {
        if let Some(v) = self.nominal {
            return v.clone();
        }
        let n = self.inclusion.len() as f64;
        let mut a = DMatrix::zeros(self.inclusion.state_dim(), self.inclusion.state_dim());
        let mut b = DMatrix::zeros(self.inclusion.state_dim(), self.inclusion.input_dim());
        for v in self.inclusion.vertices() {
            a += &v.a;
            b += &v.b;
        }
        VertexSystem::new(a / n, b / n)
    }
}

pub trait Synthesizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<ControllerSolution>;
}

/// Certainty-equivalence LQR on a single linearization.
#[derive(Debug, Default, Clone, Copy)]
pub struct LqrSynthesizer;

impl Synthesizer for LqrSynthesizer {
    fn name(&self) -> &'static str {
        LQR
    }

    fn description(&self) -> &'static str {
        "Riccati LQR on the nominal linearization"
    }

    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<ControllerSolution> {
        let nominal = input.nominal();
        let gain = riccati_lqr(&nominal.a, &nominal.b, input.weights)?;
        let sigma = lyapunov_gramian(&nominal.a, &nominal.b, &gain, &input.noise.v, &input.noise.w)?;
        let cost = &input.weights.q + gain.transpose() * &input.weights.r * &gain;
        Ok(ControllerSolution {
            method: LQR.to_string(),
            objective: (cost * &sigma).trace(),
            gain,
            sigma,
            status: SolveStatus::Optimal,
            residuals: Vec::new(),
            variables: BTreeMap::new(),
            iterations: 0,
        })
    }
}

/// Quadratically stable LQR over all vertices.
#[derive(Debug, Default, Clone, Copy)]
pub struct RobustSynthesizer;

impl Synthesizer for RobustSynthesizer {
    fn name(&self) -> &'static str {
        ROBUST
    }

    fn description(&self) -> &'static str {
        "quadratically stable LQR over the difference inclusion"
    }

    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<ControllerSolution> {
        let p = assemble_robust_lqr(input.inclusion, input.weights, input.noise)?;
        solve_synthesis(ROBUST, &p, &input.solver)
    }
}

/// Robust LQR regularized toward the data state covariance.
#[derive(Debug, Default, Clone, Copy)]
pub struct DcStateSynthesizer;

impl Synthesizer for DcStateSynthesizer {
    fn name(&self) -> &'static str {
        DC_STATE
    }

    fn description(&self) -> &'static str {
        "robust LQR with a Frobenius penalty toward the data state covariance"
    }

    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<ControllerSolution> {
        let data = input.data(DC_STATE)?;
        let p = assemble_dc_state(
            input.inclusion,
            input.weights,
            input.noise,
            &data.sigma,
            input.gamma_prime,
        )?;
        solve_synthesis(DC_STATE, &p, &input.solver)
    }
}

/// Robust LQR regularized toward the data state-input covariance.
#[derive(Debug, Default, Clone, Copy)]
pub struct DcStateInputSynthesizer;

impl Synthesizer for DcStateInputSynthesizer {
    fn name(&self) -> &'static str {
        DC_STATE_INPUT
    }

    fn description(&self) -> &'static str {
        "robust LQR with the relaxed Jeffreys penalty toward the data state-input covariance"
    }

    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<ControllerSolution> {
        let data = input.data(DC_STATE_INPUT)?;
        data.ensure_definite()?;
        let p = assemble_dc_state_input(input.inclusion, input.weights, input.noise, data, input.gamma)?;
        solve_synthesis(DC_STATE_INPUT, &p, &input.solver)
    }
}

/// Synthesis methods keyed by name.
pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Box<dyn Synthesizer>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, method: Box<dyn Synthesizer>) -> Option<Box<dyn Synthesizer>> {
        self.methods.insert(method.name(), method)
    }

    pub fn get(&self, name: &str) -> Result<&dyn Synthesizer> {
        self.methods
            .get(name)
            .map(AsRef::as_ref)
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }

    pub fn synthesize(&self, name: &str, input: &SynthesisInput<'_>) -> Result<ControllerSolution> {
        self.get(name)?.synthesize(input)
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(LqrSynthesizer));
        r.register(Box::new(RobustSynthesizer));
        r.register(Box::new(DcStateSynthesizer));
        r.register(Box::new(DcStateInputSynthesizer));
        r
    }
}
