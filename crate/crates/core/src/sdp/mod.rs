//! Synthesis programs, gain recovery and certificate checks.

mod assemble;
mod certificate;
mod gain;
mod problem;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub use assemble::{assemble_dc_state, assemble_dc_state_input, assemble_robust_lqr, names, SIGMA_MARGIN};
pub use certificate::{verify_certificate, CertificateReport, VertexCheck, CERTIFICATE_TOL};
pub use gain::{recover_gain, riccati_lqr, MAX_CERTIFICATE_CONDITION};
pub use problem::{AffineExpr, CostTerm, Lmi, SdpProblem, Term, VarId, VarShape, Variable};

use crate::error::{Error, Result};
use crate::linalg::{ensure_pd, ensure_psd, ensure_square};
use crate::solver::{self, SolveStatus, SolverConfig};

/// LQR weights `Q ⪰ 0`, `R ≻ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl CostWeights {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        ensure_psd("Q", &q)?;
        ensure_pd("R", &r)?;
        Ok(Self { q, r })
    }

    pub(crate) fn check_dims(&self, rx: usize, ru: usize) -> Result<()> {
        ensure_square("Q", &self.q, rx)?;
        ensure_square("R", &self.r, ru)
    }
}

/// A synthesized state-feedback gain `u = K x + v` with its covariance
/// certificate.
#[derive(Debug, Clone)]
pub struct ControllerSolution {
    pub method: String,
    pub gain: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Per-LMI `λ_min − margin` at the solution point.
    pub residuals: Vec<(String, f64)>,
    pub variables: BTreeMap<String, DMatrix<f64>>,
    pub iterations: usize,
}

impl ControllerSolution {
    pub fn min_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min)
    }
}

/// Solves an assembled synthesis program and recovers `K = L Σ⁻¹`.
///
/// Infeasible or failed solves are returned as [`Error::Solver`].
pub fn solve_synthesis(method: &str, problem: &SdpProblem, cfg: &SolverConfig) -> Result<ControllerSolution> {
    let sol = solver::solve(problem, cfg)?;
    if !sol.status.is_usable() {
        return Err(Error::Solver {
            status: sol.status,
            message: sol.message,
        });
    }
    if sol.status == SolveStatus::NearOptimal {
        log::info!("{method}: near-optimal solve ({})", sol.message);
    }
    let sigma = sol
        .value(names::SIGMA)
        .cloned()
        .ok_or_else(|| Error::Invalid("program has no Sigma variable".into()))?;
    let l = sol
        .value(names::L)
        .cloned()
        .ok_or_else(|| Error::Invalid("program has no L variable".into()))?;
    let gain = recover_gain(&sigma, &l)?;
    let ordered = problem.values_by_id(&sol.values)?;
    Ok(ControllerSolution {
        method: method.to_string(),
        gain,
        sigma,
        objective: sol.objective,
        status: sol.status,
        residuals: problem.residuals(&ordered),
        variables: sol.values,
        iterations: sol.iterations,
    })
}
