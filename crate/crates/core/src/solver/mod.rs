//! Conic solver contract for assembled SDPs.

mod conic;
mod ipm;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use conic::{ConicBlock, ConicProblem};

use crate::error::{Error, Result};
use crate::sdp::SdpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Returned points must satisfy every LMI to `λ_min ≥ −feasibility_margin`.
    pub feasibility_margin: f64,
    /// Relative threshold for accepting an infeasibility certificate.
    pub infeasibility_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_iterations: 5000,
            feasibility_margin: 1e-7,
            infeasibility_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("feasibility_margin", self.feasibility_margin),
            ("infeasibility_tol", self.infeasibility_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("solver {name} must be positive")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("solver max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Failed,
}

impl SolveStatus {
    /// Optimal or near-optimal.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: BTreeMap<String, DMatrix<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    /// Solver diagnostics; for infeasible problems, a certificate summary.
    pub message: String,
}

impl Solution {
    pub fn value(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.values.get(name)
    }
}

/// Solves `problem`. Never panics on numerical trouble: breakdowns are
/// reported through [`SolveStatus::Failed`].
pub fn solve(problem: &SdpProblem, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    problem.validate()?;
    let conic = ConicProblem::from_sdp(problem);
    let out = ipm::interior_point(&conic, cfg);
    let values = unpack(problem, &conic, &out.y);
    Ok(Solution {
        status: out.status,
        objective: conic.objective(&out.y),
        values,
        iterations: out.iterations,
        primal_infeasibility: out.primal_infeasibility,
        dual_infeasibility: out.dual_infeasibility,
        relative_gap: out.relative_gap,
        message: out.message,
    })
}

fn unpack(problem: &SdpProblem, conic: &ConicProblem, y: &DVector<f64>) -> BTreeMap<String, DMatrix<f64>> {
    problem
        .variables()
        .iter()
        .zip(&conic.offsets)
        .map(|(v, &off)| {
            let coords = &y.as_slice()[off..off + v.shape.dof()];
            (v.name.clone(), v.shape.from_coordinates(coords))
        })
        .collect()
}

/// Debug dump of the lowered problem in SDPA sparse format.
pub fn dump_sdpa(problem: &SdpProblem) -> Result<String> {
    problem.validate()?;
    let conic = ConicProblem::from_sdp(problem);
    let mut header = String::new();
    for (var, &start) in problem.variables().iter().zip(&conic.offsets) {
        let kind = match var.shape {
            crate::sdp::VarShape::Symmetric(_) => "symmetric",
            crate::sdp::VarShape::Dense(..) => "dense",
        };
        header.push_str(&format!(
            "* variable {} {} {}x{} unknowns {}..{}\n",
            var.name,
            kind,
            var.shape.rows(),
            var.shape.cols(),
            start + 1,
            start + var.shape.dof()
        ));
    }
    Ok(header + &conic.to_sdpa())
}
