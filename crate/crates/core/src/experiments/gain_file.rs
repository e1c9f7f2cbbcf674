use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_rows, to_rows};
use crate::sdp::{CertificateReport, ControllerSolution};
use crate::solver::SolveStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub label: String,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub index: usize,
    pub spectral_radius: f64,
    pub bound_gap: Option<f64>,
    pub lmi_residual: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub passed: bool,
    pub worst_gap: Option<f64>,
    pub vertices: Vec<VertexRecord>,
}

impl From<&CertificateReport> for CertificateRecord {
    fn from(r: &CertificateReport) -> Self {
        let worst = r.worst_gap();
        Self {
            passed: r.passed,
            worst_gap: worst.is_finite().then_some(worst),
            vertices: r
                .vertices
                .iter()
                .map(|v| VertexRecord {
                    index: v.index,
                    spectral_radius: v.spectral_radius,
                    bound_gap: v.bound_gap,
                    lmi_residual: v.lmi_residual,
                    ok: v.ok,
                })
                .collect(),
        }
    }
}

/// JSON written by `dclqr synthesize` and read by `dclqr simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub method: String,
    pub status: SolveStatus,
    pub objective: f64,
    pub iterations: usize,
    pub gain: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub residuals: Vec<ResidualRecord>,
    #[serde(default)]
    pub certificate: Option<CertificateRecord>,
}

impl GainRecord {
    pub fn new(solution: &ControllerSolution, certificate: Option<&CertificateReport>) -> Self {
        Self {
            method: solution.method.clone(),
            status: solution.status,
            objective: solution.objective,
            iterations: solution.iterations,
            gain: to_rows(&solution.gain),
            sigma: to_rows(&solution.sigma),
            residuals: solution
                .residuals
                .iter()
                .map(|(label, v)| ResidualRecord {
                    label: label.clone(),
                    min_eigenvalue: *v,
                })
                .collect(),
            certificate: certificate.map(CertificateRecord::from),
        }
    }

    pub fn gain_matrix(&self) -> Result<DMatrix<f64>> {
        from_rows("gain", &self.gain)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("gain file: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
