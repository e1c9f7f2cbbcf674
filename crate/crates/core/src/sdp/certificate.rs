use super::ControllerSolution;
use crate::error::Result;
use crate::linalg::{ensure_square, min_eigenvalue, spectral_radius, sym_block2};
use crate::model::DifferenceInclusion;
use crate::statistics::{lyapunov_gramian, NoiseSpec, STABILITY_MARGIN};

/// Allowed negative slack in `Σ⋆ − Σᵢ ⪰ −tol·I`.
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCheck {
    pub index: usize,
    pub spectral_radius: f64,
    /// `λ_min(Σ⋆ − Σᵢ)`; `None` when the vertex closed loop is unstable.
    pub bound_gap: Option<f64>,
    /// `λ_min` of the quadratic-stability block at `(Σ⋆, K⋆Σ⋆)`.
    pub lmi_residual: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub vertices: Vec<VertexCheck>,
    pub passed: bool,
}

impl CertificateReport {
    pub fn violations(&self) -> impl Iterator<Item = &VertexCheck> {
        self.vertices.iter().filter(|v| !v.ok)
    }

    pub fn worst_gap(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.bound_gap.unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks that the certificate `Σ⋆` upper-bounds every vertex Gramian
/// `Σᵢ = (Aᵢ+BᵢK⋆) Σᵢ (·)ᵀ + BᵢVBᵢᵀ + W`, and recomputes each vertex LMI.
pub fn verify_certificate(
    solution: &ControllerSolution,
    inc: &DifferenceInclusion,
    noise: &NoiseSpec,
) -> Result<CertificateReport> {
    let rx = inc.state_dim();
    ensure_square("Sigma", &solution.sigma, rx)?;
    let k = &solution.gain;
    let sigma = &solution.sigma;
    let l = k * sigma;
    let vertices = inc
        .vertices()
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let closed = v.closed_loop(k);
            let rho = spectral_radius(&closed);
            let noise_i = &v.b * &noise.v * v.b.transpose() + &noise.w;
            let block = sym_block2(&(sigma - &noise_i), &(&v.a * sigma + &v.b * &l), sigma);
            let lmi_residual = min_eigenvalue(&block);
            let bound_gap = if rho < 1.0 - STABILITY_MARGIN {
                lyapunov_gramian(&v.a, &v.b, k, &noise.v, &noise.w)
                    .ok()
                    .map(|g| min_eigenvalue(&(sigma - g)))
            } else {
                None
            };
            let ok = bound_gap.is_some_and(|g| g >= -CERTIFICATE_TOL);
            VertexCheck {
                index,
                spectral_radius: rho,
                bound_gap,
                lmi_residual,
                ok,
            }
        })
        .collect::<Vec<_>>();
    let passed = vertices.iter().all(|v| v.ok);
    Ok(CertificateReport { vertices, passed })
}
