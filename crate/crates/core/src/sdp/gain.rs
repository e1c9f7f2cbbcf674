use nalgebra::DMatrix;

use super::CostWeights;
use crate::error::{Error, Result};
use crate::linalg::{ensure_shape, ensure_square, spd_condition, symmetrize};

/// Certificates worse conditioned than this are rejected by
/// [`recover_gain`].
pub const MAX_CERTIFICATE_CONDITION: f64 = 1e12;

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITER: usize = 200_000;

/// `K = L Σ⁻¹`, computed by solving `Σ Kᵀ = Lᵀ`.
pub fn recover_gain(sigma: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rx = sigma.nrows();
    ensure_square("Sigma", sigma, rx)?;
    ensure_shape("L", l, l.nrows(), rx)?;
    let sigma = symmetrize(sigma);
    let cond = spd_condition(&sigma);
    if cond.is_nan() || cond > MAX_CERTIFICATE_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let chol = sigma.cholesky().ok_or_else(|| Error::Singular("Sigma".into()))?;
    Ok(chol.solve(&l.transpose()).transpose())
}

/// Certainty-equivalence LQR gain for `u = K x`, by value iteration on the
/// discrete algebraic Riccati equation
/// `P = Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA`, `K = −(R + BᵀPB)⁻¹ BᵀPA`.
pub fn riccati_lqr(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &CostWeights) -> Result<DMatrix<f64>> {
    let rx = a.nrows();
    ensure_square("A", a, rx)?;
    let ru = b.ncols();
    ensure_shape("B", b, rx, ru)?;
    w.check_dims(rx, ru)?;
    let at = a.transpose();
    let bt = b.transpose();
    let mut p = w.q.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..RICCATI_MAX_ITER {
        let btpa = &bt * &p * a;
        let gram = &w.r + &bt * &p * b;
        let chol = symmetrize(&gram)
            .cholesky()
            .ok_or_else(|| Error::Singular("R + BᵀPB".into()))?;
        let next = symmetrize(&(&w.q + &at * &p * a - btpa.transpose() * chol.solve(&btpa)));
        residual = (&next - &p).amax();
        p = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= RICCATI_TOL * p.amax().max(1.0) {
            let btpa = &bt * &p * a;
            let chol = symmetrize(&(&w.r + &bt * &p * b))
                .cholesky()
                .ok_or_else(|| Error::Singular("R + BᵀPB".into()))?;
            return Ok(-chol.solve(&btpa));
        }
    }
    Err(Error::NoConvergence {
        iterations: RICCATI_MAX_ITER,
        residual,
    })
}
