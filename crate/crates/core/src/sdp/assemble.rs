use nalgebra::DMatrix;

use super::problem::{AffineExpr, Lmi, SdpProblem, VarId};
use super::CostWeights;
use crate::error::{Error, Result};
use crate::linalg::{ensure_pd, ensure_square};
use crate::model::DifferenceInclusion;
use crate::statistics::{DataSummary, NoiseSpec};

/// `Σ ≻ 0` is imposed as `Σ ⪰ SIGMA_MARGIN · I`.
pub const SIGMA_MARGIN: f64 = 1e-6;

/// Variable names shared by the synthesis programs.
pub mod names {
    pub const SIGMA: &str = "Sigma";
    pub const L: &str = "L";
    pub const Z0: &str = "Z0";
    pub const Z_FROB: &str = "Zp";
    pub const Z1: &str = "Z1";
    pub const Z2: &str = "Z2";
    pub const Z3: &str = "Z3";
}

struct Base {
    problem: SdpProblem,
    sigma: VarId,
    l: VarId,
}

fn check(inc: &DifferenceInclusion, w: &CostWeights, noise: &NoiseSpec) -> Result<()> {
    let (rx, ru) = (inc.state_dim(), inc.input_dim());
    w.check_dims(rx, ru)?;
    ensure_square("W", &noise.w, rx)?;
    ensure_square("V", &noise.v, ru)?;
    ensure_pd("V", &noise.v)
}

/// Variables `Σ, L, Z₀`, cost `tr(QΣ) + tr(R Z₀)` and the quadratic-stability
/// constraints common to all three programs.
fn base(inc: &DifferenceInclusion, w: &CostWeights, noise: &NoiseSpec) -> Result<Base> {
    check(inc, w, noise)?;
    let (rx, ru) = (inc.state_dim(), inc.input_dim());
    let mut p = SdpProblem::new();
    let sigma = p.add_symmetric(names::SIGMA, rx);
    let l = p.add_dense(names::L, ru, rx);
    let z0 = p.add_symmetric(names::Z0, ru);
    p.add_cost(w.q.clone(), sigma);
    p.add_cost(w.r.clone(), z0);

    p.add_constraint(Lmi::psd("Sigma", p.var(sigma))?.with_margin(SIGMA_MARGIN));
    p.add_constraint(Lmi::block2("Z0", p.var(z0), p.var(l), p.var(sigma))?);
    for (i, v) in inc.vertices().iter().enumerate() {
        let noise_i = &v.b * &noise.v * v.b.transpose() + &noise.w;
        let noise_i = (&noise_i + noise_i.transpose()) * 0.5;
        let top = p.var(sigma) - &noise_i;
        let off = p.var(sigma).lmul(&v.a) + p.var(l).lmul(&v.b);
        p.add_constraint(Lmi::block2(format!("vertex[{i}]"), top, off, p.var(sigma))?);
    }
    Ok(Base { problem: p, sigma, l })
}

/// Quadratically stable LQR over every vertex of the inclusion.
pub fn assemble_robust_lqr(inc: &DifferenceInclusion, w: &CostWeights, noise: &NoiseSpec) -> Result<SdpProblem> {
    Ok(base(inc, w, noise)?.problem)
}

/// Robust LQR plus `γ′ ‖Σ − Σ_data‖²_F` through `Z′ ⪰ (Σ − Σ_data)²`.
pub fn assemble_dc_state(
    inc: &DifferenceInclusion,
    w: &CostWeights,
    noise: &NoiseSpec,
    sigma_data: &DMatrix<f64>,
    gamma_prime: f64,
) -> Result<SdpProblem> {
    let rx = inc.state_dim();
    ensure_square("Sigma_data", sigma_data, rx)?;
    ensure_pd("Sigma_data", sigma_data)?;
    check_weight("gamma_prime", gamma_prime)?;
    let Base { mut problem, sigma, .. } = base(inc, w, noise)?;
    let zp = problem.add_symmetric(names::Z_FROB, rx);
    problem.add_cost(DMatrix::identity(rx, rx) * gamma_prime, zp);
    let diff = problem.var(sigma) - sigma_data;
    problem.add_constraint(Lmi::block2(
        "frobenius",
        problem.var(zp),
        diff,
        AffineExpr::identity(rx),
    )?);
    Ok(problem)
}

/// Robust LQR plus the relaxed Jeffreys regularizer
/// `γ {tr(Γ_data⁻¹ Z₁) + tr(V⁻¹ Z₂) + tr(Σ_data Z₃)}`.
pub fn assemble_dc_state_input(
    inc: &DifferenceInclusion,
    w: &CostWeights,
    noise: &NoiseSpec,
    data: &DataSummary,
    gamma: f64,
) -> Result<SdpProblem> {
    let (rx, ru) = (inc.state_dim(), inc.input_dim());
    if data.state_dim() != rx || data.input_dim() != ru {
        return Err(Error::Dimension(format!(
            "data summary is for r_x={}, r_u={}, inclusion has r_x={rx}, r_u={ru}",
            data.state_dim(),
            data.input_dim()
        )));
    }
    check_weight("gamma", gamma)?;
    let sigma_chol = data
        .sigma
        .clone()
        .cholesky()
        .filter(|_| crate::linalg::is_positive_definite(&data.sigma))
        .ok_or_else(|| Error::Singular("Sigma_data".into()))?;
    let gamma_data = data.gamma();
    let gamma_inv = gamma_data
        .clone()
        .cholesky()
        .filter(|_| crate::linalg::is_positive_definite(&gamma_data))
        .ok_or_else(|| Error::Singular("Gamma_data".into()))?
        .inverse();
    let v_inv = noise
        .v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("V".into()))?
        .inverse();
    // Hᵀ Σ_data⁻¹, constant in the decision variables.
    let projection = sigma_chol.solve(&data.cross).transpose();

    let Base { mut problem, sigma, l } = base(inc, w, noise)?;
    let z1 = problem.add_symmetric(names::Z1, rx + ru);
    let z2 = problem.add_symmetric(names::Z2, ru);
    let z3 = problem.add_symmetric(names::Z3, rx);
    problem.add_cost(gamma_inv * gamma, z1);
    problem.add_cost(v_inv * gamma, z2);
    problem.add_cost(&data.sigma * gamma, z3);

    let excitation = noise.excitation_embedding();
    problem.add_constraint(Lmi::block2(
        "Z1",
        problem.var(z1) - &excitation,
        AffineExpr::vstack(problem.var(sigma), problem.var(l))?,
        problem.var(sigma),
    )?);
    problem.add_constraint(Lmi::block2(
        "Z2",
        problem.var(z2),
        problem.var(l) - problem.var(sigma).lmul(&projection),
        problem.var(sigma),
    )?);
    problem.add_constraint(Lmi::block2(
        "Z3",
        problem.var(z3),
        AffineExpr::identity(rx),
        problem.var(sigma),
    )?);
    Ok(problem)
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "{name} must be a nonnegative finite number, got {v}"
        )))
    }
}
