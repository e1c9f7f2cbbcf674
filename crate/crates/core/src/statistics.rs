//! Empirical moments, design covariances, the Jeffreys regularizer and the
//! discrete Lyapunov Gramian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_pd, ensure_psd, ensure_shape, ensure_square, spectral_radius, sym_block2, symmetrize, unvec, vec,
};

/// Closed loops with spectral radius above `1 - STABILITY_MARGIN` are treated
/// as unstable.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Zero-mean second moments of state/input data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSummary {
    pub sigma: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub input: DMatrix<f64>,
    pub count: usize,
}

impl DataSummary {
    /// Builds a summary from given moments (e.g. nominal sampling
    /// covariances) after symmetrizing the diagonal blocks.
    pub fn from_moments(sigma: DMatrix<f64>, cross: DMatrix<f64>, input: DMatrix<f64>, count: usize) -> Result<Self> {
        let rx = sigma.nrows();
        let ru = input.nrows();
        ensure_square("Sigma_data", &sigma, rx)?;
        ensure_square("M_data", &input, ru)?;
        ensure_shape("H_data", &cross, rx, ru)?;
        if count == 0 {
            return Err(Error::Invalid("sample count must be positive".into()));
        }
        let s = Self {
            sigma: symmetrize(&sigma),
            cross,
            input: symmetrize(&input),
            count,
        };
        ensure_psd("Gamma_data", &s.gamma())?;
        Ok(s)
    }

    pub fn state_dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.input.nrows()
    }

    /// `Γ_data = [[Σ_data, H_data], [H_dataᵀ, M_data]]`.
    pub fn gamma(&self) -> DMatrix<f64> {
        sym_block2(&self.sigma, &self.cross, &self.input)
    }

    /// Checks the strict positivity required by the data-conforming
    /// programs.
    pub fn ensure_definite(&self) -> Result<()> {
        ensure_pd("Sigma_data", &self.sigma)?;
        ensure_pd("Gamma_data", &self.gamma())
    }
}

/// Process noise `W ⪰ 0` and input excitation `V ≻ 0` covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub w: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl NoiseSpec {
    pub fn new(w: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        ensure_psd("W", &w)?;
        ensure_pd("V", &v)?;
        Ok(Self {
            w: symmetrize(&w),
            v: symmetrize(&v),
        })
    }

    /// Accepts a PSD (possibly zero) excitation covariance. Only suitable for
    /// simulation; synthesis requires `V ≻ 0`.
    pub fn new_unchecked_excitation(w: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        ensure_psd("W", &w)?;
        ensure_psd("V", &v)?;
        Ok(Self {
            w: symmetrize(&w),
            v: symmetrize(&v),
        })
    }

    /// `𝒱 = block-diag(0, V)`.
    pub fn excitation_embedding(&self) -> DMatrix<f64> {
        let rx = self.w.nrows();
        let ru = self.v.nrows();
        let mut out = DMatrix::zeros(rx + ru, rx + ru);
        out.view_mut((rx, rx), (ru, ru)).copy_from(&self.v);
        out
    }
}

/// Averages `x xᵀ`, `x uᵀ`, `u uᵀ` over the `N` samples.
pub fn summarize(states: &[DVector<f64>], inputs: &[DVector<f64>]) -> Result<DataSummary> {
    if states.is_empty() {
        return Err(Error::Invalid("no samples".into()));
    }
    if states.len() != inputs.len() {
        return Err(Error::Invalid(format!(
            "{} state samples but {} input samples",
            states.len(),
            inputs.len()
        )));
    }
    let rx = states[0].len();
    let ru = inputs[0].len();
    let mut sigma = DMatrix::zeros(rx, rx);
    let mut cross = DMatrix::zeros(rx, ru);
    let mut input = DMatrix::zeros(ru, ru);
    for (x, u) in states.iter().zip(inputs) {
        if x.len() != rx || u.len() != ru {
            return Err(Error::Dimension("samples have inconsistent dimensions".into()));
        }
        sigma += x * x.transpose();
        cross += x * u.transpose();
        input += u * u.transpose();
    }
    let n = states.len() as f64;
    Ok(DataSummary {
        sigma: symmetrize(&(sigma / n)),
        cross: cross / n,
        input: symmetrize(&(input / n)),
        count: states.len(),
    })
}

/// `Γ_des = [[Σ, Σ Kᵀ], [K Σ, K Σ Kᵀ + V]]`.
pub fn design_covariance(sigma: &DMatrix<f64>, k: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rx = sigma.nrows();
    let ru = v.nrows();
    ensure_square("Sigma", sigma, rx)?;
    ensure_shape("K", k, ru, rx)?;
    ensure_pd("Sigma", sigma)?;
    ensure_pd("V", v)?;
    let sk = sigma * k.transpose();
    let kk = symmetrize(&(k * &sk + v));
    Ok(symmetrize(&sym_block2(sigma, &sk, &kk)))
}

/// Jeffreys regularizer `tr(Γ_data⁻¹ Γ_des) + tr(Γ_data Γ_des⁻¹)`.
///
/// Bounded below by `2d` with equality iff the two covariances coincide.
pub fn jeffreys_objective(gamma_des: &DMatrix<f64>, gamma_data: &DMatrix<f64>) -> Result<f64> {
    let d = gamma_data.nrows();
    ensure_square("Gamma_des", gamma_des, d)?;
    ensure_square("Gamma_data", gamma_data, d)?;
    let data_chol = symmetrize(gamma_data)
        .cholesky()
        .ok_or_else(|| Error::Singular("Gamma_data".into()))?;
    let des_chol = symmetrize(gamma_des)
        .cholesky()
        .ok_or_else(|| Error::Singular("Gamma_des".into()))?;
    let first = data_chol.solve(gamma_des).trace();
    let second = des_chol.solve(gamma_data).trace();
    Ok(first + second)
}

/// Stationary covariance of `x⁺ = (A + BK) x + B v + w`, i.e. the solution of
/// `Σ = (A+BK) Σ (A+BK)ᵀ + B V Bᵀ + W`, by a direct Kronecker solve.
pub fn lyapunov_gramian(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let rx = a.nrows();
    let ru = b.ncols();
    ensure_square("A", a, rx)?;
    ensure_shape("B", b, rx, ru)?;
    ensure_shape("K", k, ru, rx)?;
    ensure_square("V", v, ru)?;
    ensure_square("W", w, rx)?;
    let closed = a + b * k;
    let noise = symmetrize(&(b * v * b.transpose() + w));
    discrete_lyapunov(&closed, &noise)
}

/// Solves `Σ = M Σ Mᵀ + N` for Schur-stable `M`.
pub fn discrete_lyapunov(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rx = m.nrows();
    ensure_square("M", m, rx)?;
    ensure_square("N", n, rx)?;
    let rho = spectral_radius(m);
    if !rho.is_finite() || rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableClosedLoop(rho));
    }
    let lhs = DMatrix::identity(rx * rx, rx * rx) - m.kronecker(m);
    let sol = lhs
        .lu()
        .solve(&vec(n))
        .ok_or_else(|| Error::Singular("I - M⊗M".into()))?;
    Ok(symmetrize(&unvec(&sol, rx, rx)))
}
