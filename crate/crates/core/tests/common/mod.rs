#![allow(dead_code)]

pub mod schur;

use dclqr::linalg::spectral_radius;
use dclqr::model::{benchmark_step, DifferenceInclusion, VertexSystem};
use dclqr::sdp::CostWeights;
use dclqr::statistics::{DataSummary, NoiseSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

pub fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// `Σ_{k<terms} Mᵏ N (Mᵏ)ᵀ`, stopping early once terms drop below 1e-18.
pub fn lyapunov_series(m: &DMatrix<f64>, n: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let mut sum = n.clone();
    let mut term = n.clone();
    for _ in 1..terms {
        term = m * term * m.transpose();
        sum += &term;
        if term.amax() < 1e-18 * sum.amax().max(1.0) {
            break;
        }
    }
    sum
}

/// Value iteration on `P ← Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA`, with `u = Kx`.
pub fn riccati_oracle(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = q.clone();
    for _ in 0..1_000_000 {
        let s = r + b.transpose() * &p * b;
        let gain = s.clone().lu().solve(&(b.transpose() * &p * a)).unwrap();
        let next = q + a.transpose() * &p * a - a.transpose() * &p * b * &gain;
        let delta = (&next - &p).amax();
        p = (&next + next.transpose()) * 0.5;
        if delta < 1e-13 * p.amax().max(1.0) {
            break;
        }
    }
    let s = r + b.transpose() * &p * b;
    -s.lu().solve(&(b.transpose() * &p * a)).unwrap()
}

/// Jeffreys value through eigenvalues `λ` of `Γ_data^{-1/2} Γ_des Γ_data^{-1/2}`:
/// `Σ λ + 1/λ`.
pub fn jeffreys_by_eigen(des: &DMatrix<f64>, data: &DMatrix<f64>) -> f64 {
    let eig = data.clone().symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let m = &inv_sqrt * des * &inv_sqrt;
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigen().eigenvalues.iter().map(|l| l + 1.0 / l).sum()
}

/// Central differences of the benchmark step in `(x₁, x₂, u)`.
pub fn benchmark_fd(x: [f64; 2], u: f64, theta: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let f = |x: [f64; 2], u: f64| benchmark_step(x, u, [0.0, 0.0], theta);
    let mut a = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(xp, u), f(xm, u));
        for i in 0..2 {
            a[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let h = 1e-6 * u.abs().max(1.0);
    let (fp, fm) = (f(x, u + h), f(x, u - h));
    let b = [(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)];
    (a, b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// `GGᵀ + floor·I`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

/// A random matrix rescaled to spectral radius `rho`.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> DMatrix<f64> {
    let m = gaussian_matrix(rng, n, n);
    let r = spectral_radius(&m);
    m * (rho / r.max(1e-12))
}

/// A small random instance for the certificate and feasibility suites:
/// vertices are perturbations of a nominal `(A₀, B₀)`.
pub struct Instance {
    pub inclusion: DifferenceInclusion,
    pub weights: CostWeights,
    pub noise: NoiseSpec,
    pub data: DataSummary,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let rx = rng.random_range(1..=4usize);
    let ru = rng.random_range(1..=2usize.min(rx));
    let n = rng.random_range(1..=20usize);
    let rho = rng.random_range(0.5..1.1);
    let spread = rng.random_range(0.0..0.15);
    let a0 = random_stable(rng, rx, rho);
    let b0 = gaussian_matrix(rng, rx, ru);
    let vertices = (0..n)
        .map(|_| {
            let a = &a0 + gaussian_matrix(rng, rx, rx) * spread;
            let b = &b0 + gaussian_matrix(rng, rx, ru) * spread;
            VertexSystem::new(a, b)
        })
        .collect();
    let q = random_pd(rng, rx, 0.1);
    let r = random_pd(rng, ru, 0.1);
    let w = random_pd(rng, rx, 0.05) * 0.2;
    let v = random_pd(rng, ru, 0.05) * 0.2;
    let gamma = random_pd(rng, rx + ru, 0.2);
    Instance {
        inclusion: DifferenceInclusion::new(vertices).unwrap(),
        weights: CostWeights::new(q, r).unwrap(),
        noise: NoiseSpec::new(w, v).unwrap(),
        data: DataSummary::from_moments(
            gamma.view((0, 0), (rx, rx)).into_owned(),
            gamma.view((0, rx), (rx, ru)).into_owned(),
            gamma.view((rx, rx), (ru, ru)).into_owned(),
            100,
        )
        .unwrap(),
    }
}

pub fn benchmark_weights() -> CostWeights {
    CostWeights::new(diag(&[1.0, 0.5]), scalar(1.0)).unwrap()
}

pub fn benchmark_noise() -> NoiseSpec {
    NoiseSpec::new(diag(&[0.2, 0.1]), scalar(0.05)).unwrap()
}

pub fn benchmark_data() -> DataSummary {
    DataSummary::from_moments(diag(&[0.5, 0.5]), DMatrix::zeros(2, 1), scalar(0.5), 500).unwrap()
}

pub fn benchmark_origin() -> DifferenceInclusion {
    DifferenceInclusion::single(
        DMatrix::from_row_slice(2, 2, &[0.98, 0.1, 0.0, 0.95]),
        DMatrix::from_row_slice(2, 1, &[0.0, 0.1]),
    )
    .unwrap()
}

/// The relaxed Jeffreys regularizer at `(K, Σ)` with the auxiliary variables
/// eliminated: `tr(Γ_data⁻¹Γ_des) + tr(V⁻¹ E Σ⁻¹ Eᵀ) + tr(Σ_data Σ⁻¹)` with
/// `E = KΣ − H_dataᵀ Σ_data⁻¹ Σ`.
pub fn relaxed_regularizer(k: &DMatrix<f64>, sigma: &DMatrix<f64>, v: &DMatrix<f64>, data: &DataSummary) -> f64 {
    let rx = sigma.nrows();
    let ru = v.nrows();
    let mut des = DMatrix::zeros(rx + ru, rx + ru);
    des.view_mut((0, 0), (rx, rx)).copy_from(sigma);
    let ks = k * sigma;
    des.view_mut((rx, 0), (ru, rx)).copy_from(&ks);
    des.view_mut((0, rx), (rx, ru)).copy_from(&ks.transpose());
    des.view_mut((rx, rx), (ru, ru)).copy_from(&(&ks * k.transpose() + v));
    let gamma = data.gamma();
    let sigma_inv = sigma.clone().try_inverse().unwrap();
    let sd_inv = data.sigma.clone().try_inverse().unwrap();
    let e = &ks - data.cross.transpose() * &sd_inv * sigma;
    let v_inv = v.clone().try_inverse().unwrap();
    (gamma.try_inverse().unwrap() * des).trace()
        + (v_inv * &e * &sigma_inv * e.transpose()).trace()
        + (&data.sigma * &sigma_inv).trace()
}
