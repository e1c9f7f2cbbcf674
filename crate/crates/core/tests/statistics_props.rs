mod common;

use common::{gaussian_matrix, jeffreys_by_eigen, lyapunov_series, random_pd, random_stable, rng};
use dclqr::linalg::{min_eigenvalue, spectral_radius};
use dclqr::simulation::GaussianStream;
use dclqr::statistics::{design_covariance, jeffreys_objective, lyapunov_gramian, summarize};
use dclqr::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #[test]
    fn jeffreys_at_equality_is_twice_dimension(d in 1usize..=8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_pd(&mut r, d, 0.05);
        let f = jeffreys_objective(&g, &g).unwrap();
        prop_assert!((f - 2.0 * d as f64).abs() < 1e-10, "F = {f}");
    }

    #[test]
    fn jeffreys_bounded_below_and_matches_eigen_form(d in 1usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_pd(&mut r, d, 0.1);
        let b = random_pd(&mut r, d, 0.1);
        let f = jeffreys_objective(&a, &b).unwrap();
        prop_assert!(f >= 2.0 * d as f64 - 1e-10);
        let oracle = jeffreys_by_eigen(&a, &b);
        prop_assert!((f - oracle).abs() <= 1e-10 * oracle.max(1.0), "{f} vs {oracle}");
    }

    #[test]
    fn jeffreys_congruence_invariance(d in 1usize..=5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_pd(&mut r, d, 0.1);
        let b = random_pd(&mut r, d, 0.1);
        let t = gaussian_matrix(&mut r, d, d) + DMatrix::identity(d, d) * 2.0;
        prop_assume!(t.clone().try_inverse().is_some());
        let f = jeffreys_objective(&a, &b).unwrap();
        let g = jeffreys_objective(&(&t * &a * t.transpose()), &(&t * &b * t.transpose())).unwrap();
        prop_assert!((f - g).abs() <= 1e-7 * f, "{f} vs {g}");
    }

    #[test]
    fn lyapunov_matches_series(rx in 1usize..=4, ru in 1usize..=2, rho in 0.0f64..0.95, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_stable(&mut r, rx, rho);
        let b = gaussian_matrix(&mut r, rx, ru);
        let v = random_pd(&mut r, ru, 0.05);
        let w = random_pd(&mut r, rx, 0.0) * 0.5;
        let k = DMatrix::zeros(ru, rx);
        let sigma = lyapunov_gramian(&a, &b, &k, &v, &w).unwrap();
        let n = &b * &v * b.transpose() + &w;
        let oracle = lyapunov_series(&a, &n, 200_000);
        let scale = oracle.amax().max(1.0);
        prop_assert!((&sigma - &oracle).amax() <= 1e-9 * scale);
        let residual = &sigma - &a * &sigma * a.transpose() - &n;
        prop_assert!(residual.amax() <= 1e-9 * scale);
    }

    #[test]
    fn design_covariance_is_pd(rx in 1usize..=4, ru in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = random_pd(&mut r, rx, 0.1);
        let k = gaussian_matrix(&mut r, ru, rx);
        let v = random_pd(&mut r, ru, 0.1);
        let g = design_covariance(&sigma, &k, &v).unwrap();
        prop_assert!(min_eigenvalue(&g) > 0.0);
    }

    #[test]
    fn summary_equals_stacked_moment(
        samples in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..40),
    ) {
        let xs: Vec<_> = samples.iter().map(|s| DVector::from_vec(vec![s.0, s.1])).collect();
        let us: Vec<_> = samples.iter().map(|s| DVector::from_vec(vec![s.2])).collect();
        let summary = summarize(&xs, &us).unwrap();
        let mut stacked = DMatrix::zeros(3, 3);
        for s in &samples {
            let z = DVector::from_vec(vec![s.0, s.1, s.2]);
            stacked += &z * z.transpose();
        }
        stacked /= samples.len() as f64;
        prop_assert!((summary.gamma() - stacked).amax() <= 1e-12 * 25.0);
        prop_assert_eq!(summary.count, samples.len());
    }
}

#[test]
fn lyapunov_random_closed_loops() {
    let mut r = rng(7);
    for _ in 0..30 {
        let a = gaussian_matrix(&mut r, 3, 3) * 0.4;
        let b = gaussian_matrix(&mut r, 3, 1);
        let k = gaussian_matrix(&mut r, 1, 3) * 0.2;
        let m = &a + &b * &k;
        if spectral_radius(&m) >= 0.97 {
            continue;
        }
        let v = DMatrix::from_element(1, 1, 0.3);
        let w = random_pd(&mut r, 3, 0.01);
        let sigma = lyapunov_gramian(&a, &b, &k, &v, &w).unwrap();
        let oracle = lyapunov_series(&m, &(&b * &v * b.transpose() + &w), 200_000);
        assert!((&sigma - &oracle).amax() <= 1e-9 * oracle.amax().max(1.0));
    }
}

#[test]
fn lyapunov_unstable_closed_loop_is_an_error() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let err = lyapunov_gramian(&one, &one, &DMatrix::from_element(1, 1, 0.1), &one, &one).unwrap_err();
    assert!(matches!(err, Error::UnstableClosedLoop(_)));
}

#[test]
fn jeffreys_scalar_example() {
    let f = jeffreys_objective(&DMatrix::from_element(1, 1, 2.0), &DMatrix::from_element(1, 1, 1.0)).unwrap();
    assert!((f - 2.5).abs() < 1e-15);
}

#[test]
fn jeffreys_rejects_singular() {
    let z = DMatrix::zeros(2, 2);
    assert!(jeffreys_objective(&z, &DMatrix::identity(2, 2)).is_err());
    assert!(jeffreys_objective(&DMatrix::identity(2, 2), &z).is_err());
}

#[test]
fn summary_converges_to_sampling_covariance() {
    let mut g = GaussianStream::new(2024, 0);
    let root = DMatrix::identity(3, 3) * 0.5f64.sqrt();
    let n = 1_000_000;
    let (mut xs, mut us) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let z = g.correlated(&root);
        xs.push(z.rows(0, 2).into_owned());
        us.push(z.rows(2, 1).into_owned());
    }
    let s = summarize(&xs, &us).unwrap();
    assert!((s.sigma - DMatrix::identity(2, 2) * 0.5).amax() < 1e-2);
    assert!((s.input[(0, 0)] - 0.5).abs() < 1e-2);
    assert!(s.cross.amax() < 1e-2);
}
