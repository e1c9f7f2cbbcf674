mod common;

use common::{lyapunov_series, random_pd, random_stable, rng};
use dclqr::sdp::{assemble_robust_lqr, Lmi, SdpProblem};
use dclqr::solver::{solve, SolveStatus, SolverConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn trace_above(m: &DMatrix<f64>) -> SdpProblem {
    let n = m.nrows();
    let mut p = SdpProblem::new();
    let s = p.add_symmetric("S", n);
    p.add_cost(DMatrix::identity(n, n), s);
    p.add_constraint(Lmi::psd("above", p.var(s) - m).unwrap());
    p
}

fn lyapunov_program(m: &DMatrix<f64>, noise: &DMatrix<f64>) -> SdpProblem {
    let n = m.nrows();
    let mut p = SdpProblem::new();
    let s = p.add_symmetric("S", n);
    p.add_cost(DMatrix::identity(n, n), s);
    let expr = p.var(s) - p.var(s).lmul(m).rmul(&m.transpose()) - noise;
    p.add_constraint(Lmi::psd("lyapunov", expr).unwrap());
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_minimization_returns_lower_bound(n in 1usize..=4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_pd(&mut r, n, 0.0);
        let sol = solve(&trace_above(&m), &SolverConfig::default()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let s = sol.value("S").unwrap();
        prop_assert!((s - &m).amax() <= 1e-6 * m.amax().max(1.0), "{}", (s - &m).amax());
        prop_assert!((sol.objective - m.trace()).abs() <= 1e-6 * m.trace().max(1.0));
    }

    #[test]
    fn lyapunov_program_matches_series(n in 1usize..=3, rho in 0.0f64..0.9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_stable(&mut r, n, rho);
        let noise = random_pd(&mut r, n, 0.1);
        let sol = solve(&lyapunov_program(&m, &noise), &SolverConfig::default()).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        let oracle = lyapunov_series(&m, &noise, 100_000);
        let err = (sol.value("S").unwrap() - &oracle).amax();
        prop_assert!(err <= 1e-5 * oracle.amax().max(1.0), "error {err}");
    }

    #[test]
    fn objective_matches_reevaluation_and_audit(seed in 0u64..1_000) {
        let mut r = rng(seed);
        let inst = common::random_instance(&mut r);
        let p = assemble_robust_lqr(&inst.inclusion, &inst.weights, &inst.noise).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve(&p, &cfg).unwrap();
        if sol.status.is_usable() {
            let values = p.values_by_id(&sol.values).unwrap();
            let cost = p.evaluate_cost(&values);
            prop_assert!((cost - sol.objective).abs() <= 1e-6 * cost.abs().max(1.0));
            for (label, res) in p.residuals(&values) {
                prop_assert!(res >= -cfg.feasibility_margin, "{label}: {res}");
            }
        }
    }
}

#[test]
fn repeated_solves_are_identical() {
    let mut r = rng(99);
    let inst = common::random_instance(&mut r);
    let p = assemble_robust_lqr(&inst.inclusion, &inst.weights, &inst.noise).unwrap();
    let a = solve(&p, &SolverConfig::default()).unwrap();
    let b = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.values, b.values);
}

#[test]
fn infeasible_reports_status_not_large_objective() {
    // S ⪰ I and −S ⪰ 0 cannot hold together
    let mut p = SdpProblem::new();
    let s = p.add_symmetric("S", 2);
    p.add_cost(DMatrix::identity(2, 2), s);
    p.add_constraint(Lmi::psd("lower", p.var(s) - &DMatrix::identity(2, 2)).unwrap());
    p.add_constraint(Lmi::psd("upper", -p.var(s)).unwrap());
    let sol = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(!sol.message.is_empty());
}
