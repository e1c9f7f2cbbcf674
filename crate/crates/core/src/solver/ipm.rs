//! Infeasible primal-dual path-following method for block-diagonal LMI
//! problems.
//!
//! Works on the pair
//!
//! ```text
//! (P)  min  cᵀy          s.t.  S_b = C_b + Σᵢ yᵢ A_{b,i} ⪰ 0
//! (D)  max  −Σ tr(C_b X_b)  s.t.  Σ_b tr(A_{b,i} X_b) = cᵢ,  X_b ⪰ 0
//! ```
//!
//! using the HKM search direction with a Mehrotra predictor-corrector. The
//! Schur complement `M_ij = Σ_b tr(A_i X A_j S⁻¹)` is `m × m` with `m` the
//! number of scalar unknowns; each block contributes only through the
//! coordinates that touch it, which keeps many-small-block problems cheap.

use nalgebra::{DMatrix, DVector};

use super::conic::ConicProblem;
use super::{SolveStatus, SolverConfig};
use crate::linalg::min_eigenvalue;

const STEP_FRACTION: f64 = 0.98;
const STALL_STEP: f64 = 1e-7;
const STALL_LIMIT: usize = 4;
const REGULARIZATION: [f64; 4] = [1e-13, 1e-11, 1e-9, 1e-7];
const REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub status: SolveStatus,
    pub y: DVector<f64>,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub message: String,
}

struct Block {
    c: DMatrix<f64>,
    a: Vec<(usize, DMatrix<f64>)>,
}

impl Block {
    fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn combine(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (i, a) in &self.a {
            out += a * y[*i];
        }
        out
    }
}

/// `tr(A B)` for symmetric `A`.
fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `tr(A Bᵀ)` written as an elementwise sum; for general `B` with symmetric
/// `A`, `tr(A B) = Σ A ∘ Bᵀ`.
fn inner_t(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest `α` with `X + α ΔX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol_l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let linv_dx = chol_l
        .solve_lower_triangular(dx)
        .expect("triangular factor is nonsingular");
    let w = chol_l
        .solve_lower_triangular(&linv_dx.transpose())
        .expect("triangular factor is nonsingular");
    let lam = min_eigenvalue(&sym(w));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    pobj: f64,
    dobj: f64,
    mu: f64,
    pinf: f64,
    dinf: f64,
    relgap: f64,
    gap: f64,
    ax_norm: f64,
}

pub(crate) fn interior_point(problem: &ConicProblem, cfg: &SolverConfig) -> IpmOutcome {
    let m = problem.num_vars();
    let cost_scale = problem.cost.amax().max(1.0);
    let c = &problem.cost / cost_scale;
    let blocks: Vec<Block> = problem
        .blocks
        .iter()
        .map(|b| {
            let mut scale = b.constant.norm();
            for (_, a) in &b.coeffs {
                scale = scale.max(a.norm());
            }
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            Block {
                c: &b.constant * s,
                a: b.coeffs.iter().map(|(i, a)| (*i, a * s)).collect(),
            }
        })
        .collect();
    let norm_c = c.norm();
    let norm_big_c = blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt();
    let total_dim: usize = blocks.iter().map(Block::dim).sum();

    let mut y = DVector::zeros(m);
    let mut xs: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    let mut ss: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let d = b.dim() as f64;
        let anorm = b.a.iter().map(|(_, a)| a.norm()).fold(0.0, f64::max);
        let xi =
            b.a.iter()
                .map(|(i, a)| (1.0 + c[*i].abs()) / (1.0 + a.norm()))
                .fold(10.0f64.max(d.sqrt()), f64::max);
        let eta = 10.0f64.max(d.sqrt()).max(1.0 + b.c.norm().max(anorm));
        xs.push(DMatrix::identity(b.dim(), b.dim()) * xi);
        ss.push(DMatrix::identity(b.dim(), b.dim()) * eta);
    }

    let residuals = |y: &DVector<f64>, xs: &[DMatrix<f64>], ss: &[DMatrix<f64>]| {
        let mut ax = DVector::zeros(m);
        let mut rd = Vec::with_capacity(blocks.len());
        let mut dobj = 0.0;
        let mut gap = 0.0;
        for ((b, x), s) in blocks.iter().zip(xs).zip(ss) {
            for (i, a) in &b.a {
                ax[*i] += inner(a, x);
            }
            rd.push(&b.c + b.combine(y) - s);
            dobj -= inner(&b.c, x);
            gap += inner(x, s);
        }
        let rp = &c - &ax;
        let pobj = c.dot(y);
        let rd_norm = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
        Residuals {
            pinf: rd_norm / (1.0 + norm_big_c),
            dinf: rp.norm() / (1.0 + norm_c),
            relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            mu: gap / total_dim.max(1) as f64,
            ax_norm: ax.norm(),
            rp,
            rd,
            pobj,
            dobj,
            gap,
        }
    };

    // Independent check on the unscaled data: every block of the returned
    // point must be PSD up to the feasibility margin.
    let audit = |y: &DVector<f64>| {
        let yu = y.clone();
        problem
            .blocks
            .iter()
            .all(|b| min_eigenvalue(&b.eval(&yu)) >= -cfg.feasibility_margin)
    };
    let converged = |r: &Residuals, factor: f64| {
        r.pinf <= cfg.rel_tol * factor
            && r.dinf <= cfg.rel_tol * factor
            && (r.relgap <= cfg.rel_tol * factor || r.gap <= cfg.abs_tol * factor)
    };
    let finish = |status, y: DVector<f64>, it, r: &Residuals, message: String| IpmOutcome {
        status,
        y,
        iterations: it,
        primal_infeasibility: r.pinf,
        dual_infeasibility: r.dinf,
        relative_gap: r.relgap,
        message,
    };

    // When the iteration breaks down, fall back to the best nearly converged
    // point seen so far.
    let give_up = |best: Option<(DVector<f64>, Residuals)>, y: DVector<f64>, it, r: &Residuals, why: &str| {
        if converged(r, 10.0) && audit(&y) {
            return finish(SolveStatus::NearOptimal, y, it, r, why.to_string());
        }
        match best {
            Some((by, br)) if audit(&by) => finish(SolveStatus::NearOptimal, by, it, &br, why.to_string()),
            _ => finish(SolveStatus::Failed, y, it, r, why.to_string()),
        }
    };
    let score = |r: &Residuals| r.pinf.max(r.dinf).max(r.relgap.min(r.gap));

    let mut best: Option<(DVector<f64>, Residuals)> = None;
    let mut stalled = 0;
    let mut iter = 0;
    loop {
        let r = residuals(&y, &xs, &ss);
        if !(r.mu.is_finite() && r.pobj.is_finite() && r.dobj.is_finite()) {
            return give_up(best.take(), y, iter, &r, "non-finite iterate");
        }
        if converged(&r, 1.0) && audit(&y) {
            return finish(SolveStatus::Optimal, y, iter, &r, String::new());
        }
        if converged(&r, 10.0) && best.as_ref().is_none_or(|(_, b)| score(&r) < score(b)) {
            best = Some((y.clone(), residuals(&y, &xs, &ss)));
        }
        // Certificate of LMI infeasibility: X ⪰ 0, A(X) ≈ 0, tr(C X) < 0.
        if r.dobj > 0.0 && r.ax_norm <= cfg.infeasibility_tol * r.dobj {
            let msg = format!(
                "LMI infeasible: dual ray with tr(CX) = {:.3e}, |A(X)|/tr = {:.3e}",
                -r.dobj,
                r.ax_norm / r.dobj
            );
            return finish(SolveStatus::Infeasible, y, iter, &r, msg);
        }
        // Improving ray for y: Σ yᵢ Aᵢ ⪰ 0 with cᵀy < 0.
        if r.pobj < 0.0 {
            let ray_res: f64 = blocks
                .iter()
                .zip(&r.rd)
                .map(|(b, rd)| (&b.c - rd).norm_squared())
                .sum::<f64>()
                .sqrt();
            if ray_res <= cfg.infeasibility_tol * (-r.pobj) {
                return finish(SolveStatus::Failed, y, iter, &r, "problem is unbounded below".into());
            }
        }
        if iter >= cfg.max_iterations || stalled >= STALL_LIMIT {
            let why = if stalled >= STALL_LIMIT {
                "stalled"
            } else {
                "iteration limit"
            };
            let msg = format!("{why}: pinf {:.2e}, dinf {:.2e}, gap {:.2e}", r.pinf, r.dinf, r.relgap);
            return give_up(best.take(), y, iter, &r, &msg);
        }
        iter += 1;

        let mut s_inv = Vec::with_capacity(blocks.len());
        let mut s_chol = Vec::with_capacity(blocks.len());
        let mut x_chol = Vec::with_capacity(blocks.len());
        for (x, s) in xs.iter().zip(&ss) {
            let (Some(cs), Some(cx)) = (s.clone().cholesky(), x.clone().cholesky()) else {
                return give_up(best.take(), y, iter, &r, "lost positive definiteness");
            };
            s_inv.push(cs.inverse());
            s_chol.push(cs.l());
            x_chol.push(cx.l());
        }

        // Schur complement.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for ((b, x), si) in blocks.iter().zip(&xs).zip(&s_inv) {
            let t: Vec<DMatrix<f64>> = b.a.iter().map(|(_, a)| x * a * si).collect();
            for (p, (i, _)) in b.a.iter().enumerate() {
                for (q, (j, aj)) in b.a.iter().enumerate().skip(p) {
                    let v = inner_t(aj, &t[p]);
                    schur[(*i, *j)] += v;
                    if p != q {
                        schur[(*j, *i)] += v;
                    }
                }
            }
        }
        let schur = sym(schur);
        let diag_max = schur.diagonal().amax().max(1e-300);
        let chol = std::iter::once(0.0)
            .chain(REGULARIZATION.iter().map(|r| r * diag_max))
            .find_map(|reg| (&schur + DMatrix::identity(m, m) * reg).cholesky());
        let Some(chol) = chol else {
            return give_up(best.take(), y, iter, &r, "singular Schur complement");
        };
        let solve_schur = |h: &DVector<f64>| {
            let mut dy = chol.solve(h);
            for _ in 0..REFINEMENT_STEPS {
                let res = h - &schur * &dy;
                dy += chol.solve(&res);
            }
            dy
        };

        let direction = |sigma_mu: f64, corr: Option<&[(DMatrix<f64>, DMatrix<f64>)]>| {
            let mut g = Vec::with_capacity(blocks.len());
            let mut h = -&r.rp;
            for (k, b) in blocks.iter().enumerate() {
                let x = &xs[k];
                let si = &s_inv[k];
                let mut gk = si * sigma_mu - x - x * &r.rd[k] * si;
                if let Some(c) = corr {
                    gk -= &c[k].0 * &c[k].1 * si;
                }
                for (i, a) in &b.a {
                    h[*i] += inner_t(a, &gk);
                }
                g.push(gk);
            }
            let dy = solve_schur(&h);
            let mut dxs = Vec::with_capacity(blocks.len());
            let mut dss = Vec::with_capacity(blocks.len());
            for (k, b) in blocks.iter().enumerate() {
                let da = b.combine(&dy);
                dxs.push(sym(&g[k] - &xs[k] * &da * &s_inv[k]));
                dss.push(&r.rd[k] + da);
            }
            (dy, dxs, dss)
        };
        let steps = |dxs: &[DMatrix<f64>], dss: &[DMatrix<f64>]| {
            let mut ax = f64::INFINITY;
            let mut as_ = f64::INFINITY;
            for k in 0..blocks.len() {
                ax = ax.min(max_step(&x_chol[k], &dxs[k]));
                as_ = as_.min(max_step(&s_chol[k], &dss[k]));
            }
            (ax, as_)
        };

        // Predictor.
        let (_, dxa, dsa) = direction(0.0, None);
        let (ax_max, as_max) = steps(&dxa, &dsa);
        let (apx, aps) = (ax_max.min(1.0), as_max.min(1.0));
        let mut gap_aff = 0.0;
        for k in 0..blocks.len() {
            gap_aff += inner(&(&xs[k] + &dxa[k] * apx), &(&ss[k] + &dsa[k] * aps));
        }
        let mu_aff = gap_aff / total_dim.max(1) as f64;
        let sigma = if r.mu > 0.0 {
            (mu_aff / r.mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let corr: Vec<(DMatrix<f64>, DMatrix<f64>)> = dxa.into_iter().zip(dsa).collect();
        let (dy, dxs, dss) = direction(sigma * r.mu, Some(&corr));
        let (ax_max, as_max) = steps(&dxs, &dss);
        let alpha_x = (STEP_FRACTION * ax_max).min(1.0);
        let alpha_s = (STEP_FRACTION * as_max).min(1.0);
        for k in 0..blocks.len() {
            xs[k] += &dxs[k] * alpha_x;
            ss[k] += &dss[k] * alpha_s;
            xs[k] = sym(xs[k].clone());
            ss[k] = sym(ss[k].clone());
        }
        y += &dy * alpha_s;
        if alpha_x.max(alpha_s) < STALL_STEP {
            stalled += 1;
        } else {
            stalled = 0;
        }
        log::trace!(
            "ipm it {iter}: pobj {:.6e} dobj {:.6e} pinf {:.2e} dinf {:.2e} mu {:.2e} steps {:.3}/{:.3}",
            r.pobj * cost_scale,
            r.dobj * cost_scale,
            r.pinf,
            r.dinf,
            r.mu,
            alpha_x,
            alpha_s
        );
    }
}
