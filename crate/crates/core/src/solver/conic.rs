//! Standard-form lowering: `min cᵀy + c₀` s.t. `S_b = C_b + Σᵢ yᵢ A_{b,i} ⪰ 0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::sdp::{SdpProblem, VarId};

#[derive(Debug, Clone)]
pub struct ConicBlock {
    pub label: String,
    pub constant: DMatrix<f64>,
    /// Nonzero coefficient matrices keyed by scalar coordinate index.
    pub coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl ConicBlock {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.constant.clone();
        for (i, a) in &self.coeffs {
            s += a * y[*i];
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub cost: DVector<f64>,
    pub cost_constant: f64,
    pub blocks: Vec<ConicBlock>,
    /// First scalar coordinate of each problem variable.
    pub offsets: Vec<usize>,
}

impl ConicProblem {
    pub fn from_sdp(problem: &SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(problem.variables().len());
        let mut n = 0;
        for v in problem.variables() {
            offsets.push(n);
            n += v.shape.dof();
        }
        let mut cost = DVector::zeros(n);
        for (idx, v) in problem.variables().iter().enumerate() {
            for (k, coord) in v.shape.coordinates().into_iter().enumerate() {
                cost[offsets[idx] + k] = problem.cost_coefficient(VarId(idx), coord);
            }
        }
        let blocks = problem
            .constraints()
            .iter()
            .map(|lmi| {
                let d = lmi.dim();
                let constant = &lmi.expr.constant - DMatrix::identity(d, d) * lmi.margin;
                let mut ids: Vec<VarId> = lmi.expr.variables().collect();
                ids.sort();
                ids.dedup();
                let mut coeffs = Vec::new();
                for id in ids {
                    let shape = problem.variable(id).shape;
                    for (k, coord) in shape.coordinates().into_iter().enumerate() {
                        let a = lmi.expr.coefficient(id, shape, coord);
                        if a.amax() > 0.0 {
                            coeffs.push((offsets[id.0] + k, (&a + a.transpose()) * 0.5));
                        }
                    }
                }
                ConicBlock {
                    label: lmi.label.clone(),
                    constant: (&constant + constant.transpose()) * 0.5,
                    coeffs,
                }
            })
            .collect();
        Self {
            cost,
            cost_constant: problem.cost_constant(),
            blocks,
            offsets,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn objective(&self, y: &DVector<f64>) -> f64 {
        self.cost.dot(y) + self.cost_constant
    }

    /// SDPA sparse format (`min Σ cᵢxᵢ` s.t. `Σ Fᵢxᵢ − F₀ ⪰ 0`), with
    /// `F₀ = −C_b` and `Fᵢ = A_{b,i}`. Only the upper triangle is written,
    /// indices are 1-based. Leading `*` lines carry the block labels and the
    /// objective constant.
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "* dclqr conic problem");
        let _ = writeln!(out, "* objective constant {:e}", self.cost_constant);
        for (b, blk) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "* block {} {}", b + 1, blk.label);
        }
        let _ = writeln!(out, "{}", self.num_vars());
        let _ = writeln!(out, "{}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.dim().to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let costs: Vec<String> = self.cost.iter().map(|c| format!("{c:e}")).collect();
        let _ = writeln!(out, "{}", costs.join(" "));
        for (b, blk) in self.blocks.iter().enumerate() {
            write_triplets(&mut out, 0, b + 1, &(-&blk.constant));
            for (i, a) in &blk.coeffs {
                write_triplets(&mut out, i + 1, b + 1, a);
            }
        }
        out
    }
}

fn write_triplets(out: &mut String, mat: usize, blk: usize, m: &DMatrix<f64>) {
    for j in 0..m.ncols() {
        for i in 0..=j {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{mat} {blk} {} {} {v:e}", i + 1, j + 1);
            }
        }
    }
}
