//! Symbolic semidefinite programs over matrix variables.
//!
//! Constraints are affine symmetric matrix expressions required to be PSD.
//! Expressions are sums of `left · V · right` (or `left · Vᵀ · right`) terms
//! plus a constant, which is enough for every LMI family used here and
//! lowers directly to standard-form PSD cones.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarShape {
    Symmetric(usize),
    Dense(usize, usize),
}

impl VarShape {
    pub fn rows(self) -> usize {
        match self {
            VarShape::Symmetric(n) => n,
            VarShape::Dense(r, _) => r,
        }
    }

    pub fn cols(self) -> usize {
        match self {
            VarShape::Symmetric(n) => n,
            VarShape::Dense(_, c) => c,
        }
    }

    /// Number of scalar degrees of freedom.
    pub fn dof(self) -> usize {
        match self {
            VarShape::Symmetric(n) => n * (n + 1) / 2,
            VarShape::Dense(r, c) => r * c,
        }
    }

    /// Basis coordinates as `(i, j)` index pairs. For symmetric variables the
    /// coordinate `(i, j)` with `i < j` stands for `eᵢeⱼᵀ + eⱼeᵢᵀ`.
    pub fn coordinates(self) -> Vec<(usize, usize)> {
        match self {
            VarShape::Symmetric(n) => (0..n).flat_map(|j| (0..=j).map(move |i| (i, j))).collect(),
            VarShape::Dense(r, c) => (0..c).flat_map(|j| (0..r).map(move |i| (i, j))).collect(),
        }
    }

    pub fn basis(self, (i, j): (usize, usize)) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.rows(), self.cols());
        e[(i, j)] = 1.0;
        if matches!(self, VarShape::Symmetric(_)) {
            e[(j, i)] = 1.0;
        }
        e
    }

    /// Reassembles a matrix from coordinate values.
    pub fn from_coordinates(self, coords: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for (&(i, j), &val) in self.coordinates().iter().zip(coords) {
            m[(i, j)] = val;
            if matches!(self, VarShape::Symmetric(_)) {
                m[(j, i)] = val;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub shape: VarShape,
}

/// `left · V · right`, or `left · Vᵀ · right` when `transposed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub left: DMatrix<f64>,
    pub var: VarId,
    pub transposed: bool,
    pub right: DMatrix<f64>,
}

impl Term {
    fn apply(&self, value: &DMatrix<f64>) -> DMatrix<f64> {
        if self.transposed {
            &self.left * value.transpose() * &self.right
        } else {
            &self.left * value * &self.right
        }
    }

    /// The term evaluated at the basis element of coordinate `(i, j)`.
    fn apply_basis(&self, shape: VarShape, (i, j): (usize, usize)) -> DMatrix<f64> {
        let (i, j) = if self.transposed { (j, i) } else { (i, j) };
        let mut out = self.left.column(i) * self.right.row(j);
        if matches!(shape, VarShape::Symmetric(_)) && i != j {
            out += self.left.column(j) * self.right.row(i);
        }
        out
    }
}

/// Affine matrix-valued expression in the problem variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: DMatrix<f64>,
    pub terms: Vec<Term>,
}

impl AffineExpr {
    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: Vec::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    /// `m · self`.
    pub fn lmul(mut self, m: &DMatrix<f64>) -> Self {
        self.constant = m * &self.constant;
        for t in &mut self.terms {
            t.left = m * &t.left;
        }
        self
    }

    /// `self · m`.
    pub fn rmul(mut self, m: &DMatrix<f64>) -> Self {
        self.constant = &self.constant * m;
        for t in &mut self.terms {
            t.right = &t.right * m;
        }
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.left *= s;
        }
        self
    }

    pub fn t(self) -> Self {
        Self {
            constant: self.constant.transpose(),
            terms: self
                .terms
                .into_iter()
                .map(|t| Term {
                    left: t.right.transpose(),
                    var: t.var,
                    transposed: !t.transposed,
                    right: t.left.transpose(),
                })
                .collect(),
        }
    }

    /// `[top; bottom]`.
    pub fn vstack(top: Self, bottom: Self) -> Result<Self> {
        if top.cols() != bottom.cols() {
            return Err(Error::Dimension(format!(
                "vstack of {} and {} columns",
                top.cols(),
                bottom.cols()
            )));
        }
        let (r1, r2) = (top.rows(), bottom.rows());
        let up = selector(r1 + r2, 0, r1);
        let down = selector(r1 + r2, r1, r2);
        Ok(top.lmul(&up) + bottom.lmul(&down))
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().map(|t| t.var)
    }

    pub fn eval(&self, values: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            out += t.apply(&values[t.var.0]);
        }
        out
    }

    /// Linear part evaluated at one basis coordinate of `var`.
    pub fn coefficient(&self, var: VarId, shape: VarShape, coord: (usize, usize)) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows(), self.cols());
        for t in self.terms.iter().filter(|t| t.var == var) {
            out += t.apply_basis(shape, coord);
        }
        out
    }

    fn check_same_shape(&self, other: &Self, op: &str) {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "shape mismatch in expression {op}"
        );
    }
}

/// Rows `offset..offset+len` of an `n`-row identity, transposed into an
/// `n × len` embedding.
fn selector(n: usize, offset: usize, len: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, len);
    for i in 0..len {
        p[(offset + i, i)] = 1.0;
    }
    p
}

impl Add for AffineExpr {
    type Output = AffineExpr;

    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.check_same_shape(&rhs, "+");
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;

    fn neg(self) -> AffineExpr {
        self.scale(-1.0)
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;

    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

impl Add<&DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;

    fn add(mut self, rhs: &DMatrix<f64>) -> AffineExpr {
        self.constant += rhs;
        self
    }
}

impl Sub<&DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;

    fn sub(mut self, rhs: &DMatrix<f64>) -> AffineExpr {
        self.constant -= rhs;
        self
    }
}

/// `expr ⪰ margin · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmi {
    pub label: String,
    pub expr: AffineExpr,
    pub margin: f64,
}

impl Lmi {
    pub fn psd(label: impl Into<String>, expr: AffineExpr) -> Result<Self> {
        if expr.rows() != expr.cols() {
            return Err(Error::Dimension(format!(
                "LMI expression is {}x{}",
                expr.rows(),
                expr.cols()
            )));
        }
        Ok(Self {
            label: label.into(),
            expr,
            margin: 0.0,
        })
    }

    /// `[[a, b], [bᵀ, d]] ⪰ 0`. The lower-left block is generated from `b`,
    /// so the result is symmetric whenever `a` and `d` are.
    pub fn block2(label: impl Into<String>, a: AffineExpr, b: AffineExpr, d: AffineExpr) -> Result<Self> {
        let (n1, n2) = (a.rows(), d.rows());
        if a.cols() != n1 || d.cols() != n2 || b.rows() != n1 || b.cols() != n2 {
            return Err(Error::Dimension(format!(
                "block LMI with diagonal blocks {}x{}, {}x{} and off-diagonal {}x{}",
                a.rows(),
                a.cols(),
                d.rows(),
                d.cols(),
                b.rows(),
                b.cols()
            )));
        }
        let n = n1 + n2;
        let p1 = selector(n, 0, n1);
        let p2 = selector(n, n1, n2);
        let p1t = p1.transpose();
        let p2t = p2.transpose();
        let expr = a.lmul(&p1).rmul(&p1t)
            + b.clone().lmul(&p1).rmul(&p2t)
            + b.t().lmul(&p2).rmul(&p1t)
            + d.lmul(&p2).rmul(&p2t);
        Self::psd(label, expr)
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn dim(&self) -> usize {
        self.expr.rows()
    }

    /// Minimum eigenvalue of `expr - margin·I` at `values`.
    pub fn residual(&self, values: &[DMatrix<f64>]) -> f64 {
        min_eigenvalue(&self.expr.eval(values)) - self.margin
    }
}

/// `tr(coeff · V)` (or `tr(coeff · Vᵀ)`).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerm {
    pub coeff: DMatrix<f64>,
    pub var: VarId,
    pub transposed: bool,
}

impl CostTerm {
    pub fn eval(&self, value: &DMatrix<f64>) -> f64 {
        if self.transposed {
            (&self.coeff * value.transpose()).trace()
        } else {
            (&self.coeff * value).trace()
        }
    }

    fn coefficient(&self, shape: VarShape, (i, j): (usize, usize)) -> f64 {
        let (i, j) = if self.transposed { (j, i) } else { (i, j) };
        let mut c = self.coeff[(j, i)];
        if matches!(shape, VarShape::Symmetric(_)) && i != j {
            c += self.coeff[(i, j)];
        }
        c
    }
}

/// Minimize an affine trace cost subject to LMI blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    variables: Vec<Variable>,
    cost: Vec<CostTerm>,
    cost_constant: f64,
    constraints: Vec<Lmi>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.add_variable(name, VarShape::Symmetric(n))
    }

    pub fn add_dense(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.add_variable(name, VarShape::Dense(rows, cols))
    }

    fn add_variable(&mut self, name: &str, shape: VarShape) -> VarId {
        assert!(self.variable_id(name).is_none(), "duplicate variable name {name}");
        self.variables.push(Variable {
            name: name.to_string(),
            shape,
        });
        VarId(self.variables.len() - 1)
    }

    /// The expression consisting of the variable alone.
    pub fn var(&self, id: VarId) -> AffineExpr {
        let shape = self.variables[id.0].shape;
        AffineExpr {
            constant: DMatrix::zeros(shape.rows(), shape.cols()),
            terms: vec![Term {
                left: DMatrix::identity(shape.rows(), shape.rows()),
                var: id,
                transposed: false,
                right: DMatrix::identity(shape.cols(), shape.cols()),
            }],
        }
    }

    pub fn add_cost(&mut self, coeff: DMatrix<f64>, var: VarId) {
        let shape = self.variables[var.0].shape;
        assert_eq!(
            (coeff.nrows(), coeff.ncols()),
            (shape.cols(), shape.rows()),
            "cost coefficient shape"
        );
        self.cost.push(CostTerm {
            coeff,
            var,
            transposed: false,
        });
    }

    pub fn add_cost_constant(&mut self, c: f64) {
        self.cost_constant += c;
    }

    pub fn add_constraint(&mut self, lmi: Lmi) {
        self.constraints.push(lmi);
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Lmi] {
        &self.constraints
    }

    pub fn cost_terms(&self) -> &[CostTerm] {
        &self.cost
    }

    pub fn cost_constant(&self) -> f64 {
        self.cost_constant
    }

    pub fn variable_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    /// Orders named values by variable id.
    pub fn values_by_id(&self, values: &BTreeMap<String, DMatrix<f64>>) -> Result<Vec<DMatrix<f64>>> {
        self.variables
            .iter()
            .map(|v| {
                let m = values
                    .get(&v.name)
                    .ok_or_else(|| Error::Invalid(format!("missing value for {}", v.name)))?;
                if m.shape() != (v.shape.rows(), v.shape.cols()) {
                    return Err(Error::Dimension(format!("value for {}", v.name)));
                }
                Ok(m.clone())
            })
            .collect()
    }

    pub fn evaluate_cost(&self, values: &[DMatrix<f64>]) -> f64 {
        self.cost_constant + self.cost.iter().map(|t| t.eval(&values[t.var.0])).sum::<f64>()
    }

    /// Per-constraint `(label, λ_min(expr) - margin)`.
    pub fn residuals(&self, values: &[DMatrix<f64>]) -> Vec<(String, f64)> {
        self.constraints
            .iter()
            .map(|c| (c.label.clone(), c.residual(values)))
            .collect()
    }

    /// Linear cost coefficient of one coordinate of `var`.
    pub fn cost_coefficient(&self, var: VarId, coord: (usize, usize)) -> f64 {
        let shape = self.variables[var.0].shape;
        self.cost
            .iter()
            .filter(|t| t.var == var)
            .map(|t| t.coefficient(shape, coord))
            .sum()
    }

    /// Checks the structural invariants: every variable is used, and every
    /// constraint expression is symmetric.
    pub fn validate(&self) -> Result<()> {
        for (idx, v) in self.variables.iter().enumerate() {
            let id = VarId(idx);
            let used = self.cost.iter().any(|t| t.var == id)
                || self.constraints.iter().any(|c| c.expr.variables().any(|x| x == id));
            if !used {
                return Err(Error::Invalid(format!("variable {} is unused", v.name)));
            }
        }
        for c in &self.constraints {
            let asym = |m: &DMatrix<f64>| {
                let scale = 1.0 + m.amax();
                (m - m.transpose()).amax() > 1e-12 * scale
            };
            if asym(&c.expr.constant) {
                return Err(Error::Invalid(format!("constraint {} is not symmetric", c.label)));
            }
            for id in c.expr.variables() {
                let shape = self.variables[id.0].shape;
                for coord in shape.coordinates() {
                    if asym(&c.expr.coefficient(id, shape, coord)) {
                        return Err(Error::Invalid(format!(
                            "constraint {} is not symmetric in {}",
                            c.label, self.variables[id.0].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
