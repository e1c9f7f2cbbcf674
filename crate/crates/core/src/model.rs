//! Plants, polytopic difference inclusions and vertex construction from
//! Jacobian grids.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_shape, from_rows, to_rows};

/// A discrete-time plant `x⁺ = f(x, u, w)` with additive process noise `w`.
///
/// Implementations must be stateless (or internally synchronized); the
/// simulation harness shares plants across threads.
pub trait Plant: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;

    /// `(∂f/∂x, ∂f/∂u)` at `(x, u)` with `w = 0`.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);

    fn dims(&self) -> (usize, usize) {
        (self.state_dim(), self.input_dim())
    }
}

/// Two-state benchmark plant
///
/// ```text
/// x1⁺ = .98 x1 + .1 x2 + θ x2²
/// x2⁺ = .95 x2 + (0.1 + θ tanh x1) u
/// ```
/// plus additive noise. With `θ = 0` it is linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlant {
    pub theta: f64,
}

impl Default for BenchmarkPlant {
    fn default() -> Self {
        Self { theta: 1.0 / 6.0 }
    }
}

impl BenchmarkPlant {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }
}

pub fn benchmark_step(x: [f64; 2], u: f64, w: [f64; 2], theta: f64) -> [f64; 2] {
    [
        0.98 * x[0] + 0.1 * x[1] + theta * x[1] * x[1] + w[0],
        0.95 * x[1] + (0.1 + theta * x[0].tanh()) * u + w[1],
    ]
}

/// Returns `(A, B)` in row-major order: `A = [[a11, a12], [a21, a22]]`,
/// `B = [b1, b2]`.
pub fn benchmark_jacobians(x: [f64; 2], u: f64, theta: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let t = x[0].tanh();
    (
        [[0.98, 0.1 + 2.0 * theta * x[1]], [theta * (1.0 - t * t) * u, 0.95]],
        [0.0, 0.1 + theta * t],
    )
}

impl Plant for BenchmarkPlant {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let next = benchmark_step([x[0], x[1]], u[0], [w[0], w[1]], self.theta);
        DVector::from_column_slice(&next)
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (a, b) = benchmark_jacobians([x[0], x[1]], u[0], self.theta);
        (
            DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]),
            DMatrix::from_column_slice(2, 1, &b),
        )
    }
}

/// `x⁺ = A x + B u + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearPlant {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        ensure_shape("A", &a, n, n)?;
        ensure_shape("B", &b, n, b.ncols())?;
        Ok(Self { a, b })
    }
}

impl Plant for LinearPlant {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + w
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }
}

/// One vertex `(Aᵢ, Bᵢ)` of a difference inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl VertexSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        Self { a, b }
    }

    /// `A + B K`.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * k
    }
}

/// Convex hull of a nonempty list of linear systems sharing dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceInclusion {
    vertices: Vec<VertexSystem>,
    state_dim: usize,
    input_dim: usize,
}

impl DifferenceInclusion {
    pub fn new(vertices: Vec<VertexSystem>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::Invalid("difference inclusion needs at least one vertex".into()))?;
        let (rx, ru) = (first.a.nrows(), first.b.ncols());
        if rx == 0 || ru == 0 {
            return Err(Error::Dimension("state and input dimensions must be positive".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            ensure_shape(&format!("A[{i}]"), &v.a, rx, rx)?;
            ensure_shape(&format!("B[{i}]"), &v.b, rx, ru)?;
        }
        Ok(Self {
            vertices,
            state_dim: rx,
            input_dim: ru,
        })
    }

    pub fn single(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![VertexSystem::new(a, b)])
    }

    pub fn vertices(&self) -> &[VertexSystem] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
}

/// A grid point `(x̄ⁱ, ūⁱ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub state: DVector<f64>,
    pub input: DVector<f64>,
}

/// Linearizes `plant` at every grid point, in order. Duplicates are kept.
pub fn vertices_from_grid(plant: &dyn Plant, grid: &[GridPoint]) -> Result<DifferenceInclusion> {
    if grid.is_empty() {
        return Err(Error::Invalid("grid must contain at least one point".into()));
    }
    let (rx, ru) = plant.dims();
    let vertices = grid
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.state.len() != rx || p.input.len() != ru {
                return Err(Error::Dimension(format!(
                    "grid point {i} has state dim {} and input dim {}, plant expects {rx} and {ru}",
                    p.state.len(),
                    p.input.len()
                )));
            }
            let (a, b) = plant.jacobians(&p.state, &p.input);
            Ok(VertexSystem::new(a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    DifferenceInclusion::new(vertices)
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRecord {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexFile {
    r_x: usize,
    r_u: usize,
    vertices: Vec<VertexRecord>,
}

pub fn parse_vertices(text: &str) -> Result<DifferenceInclusion> {
    let file: VertexFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("vertex file: {e}")))?;
    let vertices = file
        .vertices
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let a = from_rows(&format!("vertices[{i}].A"), &rec.a)?;
            let b = from_rows(&format!("vertices[{i}].B"), &rec.b)?;
            ensure_shape(&format!("vertices[{i}].A"), &a, file.r_x, file.r_x)?;
            ensure_shape(&format!("vertices[{i}].B"), &b, file.r_x, file.r_u)?;
            Ok(VertexSystem::new(a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    DifferenceInclusion::new(vertices)
}

pub fn load_vertices(path: impl AsRef<Path>) -> Result<DifferenceInclusion> {
    parse_vertices(&fs::read_to_string(path)?)
}

pub fn vertices_to_json(inc: &DifferenceInclusion) -> Result<String> {
    let file = VertexFile {
        r_x: inc.state_dim(),
        r_u: inc.input_dim(),
        vertices: inc
            .vertices()
            .iter()
            .map(|v| VertexRecord {
                a: to_rows(&v.a),
                b: to_rows(&v.b),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn save_vertices(inc: &DifferenceInclusion, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, vertices_to_json(inc)?)?;
    Ok(())
}
