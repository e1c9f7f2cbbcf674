//! Small dense linear-algebra helpers shared by the statistics, assembly and
//! solver modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold for positive-definiteness checks.
pub const PD_REL_THRESHOLD: f64 = 1e-10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Positive-definite test: `λ_min > 1e-10 · (1 + λ_max)` on the symmetrized
/// matrix.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let ev = sym_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => lo > PD_REL_THRESHOLD * (1.0 + hi.abs()),
        _ => false,
    }
}

pub fn ensure_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_pd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{name} must be square")));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid(format!("{name} has non-finite entries")));
    }
    if is_positive_definite(m) {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            name: name.to_string(),
            min_eig: min_eigenvalue(m),
        })
    }
}

pub fn ensure_psd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{name} must be square")));
    }
    let ev = sym_eigenvalues(m);
    let hi = ev.last().copied().unwrap_or(0.0).abs();
    let lo = ev.first().copied().unwrap_or(0.0);
    if lo >= -PD_REL_THRESHOLD * (1.0 + hi) {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            name: name.to_string(),
            min_eig: lo,
        })
    }
}

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues
/// from round-off are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// 2-norm condition number of a symmetric positive definite matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Builds a matrix from row-major nested rows, rejecting ragged input.
pub fn from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "{name}: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Block-diagonal composition of two matrices.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut out = DMatrix::zeros(n, m);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Assembles `[[a, b], [bᵀ, d]]`.
pub fn sym_block2(a: &DMatrix<f64>, b: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + d.nrows();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out.view_mut((a.nrows(), 0), (b.ncols(), b.nrows()))
        .copy_from(&b.transpose());
    out.view_mut((a.nrows(), a.ncols()), d.shape()).copy_from(d);
    out
}
