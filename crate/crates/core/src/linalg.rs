//! Symmetric-matrix utilities: construction, spectral summaries, PSD
//! validation and the eigen square-root factor used for sampling.
//!
//! Everything here is dense. Matrices are symmetrized on construction with
//! `(A + Aᵀ)/2`; the largest pre-symmetrization defect is kept so that
//! [`validate_psd`] can report it.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance below zero at which eigenvalues are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// Relative tolerance for invertibility of Γ and D.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Dense symmetric `p × p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
    asymmetry: f64,
}

impl SymMatrix {
    /// Builds from a row-major buffer of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        if data.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, &data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let mut data = Vec::with_capacity(p * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::NotSquare { rows: p, cols: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(p, data)
    }

    /// Symmetrizes `m` and records `max |m - mᵀ|`.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyDimension);
        }
        let p = m.nrows();
        let mut asymmetry = 0.0f64;
        let mut s = m.clone();
        for i in 0..p {
            for j in (i + 1)..p {
                let a = m[(i, j)];
                let b = m[(j, i)];
                asymmetry = asymmetry.max((a - b).abs());
                let avg = 0.5 * (a + b);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(Self { m: s, asymmetry })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
            asymmetry: 0.0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
            asymmetry: 0.0,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(values)),
            asymmetry: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Largest `|A_ij - A_ji|` of the input before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let p = self.dim();
        let mut out = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            m: &self.m * c,
            asymmetry: self.asymmetry * c.abs(),
        }
    }

    /// `self * other * self`, which is symmetric whenever `other` is.
    pub fn sandwich(&self, other: &SymMatrix) -> SymMatrix {
        let prod = &self.m * &other.m * &self.m;
        // roundoff may leave a tiny asymmetry; the symmetrized value is what we want
        SymMatrix::from_dmatrix(prod)
            .map(|mut s| {
                s.asymmetry = 0.0;
                s
            })
            .expect("square by construction")
    }

    /// `self²`.
    pub fn square(&self) -> SymMatrix {
        let mut s = SymMatrix::from_dmatrix(&self.m * &self.m).expect("square by construction");
        s.asymmetry = 0.0;
        s
    }

    pub fn quad_form(&self, u: &[f64]) -> f64 {
        self.mul_vec(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn mul_vec(&self, u: &[f64]) -> Vec<f64> {
        let p = self.dim();
        (0..p)
            .map(|i| (0..p).map(|j| self.m[(i, j)] * u[j]).sum())
            .collect()
    }

    /// Eigenvalues in ascending order together with the matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, c| eig.eigenvectors[(i, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Rebuild `V f(Λ) Vᵀ` from the eigendecomposition.
    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let (vals, vecs) = self.eigen();
        let p = self.dim();
        let mapped: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
        let mut out = DMatrix::zeros(p, p);
        for (k, &w) in mapped.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = vecs.column(k);
            for i in 0..p {
                let vi = w * v[i];
                for j in 0..p {
                    out[(i, j)] += vi * v[j];
                }
            }
        }
        SymMatrix::from_dmatrix(out)
            .map(|mut s| {
                s.asymmetry = 0.0;
                s
            })
            .expect("square by construction")
    }

    /// Principal square root of a PSD matrix (small negative eigenvalues clamped).
    pub fn psd_sqrt(&self) -> Result<SymMatrix> {
        let (vals, _) = self.eigen();
        check_psd(&vals)?;
        Ok(self.spectral_map(|l| l.max(0.0).sqrt()))
    }

    /// Inverse through the eigendecomposition; `None` when some
    /// `|λ| <= SINGULAR_TOL · max|λ|`.
    pub fn inverse(&self) -> Option<SymMatrix> {
        let vals = self.eigenvalues();
        let scale = vals.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        if scale == 0.0 || vals.iter().any(|l| l.abs() <= SINGULAR_TOL * scale) {
            return None;
        }
        Some(self.spectral_map(|l| 1.0 / l))
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// The trio `(tr B, tr B², ‖B‖)` that drives every quantile formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub trace: f64,
    pub trace_sq: f64,
    pub opnorm: f64,
    /// Effective dimension, equal to `trace`.
    pub eff_dim: f64,
}

impl SpectralSummary {
    /// Summary from a list of (already clamped, nonnegative) eigenvalues.
    pub fn from_eigenvalues(vals: &[f64]) -> Self {
        let trace: f64 = vals.iter().sum();
        let trace_sq: f64 = vals.iter().map(|l| l * l).sum();
        let opnorm = vals.iter().cloned().fold(0.0f64, f64::max);
        Self {
            trace,
            trace_sq,
            opnorm,
            eff_dim: trace,
        }
    }

    /// Summary of `c·B` given the summary of `B`, `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            trace: c * self.trace,
            trace_sq: c * c * self.trace_sq,
            opnorm: c * self.opnorm,
            eff_dim: c * self.eff_dim,
        }
    }
}

fn check_psd(vals: &[f64]) -> Result<()> {
    let scale = vals.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let tol = PSD_TOL * scale;
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd { min_eig: min, tol });
    }
    Ok(())
}

fn clamped_eigen(b: &SymMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (vals, vecs) = b.eigen();
    check_psd(&vals)?;
    Ok((vals.into_iter().map(|l| l.max(0.0)).collect(), vecs))
}

/// Trace, trace of the square and operator norm of a PSD matrix.
pub fn spectral_summary(b: &SymMatrix) -> Result<SpectralSummary> {
    let (vals, _) = clamped_eigen(b)?;
    Ok(SpectralSummary::from_eigenvalues(&vals))
}

/// A `p × p` matrix `L` with `L Lᵀ = B`, stored row-major for fast products.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    dim: usize,
    data: Vec<f64>,
}

impl Factor {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(m[(i, j)]);
            }
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = L · eta`.
    #[inline]
    pub fn apply(&self, eta: &[f64], out: &mut [f64]) {
        let p = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(p) {
            let row = &self.data[i * p..(i + 1) * p];
            *o = row.iter().zip(eta).map(|(a, b)| a * b).sum();
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// `L Lᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let l = self.to_dmatrix();
        &l * l.transpose()
    }
}

/// Eigen square-root factor `L = V Λ^{1/2}`; works for rank-deficient `B`.
pub fn sym_factor(b: &SymMatrix) -> Result<Factor> {
    let (vals, vecs) = clamped_eigen(b)?;
    let p = b.dim();
    let mut l = vecs;
    for (c, &lam) in vals.iter().enumerate() {
        let s = lam.sqrt();
        for r in 0..p {
            l[(r, c)] *= s;
        }
    }
    Factor::from_dmatrix(&l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdDiagnostics {
    pub min_eig: f64,
    pub symmetric_defect: f64,
}

/// Reports the smallest eigenvalue and the pre-symmetrization defect. Never fails.
pub fn validate_psd(b: &SymMatrix) -> PsdDiagnostics {
    PsdDiagnostics {
        min_eig: b.min_eigenvalue(),
        symmetric_defect: b.asymmetry(),
    }
}

/// Parses a dense CSV matrix: no header, every row the same length.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad number {:?}: {e}", tok.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "non-finite value".into(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty matrix file".into(),
        });
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Square symmetric matrix from CSV; `p` rows of `p` values.
pub fn parse_csv_sym(text: &str) -> Result<SymMatrix> {
    let m = parse_csv_matrix(text)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Parse {
            line: m.nrows(),
            msg: format!("matrix is {}x{}, expected square", m.nrows(), m.ncols()),
        });
    }
    SymMatrix::from_dmatrix(m)
}

pub fn read_csv_sym(path: impl AsRef<Path>) -> Result<SymMatrix> {
    parse_csv_sym(&std::fs::read_to_string(path)?)
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_csv_matrix(&std::fs::read_to_string(path)?)
}

/// Writes a matrix as CSV using shortest round-trip float formatting.
pub fn to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
