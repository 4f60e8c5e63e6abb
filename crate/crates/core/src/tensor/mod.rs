//! Symmetric third-order tensors in sparse canonical storage.
//!
//! Only triples `i <= j <= k` are stored. Every contraction expands a stored
//! entry over its distinct index permutations (1, 3 or 6 of them), which is
//! the same as summing over all `p³` logical entries.

mod gamma;
mod herbst;
mod moments;
mod norm;

pub use gamma::{
    certify_gamma, colored_pushforward, gamma_bounds, pushforward_tensor, verify_gamma_tau, BoundSheet, ColoredSpec,
    GammaCertificate, GammaCheck, Pushforward,
};
pub use herbst::{
    herbst_epsilon, herbst_radius, moment_constant, taylor_truncation_bound, EpsilonKind, TaylorVariant,
    MOMENT_CONSTANT_MAX_K, ROUNDED_K3_CONSTANT,
};
pub use moments::{gaussian_moments_exact, GaussianMoments};
pub use norm::{operator_norm, NormOptions, NormResult};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// One stored value at a canonical (sorted, 0-based) index triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

impl Entry {
    /// Number of distinct permutations of the index triple.
    pub fn multiplicity(&self) -> usize {
        if self.i == self.j && self.j == self.k {
            1
        } else if self.i == self.j || self.j == self.k || self.i == self.k {
            3
        } else {
            6
        }
    }

    /// The distinct permutations of `(i, j, k)`.
    pub fn permutations(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let (i, j, k) = (self.i, self.j, self.k);
        let all = [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)];
        let mut out: Vec<(usize, usize, usize)> = Vec::with_capacity(6);
        for t in all {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out.into_iter()
    }
}

fn canonical(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut t = [i, j, k];
    t.sort_unstable();
    (t[0], t[1], t[2])
}

/// Symmetric 3-tensor on `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    dim: usize,
    entries: Vec<Entry>,
}

impl SymTensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds from 0-based `(i, j, k, value)` tuples in any index order.
    /// Two tuples that canonicalize to the same triple are an error; exact
    /// zeros are dropped.
    pub fn new(dim: usize, items: impl IntoIterator<Item = (usize, usize, usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut map: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for (i, j, k, v) in items {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::IndexOutOfRange { i, j, k, dim });
            }
            let key = canonical(i, j, k);
            if map.insert(key, v).is_some() {
                return Err(Error::DuplicateEntry {
                    i: key.0 + 1,
                    j: key.1 + 1,
                    k: key.2 + 1,
                });
            }
        }
        let entries = map
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((i, j, k), value)| Entry { i, j, k, value })
            .collect();
        Ok(Self { dim, entries })
    }

    /// Reads canonical entries out of a dense `p³` buffer (row-major, index
    /// `(i*p + j)*p + k`). Entries off the canonical wedge are ignored.
    pub fn from_dense(dim: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != dim * dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim * dim,
                got: dense.len(),
            });
        }
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                for k in j..dim {
                    let v = dense[(i * dim + j) * dim + k];
                    if v != 0.0 {
                        entries.push(Entry { i, j, k, value: v });
                    }
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Logical entry `T_{i,j,k}` for any index order.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let key = canonical(i, j, k);
        self.entries
            .binary_search_by(|e| (e.i, e.j, e.k).cmp(&key))
            .map(|idx| self.entries[idx].value)
            .unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.dim, self.entries.iter().map(|e| (e.i, e.j, e.k, c * e.value))).expect("same support")
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Cubic form `T(u) = Σ T_{ijk} u_i u_j u_k`.
    pub fn evaluate(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        Ok(self.eval_unchecked(u))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|e| e.multiplicity() as f64 * e.value * u[e.i] * u[e.j] * u[e.k])
            .sum()
    }

    /// `∇T(u)_i = 3 Σ_{jk} T_{ijk} u_j u_k`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let mut g = vec![0.0; self.dim];
        self.grad_into(u, &mut g);
        Ok(g)
    }

    #[inline]
    pub(crate) fn grad_into(&self, u: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|x| *x = 0.0);
        for e in &self.entries {
            // d/du of m·v·u_i u_j u_k, valid for every multiplicity pattern
            let w = e.multiplicity() as f64 * e.value;
            g[e.i] += w * u[e.j] * u[e.k];
            g[e.j] += w * u[e.i] * u[e.k];
            g[e.k] += w * u[e.i] * u[e.j];
        }
    }

    /// `T[u] = Σ_i u_i T_i`, one sixth of the Hessian of `T` at `u`.
    pub fn slice(&self, u: &[f64]) -> Result<SymMatrix> {
        self.check_dim(u)?;
        let p = self.dim;
        let mut m = DMatrix::zeros(p, p);
        for e in &self.entries {
            for (a, b, c) in e.permutations() {
                m[(b, c)] += u[a] * e.value;
            }
        }
        SymMatrix::from_dmatrix(m)
    }

    /// `‖T‖²_Fr = Σ_{ijk} T²_{ijk}` over all logical entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.multiplicity() as f64 * e.value * e.value)
            .sum()
    }

    /// `M_i = tr T_i = Σ_j T_{ijj}`.
    pub fn trace_vector(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for e in &self.entries {
            for (a, b, c) in e.permutations() {
                if b == c {
                    m[a] += e.value;
                }
            }
        }
        m
    }

    /// Mode-1 unfolding: row `i` holds the slice `T_i` flattened row-major.
    pub fn unfolding(&self) -> DMatrix<f64> {
        let p = self.dim;
        let mut u = DMatrix::zeros(p, p * p);
        for e in &self.entries {
            for (a, b, c) in e.permutations() {
                u[(a, b * p + c)] = e.value;
            }
        }
        u
    }

    /// `S² = (2⟨T_i, T_i'⟩)_{i,i'}`, the covariance of `∇T(γ)/3`.
    pub fn s_matrix(&self) -> SymMatrix {
        let u = self.unfolding();
        SymMatrix::from_dmatrix(&u * u.transpose() * 2.0).expect("square")
    }

    /// Dense `p³` buffer, index `(i*p + j)*p + k`.
    pub fn to_dense(&self) -> Vec<f64> {
        let p = self.dim;
        let mut d = vec![0.0; p * p * p];
        for e in &self.entries {
            for (a, b, c) in e.permutations() {
                d[(a * p + b) * p + c] = e.value;
            }
        }
        d
    }

    /// The tensor of `u ↦ T(A u)`, entries `⟨T, A e_a ⊗ A e_b ⊗ A e_c⟩`.
    pub fn transform(&self, a: &DMatrix<f64>) -> Result<SymTensor3> {
        let p = self.dim;
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::DimMismatch {
                expected: p,
                got: a.nrows(),
            });
        }
        let t = self.to_dense();
        // three mode products, each O(p⁴)
        let mut w1 = vec![0.0; p * p * p];
        for i in 0..p {
            for x in 0..p {
                let aix = a[(i, x)];
                if aix == 0.0 {
                    continue;
                }
                for jk in 0..p * p {
                    w1[x * p * p + jk] += aix * t[i * p * p + jk];
                }
            }
        }
        let mut w2 = vec![0.0; p * p * p];
        for x in 0..p {
            for j in 0..p {
                for y in 0..p {
                    let ajy = a[(j, y)];
                    if ajy == 0.0 {
                        continue;
                    }
                    let src = (x * p + j) * p;
                    let dst = (x * p + y) * p;
                    for k in 0..p {
                        w2[dst + k] += ajy * w1[src + k];
                    }
                }
            }
        }
        let mut w3 = vec![0.0; p * p * p];
        for xy in 0..p * p {
            for k in 0..p {
                let v = w2[xy * p + k];
                if v == 0.0 {
                    continue;
                }
                for z in 0..p {
                    w3[xy * p + z] += a[(k, z)] * v;
                }
            }
        }
        SymTensor3::from_dense(p, &w3)
    }

    /// Text form: one `i j k value` line per canonical entry, 1-based.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&format!("{} {} {} {:?}\n", e.i + 1, e.j + 1, e.k + 1, e.value));
        }
        s
    }
}

/// Parses `i j k value` lines (1-based, any index order). Blank lines and
/// lines starting with `#` are skipped. Without an explicit `dim` the
/// dimension is the largest index seen.
pub fn parse_tensor(text: &str, dim: Option<usize>) -> Result<SymTensor3> {
    let mut items = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: lineno + 1, msg };
        if toks.len() != 4 {
            return Err(err(format!("expected `i j k value`, found {} fields", toks.len())));
        }
        let mut idx = [0usize; 3];
        for (slot, tok) in idx.iter_mut().zip(&toks[..3]) {
            let v: usize = tok.parse().map_err(|_| err(format!("bad index {tok:?}")))?;
            if v == 0 {
                return Err(err("indices are 1-based".into()));
            }
            *slot = v - 1;
            max_idx = max_idx.max(v);
        }
        let value: f64 = toks[3].parse().map_err(|_| err(format!("bad value {:?}", toks[3])))?;
        if !value.is_finite() {
            return Err(err("non-finite value".into()));
        }
        items.push((idx[0], idx[1], idx[2], value));
    }
    let dim = match dim {
        Some(d) => d,
        None if max_idx > 0 => max_idx,
        None => {
            return Err(Error::Parse {
                line: 0,
                msg: "empty tensor file; dimension unknown".into(),
            })
        }
    };
    SymTensor3::new(dim, items)
}

pub fn read_tensor(path: impl AsRef<Path>, dim: Option<usize>) -> Result<SymTensor3> {
    parse_tensor(&std::fs::read_to_string(path)?, dim)
}
