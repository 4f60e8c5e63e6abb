//! Least squares in the linear model `Y = Ψυ* + ε`: projector, fit,
//! confidence-set radius from the quantile bound and a coverage experiment.
//!
//! The prediction loss `‖Ψ(υ̂ − υ*)‖²` equals `‖Πε‖²`, a squared norm of a
//! vector with covariance `B = Π Var(ε) Π`, so `z²(B, x)` is a radius with
//! non-coverage probability at most `e^{−x}` under Gaussian noise.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{subgaussian_upper_quantile_sq, upper_quantile_sq, SubGaussianSpec};
use crate::error::{Error, Result};
use crate::linalg::{spectral_summary, SpectralSummary, SymMatrix};
use crate::mc::{binomial_stderr, run_chunks, Check, McReport, NoiseFamily, RngSpec};

/// Relative eigenvalue floor for `ΨᵀΨ`.
pub const RANK_TOL: f64 = 1e-10;

pub const MIN_REPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelSpec {
    pub design: DMatrix<f64>,
    pub noise: NoiseFamily,
    pub sigma: f64,
    pub truth: Vec<f64>,
}

impl LinearModelSpec {
    pub fn new(design: DMatrix<f64>, noise: NoiseFamily, sigma: f64, truth: Vec<f64>) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::NonPositiveInput { name: "sigma", value: sigma });
        }
        if truth.len() != design.ncols() {
            return Err(Error::DimMismatch {
                expected: design.ncols(),
                got: truth.len(),
            });
        }
        check_rank(&design)?;
        Ok(Self {
            design,
            noise,
            sigma,
            truth,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceSetSpec {
    pub x: f64,
    /// Radius `z²` of the ball `{υ : ‖Ψ(υ̂ − υ)‖² <= z²}`.
    pub radius_sq: f64,
    pub summary: SpectralSummary,
}

fn gram(design: &DMatrix<f64>) -> DMatrix<f64> {
    design.transpose() * design
}

fn check_rank(design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if design.ncols() == 0 || design.nrows() == 0 {
        return Err(Error::EmptyDimension);
    }
    let g = gram(design);
    let vals = g.clone().symmetric_eigenvalues();
    let max = vals.iter().cloned().fold(0.0f64, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if design.nrows() < design.ncols() || min.is_nan() || min <= RANK_TOL * max {
        return Err(Error::RankDeficient { min_eig: min });
    }
    Ok(g)
}

/// `(ΨᵀΨ)⁻¹Ψᵀ`, the `p × n` map `Y ↦ υ̂`.
fn hat_map(design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = check_rank(design)?;
    let chol = g.cholesky().ok_or(Error::RankDeficient { min_eig: 0.0 })?;
    Ok(chol.solve(&design.transpose()))
}

/// `Π = Ψ(ΨᵀΨ)⁻¹Ψᵀ`.
pub fn projection(design: &DMatrix<f64>) -> Result<SymMatrix> {
    let h = hat_map(design)?;
    SymMatrix::from_dmatrix(design * h)
}

/// Least-squares estimate through a QR factorization of `Ψ`.
pub fn fit_ls(design: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    check_rank(design)?;
    if y.len() != design.nrows() {
        return Err(Error::DimMismatch {
            expected: design.nrows(),
            got: y.len(),
        });
    }
    let qr = design.clone().qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let sol = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { min_eig: 0.0 })?;
    Ok(sol.iter().cloned().collect())
}

/// `z²(B, x)` with `B = Π Σ Π`, `Σ` the noise covariance.
pub fn confset_radius(design: &DMatrix<f64>, noise_cov: &SymMatrix, x: f64) -> Result<ConfidenceSetSpec> {
    if noise_cov.dim() != design.nrows() {
        return Err(Error::DimMismatch {
            expected: design.nrows(),
            got: noise_cov.dim(),
        });
    }
    spectral_summary(noise_cov)?;
    let pi = projection(design)?;
    let b = pi.sandwich(noise_cov);
    let summary = spectral_summary(&b)?;
    Ok(ConfidenceSetSpec {
        x,
        radius_sq: upper_quantile_sq(&summary, x)?,
        summary,
    })
}

/// `σ²(p + 2√(xp) + 2x)`, the radius for iid noise with unit-variance coordinates.
pub fn iid_radius_sq(p: usize, sigma: f64, x: f64) -> Result<f64> {
    let pf = p as f64;
    let s = SpectralSummary::from_eigenvalues(&vec![1.0; p]);
    debug_assert_eq!(s.trace, pf);
    Ok(sigma * sigma * upper_quantile_sq(&s, x)?)
}

struct Prepared {
    hat: DMatrix<f64>,
    radius_sq: f64,
    summary: SpectralSummary,
}

fn prepare(model: &LinearModelSpec, x: f64) -> Result<Prepared> {
    let n = model.design.nrows();
    let cov = SymMatrix::identity(n).scale(model.sigma * model.sigma);
    let cs = confset_radius(&model.design, &cov, x)?;
    // non-Gaussian noise uses the g²-scaled quantile; g² = 1 for every family here
    let sg = SubGaussianSpec::new(model.noise.gsq())?;
    let radius_sq = match model.noise {
        NoiseFamily::Gaussian => cs.radius_sq,
        _ => subgaussian_upper_quantile_sq(&cs.summary, &sg, x)?,
    };
    Ok(Prepared {
        hat: hat_map(&model.design)?,
        radius_sq,
        summary: cs.summary,
    })
}

/// One replication: draws noise, refits, and returns `‖Ψ(υ̂ − υ*)‖²`.
fn replicate(model: &LinearModelSpec, hat: &DMatrix<f64>, rng: &mut rand_chacha::ChaCha8Rng, buf: &mut Buf) -> f64 {
    let (n, p) = model.design.shape();
    model.noise.fill(rng, &mut buf.noise);
    for i in 0..n {
        let mut yi = model.sigma * buf.noise[i];
        for j in 0..p {
            yi += model.design[(i, j)] * model.truth[j];
        }
        buf.y[i] = yi;
    }
    for a in 0..p {
        let mut s = 0.0;
        for i in 0..n {
            s += hat[(a, i)] * buf.y[i];
        }
        buf.diff[a] = s - model.truth[a];
    }
    let mut loss = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..p {
            r += model.design[(i, j)] * buf.diff[j];
        }
        loss += r * r;
    }
    loss
}

struct Buf {
    noise: Vec<f64>,
    y: Vec<f64>,
    diff: Vec<f64>,
}

impl Buf {
    fn new(n: usize, p: usize) -> Self {
        Self {
            noise: vec![0.0; n],
            y: vec![0.0; n],
            diff: vec![0.0; p],
        }
    }
}

/// Per-replication non-coverage indicators, in replication order.
pub fn noncoverage_indicators(model: &LinearModelSpec, x: f64, reps: usize, rng: RngSpec, threads: usize) -> Result<Vec<bool>> {
    let prep = prepare(model, x)?;
    let (n, p) = model.design.shape();
    Ok(run_chunks(
        &rng,
        reps,
        threads,
        Vec::new,
        |r, count, acc: &mut Vec<bool>| {
            let mut buf = Buf::new(n, p);
            for _ in 0..count {
                acc.push(replicate(model, &prep.hat, r, &mut buf) > prep.radius_sq);
            }
        },
        |a, b| a.extend(b),
    ))
}

/// Fraction of replications whose confidence ball misses `υ*`, checked
/// against `e^{−x}`.
pub fn coverage_experiment(model: &LinearModelSpec, x: f64, reps: usize, rng: RngSpec, threads: usize) -> Result<McReport> {
    if reps < MIN_REPS {
        return Err(Error::TooFewSamples { got: reps, min: MIN_REPS });
    }
    let start = Instant::now();
    let prep = prepare(model, x)?;
    let (n, p) = model.design.shape();
    let misses = run_chunks(
        &rng,
        reps,
        threads,
        || 0u64,
        |r, count, acc| {
            let mut buf = Buf::new(n, p);
            for _ in 0..count {
                *acc += u64::from(replicate(model, &prep.hat, r, &mut buf) > prep.radius_sq);
            }
        },
        |a, b| *a += b,
    );
    let nn = reps as u64;
    let frac = misses as f64 / nn as f64;
    Ok(McReport::new(
        "coverage",
        json!({
            "n": n,
            "p": p,
            "x": x,
            "sigma": model.sigma,
            "family": model.noise,
            "radius_sq": prep.radius_sq,
            "summary": prep.summary,
        }),
        frac,
        binomial_stderr(frac, nn),
        nn,
        rng.master_seed,
    )
    .checked(Check::Upper, (-x).exp())
    .with_elapsed(start))
}
