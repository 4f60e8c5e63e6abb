//! Deviation quantiles and moments of `‖ξ‖²` for `ξ ~ N(0, B)` and for
//! sub-gaussian vectors with covariance proxy `g²·B`.
//!
//! For `ξ ~ N(0, B)` and any `x >= 0`:
//!
//! ```text
//! P(‖ξ‖² > tr B + 2√(x tr B²) + 2x‖B‖) <= e^{-x}
//! P(‖ξ‖² < tr B − 2√(x tr B²))         <= e^{-x}
//! ```
//!
//! The sub-gaussian version scales the Gaussian quantile by `g²` and is valid
//! whenever `E exp⟨u, ξ⟩ <= exp(g² uᵀBu / 2)` for all `u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SpectralSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Upper,
    Lower,
}

/// Tail query: confidence level `e^{-x}` on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailQuery {
    pub x: f64,
    pub side: TailSide,
}

impl TailQuery {
    pub fn new(x: f64, side: TailSide) -> Result<Self> {
        check_x(x)?;
        Ok(Self { x, side })
    }

    /// The quantile bound for this query under a Gaussian law.
    pub fn quantile_sq(&self, s: &SpectralSummary) -> Result<f64> {
        match self.side {
            TailSide::Upper => upper_quantile_sq(s, self.x),
            TailSide::Lower => lower_quantile_sq(s, self.x),
        }
    }
}

/// Variance proxy `g²` of a sub-gaussian vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubGaussianSpec {
    gsq: f64,
}

impl SubGaussianSpec {
    pub fn new(gsq: f64) -> Result<Self> {
        if !gsq.is_finite() || gsq <= 0.0 {
            return Err(Error::NonPositiveG(gsq));
        }
        Ok(Self { gsq })
    }

    pub fn gsq(&self) -> f64 {
        self.gsq
    }
}

fn check_x(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::NegativeX(x));
    }
    Ok(())
}

/// `z²(B, x) = tr B + 2√(x tr B²) + 2x‖B‖`.
pub fn upper_quantile_sq(s: &SpectralSummary, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(s.trace + 2.0 * (x * s.trace_sq).sqrt() + 2.0 * x * s.opnorm)
}

/// `max(0, tr B − 2√(x tr B²))`.
pub fn lower_quantile_sq(s: &SpectralSummary, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok((s.trace - 2.0 * (x * s.trace_sq).sqrt()).max(0.0))
}

/// Inverse of the quantile maps: the exponent `x` for which `zsq` is the
/// bound threshold, so that `e^{-x}` is a bound-implied p-value.
///
/// Above the mean the upper map is inverted; below it the lower map is.
/// Both branches give `x = 0` at `zsq = tr B`.
pub fn bound_implied_x(s: &SpectralSummary, zsq: f64) -> Result<f64> {
    if !zsq.is_finite() || zsq < 0.0 {
        return Err(Error::NegativeThreshold(zsq));
    }
    let (t, v, b) = (s.trace, s.trace_sq, s.opnorm);
    if b <= 0.0 || v <= 0.0 {
        return Err(Error::DegenerateSummary);
    }
    if zsq >= t {
        // 2b·y² + 2√v·y − (zsq − t) = 0 with y = √x
        let d = zsq - t;
        let sv = v.sqrt();
        // rationalized root avoids cancellation for small d
        let y = d / (sv + (v + 2.0 * b * d).sqrt());
        Ok(y * y)
    } else {
        let d = t - zsq;
        Ok(d * d / (4.0 * v))
    }
}

/// `g² · z²(B, x)`.
pub fn subgaussian_upper_quantile_sq(s: &SpectralSummary, sg: &SubGaussianSpec, x: f64) -> Result<f64> {
    Ok(sg.gsq * upper_quantile_sq(s, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QfMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean `tr B` and variance `2 tr B²` of `‖ξ‖²` for `ξ ~ N(0, B)`.
pub fn qf_moments(s: &SpectralSummary) -> QfMoments {
    QfMoments {
        mean: s.trace,
        variance: 2.0 * s.trace_sq,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Ok,
    Marginal,
    Violated,
}

/// Threshold on `p_B² / n` below which the regime is reported as `ok`.
/// Tooling convention, not a derived constant.
pub const REGIME_OK_MAX: f64 = 0.1;
/// Threshold on `p_B² / n` below which the regime is reported as `marginal`.
pub const REGIME_MARGINAL_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalDimensionReport {
    pub eff_dim: f64,
    pub n: u64,
    pub ratio: f64,
    pub regime: Regime,
    /// Reminder that the regime cut-offs are a convention.
    pub thresholds: &'static str,
}

/// Compares the squared effective dimension with the sample size.
pub fn critical_dimension_report(s: &SpectralSummary, n: u64) -> CriticalDimensionReport {
    let n = n.max(1);
    let ratio = s.eff_dim * s.eff_dim / n as f64;
    let regime = if ratio <= REGIME_OK_MAX {
        Regime::Ok
    } else if ratio <= REGIME_MARGINAL_MAX {
        Regime::Marginal
    } else {
        Regime::Violated
    };
    CriticalDimensionReport {
        eff_dim: s.eff_dim,
        n,
        ratio,
        regime,
        thresholds: "tooling convention: ok if ratio <= 0.1, marginal if ratio <= 1, else violated",
    }
}
