//! Constants of the Herbst-type argument: the gradient bound `ε` on the
//! truncation set, its radius, the moment constants `C_k` and the Taylor
//! truncation bounds built from them.

use serde::{Deserialize, Serialize};

use crate::bounds::upper_quantile_sq;
use crate::error::{Error, Result};
use crate::linalg::SpectralSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonKind {
    /// `ε = 3 τ r² ‖J‖`, for a cubic form.
    Tensor,
    /// `ε = τ r² ‖J‖ / 2`, for a third-order remainder.
    Remainder,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveInput { name, value })
    }
}

pub fn herbst_epsilon(tau: f64, r: f64, opnorm_j: f64, kind: EpsilonKind) -> Result<f64> {
    positive("tau", tau)?;
    positive("r", r)?;
    positive("opnorm_j", opnorm_j)?;
    let base = tau * r * r * opnorm_j;
    Ok(match kind {
        EpsilonKind::Tensor => 3.0 * base,
        EpsilonKind::Remainder => 0.5 * base,
    })
}

/// `r = z(J², x)`, the radius of the truncation ellipsoid `{‖J u‖ <= r}`.
pub fn herbst_radius(jsq: &SpectralSummary, x: f64) -> Result<f64> {
    Ok(upper_quantile_sq(jsq, x)?.sqrt())
}

/// Largest `k` for which `C_k = √(2^{k+1} k!)` is finite in `f64`.
pub const MOMENT_CONSTANT_MAX_K: u32 = 150;

/// `C_k = √(2^{k+1} k!)`, the constant in `E|X|^{2k} <= C_k² ε^{2k}`.
pub fn moment_constant(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::NonPositiveInput { name: "k", value: 0.0 });
    }
    if k > MOMENT_CONSTANT_MAX_K {
        return Err(Error::Overflow(k));
    }
    Ok(if k <= 20 {
        ((1u64 << (k + 1)) as f64 * factorial(k)).sqrt()
    } else {
        // 2^{k+1} k! overflows long before its square root does
        let ln_sq = f64::from(k + 1) * std::f64::consts::LN_2 + ln_factorial(k);
        (0.5 * ln_sq).exp()
    })
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|i| f64::from(i).ln()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TaylorVariant {
    /// `|ξ| <= 1` almost surely.
    BoundedXi,
    /// Unbounded `ξ` with the given value of `E ξ^{2k+2}`.
    MomentXi(f64),
}

/// Bound on `|E ξ (e^X − E_k(X))|`, where `E_k` is the Taylor polynomial of
/// `e^X` of degree `k − 1` and `X` satisfies `E e^{μX} <= e^{μ²ε²/2}`.
pub fn taylor_truncation_bound(eps: f64, k: u32, variant: TaylorVariant) -> Result<f64> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    let kf = f64::from(k);
    let common = eps.powi(k as i32) * (eps * eps).exp() / factorial(k);
    match variant {
        TaylorVariant::BoundedXi => Ok(moment_constant(k)? * common),
        TaylorVariant::MomentXi(m) => {
            if m.is_nan() || m < 0.0 {
                return Err(Error::NonPositiveInput { name: "moment", value: m });
            }
            let rho = kf / (kf + 1.0);
            Ok(moment_constant(k + 1)?.powf(rho) * common * m.powf(1.0 / (2.0 * kf + 2.0)))
        }
    }
}

/// The rounded leading constant used in print for the bounded `k = 3` case,
/// next to the exact `C_3 / 3! = √96 / 6`.
pub const ROUNDED_K3_CONSTANT: f64 = 5.0 / 3.0;
