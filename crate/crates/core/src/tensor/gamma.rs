//! The ℓ3–ℓ2 condition `|T(u)| <= τ ‖Γu‖³`, the colored Gaussian pushforward
//! and the sheet of bound constants that follow from the condition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::norm::{operator_norm, NormOptions};
use super::SymTensor3;
use crate::error::{Error, Result};
use crate::linalg::{SymMatrix, SINGULAR_TOL};

/// A matrix Γ with the smallest τ found for `|T(u)| <= τ ‖Γu‖³`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCertificate {
    pub gamma: SymMatrix,
    pub tau: f64,
    /// True when every power-iteration restart converged.
    pub certified: bool,
    pub method: String,
}

fn checked_inverse(m: &SymMatrix, err: Error) -> Result<SymMatrix> {
    m.inverse().ok_or(err)
}

/// Computes `τ = ‖T∘Γ⁻¹‖`: with `T_Γ(u) = T(Γ⁻¹u)` the condition reads
/// `|T_Γ(u)| <= τ` on the unit ball.
///
/// For the zero tensor `τ = 0`, which satisfies the condition trivially.
pub fn certify_gamma(t: &SymTensor3, gamma: &SymMatrix, opts: &NormOptions) -> Result<GammaCertificate> {
    if gamma.dim() != t.dim() {
        return Err(Error::DimMismatch {
            expected: t.dim(),
            got: gamma.dim(),
        });
    }
    let ginv = checked_inverse(gamma, Error::SingularGamma)?;
    let tg = t.transform(ginv.as_dmatrix())?;
    let norm = operator_norm(&tg, opts);
    let method = format!(
        "shifted symmetric power iteration on T(Gamma^-1 u): {} restarts, {} iters, tol {:e}; {}/{} restarts converged",
        opts.restarts.max(1),
        opts.iters,
        opts.tol,
        norm.restarts_converged,
        opts.restarts.max(1)
    );
    Ok(GammaCertificate {
        gamma: gamma.clone(),
        tau: norm.value,
        certified: norm.converged,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaCheck {
    pub tau: f64,
    pub max_ratio: f64,
    pub n_points: usize,
    pub holds: bool,
}

/// Verify-only mode: samples random directions and checks
/// `|T(u)| <= (1 + 1e-8) τ ‖Γu‖³` on each.
pub fn verify_gamma_tau(t: &SymTensor3, gamma: &SymMatrix, tau: f64, n_points: usize, seed: u64) -> Result<GammaCheck> {
    if gamma.dim() != t.dim() {
        return Err(Error::DimMismatch {
            expected: t.dim(),
            got: gamma.dim(),
        });
    }
    let p = t.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    let mut u = vec![0.0; p];
    for _ in 0..n_points {
        u.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
        let val = t.eval_unchecked(&u).abs();
        let gnorm = gamma.mul_vec(&u).iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            if val > 0.0 {
                max_ratio = f64::INFINITY;
            }
            continue;
        }
        max_ratio = max_ratio.max(val / gnorm.powi(3));
    }
    Ok(GammaCheck {
        tau,
        max_ratio,
        n_points,
        holds: max_ratio <= tau * (1.0 + 1e-8),
    })
}

/// Covariance `D⁻²` of a colored Gaussian `γ_D = D⁻¹γ`, optionally with the
/// Γ of a certificate so that `J² = D⁻¹Γ²D⁻¹` is available.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredSpec {
    dmat: SymMatrix,
    dinv: SymMatrix,
    jsq: Option<SymMatrix>,
}

impl ColoredSpec {
    pub fn new(dmat: SymMatrix) -> Result<Self> {
        let vals = dmat.eigenvalues();
        let scale = vals.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        if scale == 0.0 || vals[0] <= SINGULAR_TOL * scale {
            return Err(Error::SingularD);
        }
        let dinv = checked_inverse(&dmat, Error::SingularD)?;
        Ok(Self { dmat, dinv, jsq: None })
    }

    pub fn with_gamma(dmat: SymMatrix, gamma: &SymMatrix) -> Result<Self> {
        let mut spec = Self::new(dmat)?;
        spec.attach_gamma(gamma)?;
        Ok(spec)
    }

    pub fn attach_gamma(&mut self, gamma: &SymMatrix) -> Result<()> {
        if gamma.dim() != self.dmat.dim() {
            return Err(Error::DimMismatch {
                expected: self.dmat.dim(),
                got: gamma.dim(),
            });
        }
        self.jsq = Some(self.dinv.sandwich(&gamma.square()));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dmat.dim()
    }

    pub fn dmat(&self) -> &SymMatrix {
        &self.dmat
    }

    pub fn dinv(&self) -> &SymMatrix {
        &self.dinv
    }

    /// `J² = D⁻¹Γ²D⁻¹`.
    pub fn jsq(&self) -> Result<&SymMatrix> {
        self.jsq.as_ref().ok_or(Error::MissingGamma)
    }

    /// `J = (J²)^{1/2}`.
    pub fn j(&self) -> Result<SymMatrix> {
        self.jsq()?.psd_sqrt()
    }
}

/// The tensor of `u ↦ T(D⁻¹u)`.
pub fn pushforward_tensor(t: &SymTensor3, spec: &ColoredSpec) -> Result<SymTensor3> {
    t.transform(spec.dinv().as_dmatrix())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pushforward {
    pub ttilde: SymTensor3,
    pub jsq: SymMatrix,
}

/// `T̃(u) = T(D⁻¹u)` together with `J²`; fails unless a Γ is attached.
pub fn colored_pushforward(t: &SymTensor3, spec: &ColoredSpec) -> Result<Pushforward> {
    let jsq = spec.jsq()?.clone();
    Ok(Pushforward {
        ttilde: pushforward_tensor(t, spec)?,
        jsq,
    })
}

/// Every constant implied by the (Γ) condition, with `G = Γ` in the white
/// case and `G = J` in the colored case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSheet {
    pub tau: f64,
    pub colored: bool,
    /// `‖G‖`
    pub g_opnorm: f64,
    /// `tr G²`
    pub g_trace_sq: f64,
    /// `tr G⁴`
    pub g_trace_4: f64,
    /// `3τ‖G‖`, so that `‖∇T(u)‖ <= gradient_factor · ‖Gu‖²`.
    pub gradient_factor: f64,
    /// `τ² tr G² tr G⁴ >= ‖T‖²_Fr`
    pub frobenius_sq_bound: f64,
    /// `τ ‖G‖ tr G² >= ‖M‖`
    pub trace_vec_bound: f64,
    /// `2τ² tr G⁴`, so that `S² ≼ factor · G²`.
    pub s_matrix_dominance_factor: f64,
    /// `6τ² tr G² tr G⁴ + 9τ² ‖G‖² tr² G²`
    pub e_t2_bound_sharp: f64,
    /// `15τ² ‖G‖² tr² G² >= E T²`
    pub e_t2_bound: f64,
    #[serde(skip)]
    pub g_sq: SymMatrix,
}

impl BoundSheet {
    /// `‖∇T(u)‖` bound at a point: `3τ ‖Gu‖² ‖G‖`.
    pub fn gradient_bound(&self, u: &[f64]) -> f64 {
        self.gradient_factor * self.g_sq.quad_form(u).max(0.0)
    }

    /// `‖T[u]‖²_Fr` bound at a point: `τ² ‖Gu‖² tr G⁴`.
    pub fn slice_frobenius_sq_bound(&self, u: &[f64]) -> f64 {
        self.tau * self.tau * self.g_sq.quad_form(u).max(0.0) * self.g_trace_4
    }
}

/// Evaluates the bound sheet for a certificate, white or colored.
pub fn gamma_bounds(cert: &GammaCertificate, colored: Option<&ColoredSpec>) -> Result<BoundSheet> {
    let g_sq = match colored {
        None => cert.gamma.square(),
        Some(spec) => match spec.jsq() {
            Ok(j) => j.clone(),
            Err(_) => spec.dinv().sandwich(&cert.gamma.square()),
        },
    };
    // eigenvalues of G² are the squares of those of G
    let vals: Vec<f64> = g_sq.eigenvalues().into_iter().map(|l| l.max(0.0)).collect();
    let g_opnorm = vals.iter().cloned().fold(0.0f64, f64::max).sqrt();
    let tr2: f64 = vals.iter().sum();
    let tr4: f64 = vals.iter().map(|l| l * l).sum();
    let tau = cert.tau;
    let tau2 = tau * tau;
    Ok(BoundSheet {
        tau,
        colored: colored.is_some(),
        g_opnorm,
        g_trace_sq: tr2,
        g_trace_4: tr4,
        gradient_factor: 3.0 * tau * g_opnorm,
        frobenius_sq_bound: tau2 * tr2 * tr4,
        trace_vec_bound: tau * g_opnorm * tr2,
        s_matrix_dominance_factor: 2.0 * tau2 * tr4,
        e_t2_bound_sharp: 6.0 * tau2 * tr2 * tr4 + 9.0 * tau2 * g_opnorm * g_opnorm * tr2 * tr2,
        e_t2_bound: 15.0 * tau2 * g_opnorm * g_opnorm * tr2 * tr2,
        g_sq,
    })
}
