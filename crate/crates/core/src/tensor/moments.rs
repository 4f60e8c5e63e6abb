use serde::Serialize;

use super::SymTensor3;

/// Closed-form Gaussian moments of `T(γ)` and of `𝕋 = ∇T(γ)/3`, `γ ~ N(0, I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMoments {
    /// `E T²(γ) = 6‖T‖²_Fr + 9‖M‖²`
    pub e_t2: f64,
    /// `E (T(γ) − 3⟨M, γ⟩)² = 6‖T‖²_Fr`
    pub e_centered2: f64,
    /// `E ‖𝕋‖² = ‖M‖² + 2‖T‖²_Fr`
    pub e_grad_norm2: f64,
}

pub fn gaussian_moments_exact(t: &SymTensor3) -> GaussianMoments {
    let fr = t.frobenius_sq();
    let m2: f64 = t.trace_vector().iter().map(|x| x * x).sum();
    let out = GaussianMoments {
        e_t2: 6.0 * fr + 9.0 * m2,
        e_centered2: 6.0 * fr,
        e_grad_norm2: m2 + 2.0 * fr,
    };
    debug_assert!(out.e_grad_norm2 <= out.e_t2 / 3.0 * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    out
}
