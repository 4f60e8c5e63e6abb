//! Spectral norm `‖T‖ = sup_{‖u‖=1} |T(u)|` by multi-start symmetric
//! higher-order power iteration.
//!
//! Since `T(−u) = −T(u)`, the supremum of `|T|` equals the maximum of `T`
//! on the sphere, so each restart runs an ascent on `T(u)`:
//!
//! ```text
//! u ← normalize(∇T(u)/3 + α u)
//! ```
//!
//! With `α = 0` this is the plain iteration. The shift `α` is adapted per
//! step: it is halved after every accepted step and doubled whenever the
//! unshifted step would decrease `T`. Any `α >= 2‖T‖_Fr` makes
//! `T(u)/3 + α‖u‖²/2` convex, so a step with such a shift never decreases
//! `T` and the backtracking always terminates.
//!
//! The result is a lower bound on `‖T‖`; it is exact when some restart
//! lands in the basin of the global maximizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::SymTensor3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormOptions {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    /// Seed for the random restarts.
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            iters: 500,
            tol: 1e-10,
            seed: 0x005e_ed0f_7e45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub maximizer: Vec<f64>,
    /// True when every restart met the step tolerance.
    pub converged: bool,
    pub restarts_converged: usize,
}

struct Run {
    value: f64,
    u: Vec<f64>,
    converged: bool,
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn ascend(t: &SymTensor3, start: Vec<f64>, opts: &NormOptions, alpha_cap: f64) -> Run {
    let p = t.dim();
    let mut u = start;
    if normalize(&mut u) == 0.0 {
        u = vec![0.0; p];
        u[0] = 1.0;
    }
    let mut f = t.eval_unchecked(&u);
    if f < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        f = -f;
    }
    let floor = 1e-3 * alpha_cap;
    let mut alpha = 0.0f64;
    let mut g = vec![0.0; p];
    let mut next = vec![0.0; p];
    for _ in 0..opts.iters {
        t.grad_into(&u, &mut g);
        loop {
            for i in 0..p {
                next[i] = g[i] / 3.0 + alpha * u[i];
            }
            let norm = normalize(&mut next);
            if norm == 0.0 {
                // gradient and shift both vanish: u is a zero of T with zero gradient
                return Run { value: f, u, converged: true };
            }
            let f_next = t.eval_unchecked(&next);
            let step: f64 = u.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let slack = 1e-14 * f.abs().max(alpha_cap);
            // equal values are only accepted at the full shift, where ascent is monotone;
            // otherwise an unshifted step can cycle between two points
            if f_next > f + slack || (step < opts.tol && f_next >= f - slack) || alpha >= alpha_cap {
                std::mem::swap(&mut u, &mut next);
                f = f_next;
                if step < opts.tol {
                    return Run { value: t.eval_unchecked(&u), u, converged: true };
                }
                alpha *= 0.5;
                if alpha < floor {
                    alpha = 0.0;
                }
                break;
            }
            alpha = if alpha < floor { floor } else { (2.0 * alpha).min(alpha_cap) };
        }
    }
    Run {
        value: t.eval_unchecked(&u),
        u,
        converged: false,
    }
}

fn starts(t: &SymTensor3, opts: &NormOptions) -> Vec<Vec<f64>> {
    let p = t.dim();
    let total = opts.restarts.max(1);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(total);

    // largest diagonal entry
    let mut best = (0usize, 0.0f64);
    for e in t.entries() {
        if e.i == e.j && e.j == e.k && e.value.abs() > best.1 {
            best = (e.i, e.value.abs());
        }
    }
    let mut e0 = vec![0.0; p];
    e0[best.0] = 1.0;
    out.push(e0);

    // trace vector direction
    let mut m = t.trace_vector();
    if normalize(&mut m) > 0.0 {
        out.push(m);
    }

    // leading left singular vector of the unfolding
    if p > 1 && !t.is_zero() {
        let (vals, vecs) = t.s_matrix().eigen();
        if vals[p - 1] > 0.0 {
            out.push(vecs.column(p - 1).iter().cloned().collect());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while out.len() < total {
        out.push((0..p).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    out.truncate(total);
    out
}

/// Multi-start power iteration for the spectral norm of a symmetric 3-tensor.
pub fn operator_norm(t: &SymTensor3, opts: &NormOptions) -> NormResult {
    let p = t.dim();
    if t.is_zero() {
        let mut u = vec![0.0; p];
        u[0] = 1.0;
        return NormResult {
            value: 0.0,
            maximizer: u,
            converged: true,
            restarts_converged: opts.restarts.max(1),
        };
    }
    let alpha_cap = 2.0 * t.frobenius_sq().sqrt();
    let runs: Vec<Run> = starts(t, opts)
        .into_par_iter()
        .map(|s| ascend(t, s, opts, alpha_cap))
        .collect();
    // first maximum in restart order
    let mut best = 0;
    for (idx, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = idx;
        }
    }
    let restarts_converged = runs.iter().filter(|r| r.converged).count();
    NormResult {
        value: runs[best].value.abs(),
        maximizer: runs[best].u.clone(),
        converged: restarts_converged == runs.len(),
        restarts_converged,
    }
}
