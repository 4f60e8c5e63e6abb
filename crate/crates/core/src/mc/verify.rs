//! Verification drivers: each samples, estimates, and compares with a bound
//! (one-sided, `3·stderr`) or an exact value (two-sided, `5·stderr`).

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

use super::engine::{binomial_stderr, merge_all, run_chunks, RngSpec, Welford};
use super::quadrature::gaussian_expectation;
use super::report::{Check, McReport};
use super::sampling::{sample_vectors, NoiseFamily, SampleStream};
use crate::bounds::{lower_quantile_sq, subgaussian_upper_quantile_sq, upper_quantile_sq, SubGaussianSpec, TailSide};
use crate::error::{Error, Result};
use crate::linalg::{spectral_summary, sym_factor, Factor, SymMatrix};
use crate::tensor::{
    gaussian_moments_exact, herbst_epsilon, herbst_radius, moment_constant, pushforward_tensor, taylor_truncation_bound,
    ColoredSpec, EpsilonKind, GammaCertificate, SymTensor3, TaylorVariant,
};

pub const MIN_TAIL_SAMPLES: usize = 1000;
pub const MIN_MOMENT_SAMPLES: usize = 100_000;
/// `ε` above which MGF estimates are dominated by rare draws.
pub const EPSILON_WARN: f64 = 5.0;
/// Gauss–Hermite nodes for the Taylor-remainder quadrature.
pub const QUADRATURE_NODES: usize = 64;

fn require(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::TooFewSamples { got: n, min })
    } else {
        Ok(())
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Event `‖ξ‖² > t` (upper) or `‖ξ‖² < t` (lower) for each threshold, in one pass.
pub fn tail_counts(stream: &SampleStream, thresholds: &[f64], side: TailSide, threads: usize) -> Vec<u64> {
    let k = thresholds.len();
    stream.fold(
        threads,
        || vec![0u64; k],
        |acc, xi| {
            let s = norm_sq(xi);
            for (c, &t) in acc.iter_mut().zip(thresholds) {
                let hit = match side {
                    TailSide::Upper => s > t,
                    TailSide::Lower => s < t,
                };
                *c += u64::from(hit);
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )
}

/// Fraction of draws with `‖ξ‖² > threshold`, with binomial standard error.
pub fn estimate_tail(stream: &SampleStream, threshold: f64, threads: usize) -> Result<McReport> {
    require(stream.n, MIN_TAIL_SAMPLES)?;
    let start = Instant::now();
    let hits = tail_counts(stream, &[threshold], TailSide::Upper, threads)[0];
    let n = stream.n as u64;
    let p = hits as f64 / n as f64;
    Ok(McReport::new(
        "estimate_tail",
        json!({"threshold": threshold, "statistic": "norm_sq", "family": stream.family}),
        p,
        binomial_stderr(p, n),
        n,
        stream.rng.master_seed,
    )
    .with_elapsed(start))
}

/// Checks `P(‖ξ‖² beyond z²) <= e^{−x}` on a grid of `x`.
///
/// Gaussian draws use the Gaussian quantile; the other families use the
/// `g²`-scaled upper quantile. The lower side is only available for Gaussian noise.
pub fn verify_quantile_bound(
    b: &SymMatrix,
    family: NoiseFamily,
    x_grid: &[f64],
    side: TailSide,
    n: usize,
    rng: RngSpec,
    threads: usize,
) -> Result<Vec<McReport>> {
    require(n, MIN_TAIL_SAMPLES)?;
    let start = Instant::now();
    let summary = spectral_summary(b)?;
    let sg = SubGaussianSpec::new(family.gsq())?;
    let thresholds = x_grid
        .iter()
        .map(|&x| match (side, family) {
            (TailSide::Upper, NoiseFamily::Gaussian) => upper_quantile_sq(&summary, x),
            (TailSide::Upper, _) => subgaussian_upper_quantile_sq(&summary, &sg, x),
            (TailSide::Lower, NoiseFamily::Gaussian) => lower_quantile_sq(&summary, x),
            (TailSide::Lower, f) => Err(Error::Unsupported(format!(
                "lower-tail bound is only available for gaussian noise, not {f}"
            ))),
        })
        .collect::<Result<Vec<f64>>>()?;
    let stream = sample_vectors(family, sym_factor(b)?, n, rng)?;
    let counts = tail_counts(&stream, &thresholds, side, threads);
    let nn = n as u64;
    Ok(x_grid
        .iter()
        .zip(&thresholds)
        .zip(&counts)
        .map(|((&x, &z), &c)| {
            let p = c as f64 / nn as f64;
            McReport::new(
                "verify_quantile_bound",
                json!({
                    "x": x,
                    "side": side,
                    "family": family,
                    "gsq": family.gsq(),
                    "z_sq": z,
                    "dim": b.dim(),
                    "summary": summary,
                }),
                p,
                binomial_stderr(p, nn),
                nn,
                rng.master_seed,
            )
            .checked(Check::Upper, (-x).exp())
            .with_elapsed(start)
        })
        .collect())
}

/// Monte Carlo checks of the exact Gaussian moments of `T(γ)` and of
/// `𝕋 = ∇T(γ)/3`, plus the second-moment bound for a colored input `γ_D`.
pub fn verify_tensor_moments(
    t: &SymTensor3,
    colored: Option<(&ColoredSpec, &GammaCertificate)>,
    n: usize,
    rng: RngSpec,
    threads: usize,
) -> Result<Vec<McReport>> {
    require(n, MIN_MOMENT_SAMPLES)?;
    let start = Instant::now();
    let p = t.dim();
    let exact = gaussian_moments_exact(t);
    let m = t.trace_vector();
    let fr = t.frobenius_sq();
    let seed = rng.master_seed;
    let stream = sample_vectors(NoiseFamily::Gaussian, Factor::identity(p), n, rng)?;

    // slots: T², (T − 3⟨M,γ⟩)², ‖𝕋 − M‖², then 𝕋_i for each i
    let slots = 3 + p;
    let acc = stream.fold(
        threads,
        || (vec![Welford::default(); slots], vec![0.0; p]),
        |(w, g), xi| {
            let v = t.eval_unchecked(xi);
            t.grad_into(xi, g);
            let mg: f64 = m.iter().zip(xi).map(|(a, b)| a * b).sum();
            w[0].push(v * v);
            let c = v - 3.0 * mg;
            w[1].push(c * c);
            let mut dev = 0.0;
            for i in 0..p {
                let gi = g[i] / 3.0;
                w[3 + i].push(gi);
                dev += (gi - m[i]) * (gi - m[i]);
            }
            w[2].push(dev);
        },
        |a, b| merge_all(&mut a.0, &b.0),
    );
    let w = acc.0;
    let nn = n as u64;
    let mut out = vec![
        McReport::new("tensor_e_t2", json!({"dim": p, "nnz": t.nnz()}), w[0].mean, w[0].stderr(), nn, seed)
            .checked(Check::Identity, exact.e_t2),
        McReport::new("tensor_e_centered2", json!({"dim": p, "nnz": t.nnz()}), w[1].mean, w[1].stderr(), nn, seed)
            .checked(Check::Identity, exact.e_centered2),
    ];
    for i in 0..p {
        out.push(
            McReport::new("tensor_grad_mean", json!({"coord": i + 1}), w[3 + i].mean, w[3 + i].stderr(), nn, seed)
                .checked(Check::Identity, m[i]),
        );
    }
    let trace_cov: f64 = (0..p).map(|i| w[3 + i].variance()).sum();
    out.push(
        McReport::new("tensor_grad_cov_trace", json!({"dim": p}), trace_cov, w[2].stderr(), nn, seed)
            .checked(Check::Identity, 2.0 * fr),
    );

    if let Some((spec, cert)) = colored {
        if spec.dim() != p {
            return Err(Error::DimMismatch {
                expected: p,
                got: spec.dim(),
            });
        }
        let ttilde = pushforward_tensor(t, spec)?;
        let exact_tilde = gaussian_moments_exact(&ttilde);
        let sheet = crate::tensor::gamma_bounds(cert, Some(spec))?;
        let cstream = sample_vectors(
            NoiseFamily::Gaussian,
            Factor::from_dmatrix(spec.dinv().as_dmatrix())?,
            n,
            rng.derive(rng.domain.wrapping_add(1)),
        )?;
        let wc = cstream.fold(
            threads,
            Welford::default,
            |w, xi| {
                let v = t.eval_unchecked(xi);
                w.push(v * v);
            },
            |a, b| a.merge(&b),
        );
        let params = json!({"dim": p, "tau": cert.tau, "e_t2_bound": sheet.e_t2_bound});
        out.push(
            McReport::new("colored_e_t2_bound", params.clone(), wc.mean, wc.stderr(), nn, seed)
                .checked(Check::UpperLoose, sheet.e_t2_bound),
        );
        out.push(
            McReport::new("colored_e_t2_exact", params, wc.mean, wc.stderr(), nn, seed)
                .checked(Check::Identity, exact_tilde.e_t2),
        );
    }
    Ok(out.into_iter().map(|r| r.with_elapsed(start)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgfVerification {
    pub epsilon: f64,
    pub radius: f64,
    /// Pilot estimate of `E_U T(γ_D)`.
    pub centering: f64,
    pub reports: Vec<McReport>,
    pub warnings: Vec<String>,
}

/// Checks the truncated MGF bound `E_U e^{μX} <= e^{μ²ε²/2}` and the tail
/// `P(X > ε√(2x)) <= 2e^{−x}` for `X = T(γ_D) − E_U T(γ_D)`, where
/// `U = {‖Γ γ_D‖ <= r}` with `r = z(J², x)` and `ε = 3τr²‖J‖`.
#[allow(clippy::too_many_arguments)]
pub fn verify_truncated_mgf(
    t: &SymTensor3,
    cert: &GammaCertificate,
    colored: &ColoredSpec,
    x: f64,
    mu_grid: &[f64],
    n: usize,
    rng: RngSpec,
    threads: usize,
) -> Result<MgfVerification> {
    require(n, MIN_TAIL_SAMPLES)?;
    let start = Instant::now();
    let p = t.dim();
    for d in [cert.gamma.dim(), colored.dim()] {
        if d != p {
            return Err(Error::DimMismatch { expected: p, got: d });
        }
    }
    let jsq = colored.dinv().sandwich(&cert.gamma.square());
    let jsum = spectral_summary(&jsq)?;
    let radius = herbst_radius(&jsum, x)?;
    let j_norm = jsum.opnorm.sqrt();
    let epsilon = if cert.tau == 0.0 {
        0.0
    } else {
        herbst_epsilon(cert.tau, radius, j_norm, EpsilonKind::Tensor)?
    };
    let mut warnings = Vec::new();
    if epsilon > EPSILON_WARN {
        warnings.push(format!(
            "EpsilonTooLarge: epsilon = {epsilon} exceeds {EPSILON_WARN}; MGF estimates are unstable"
        ));
    }
    let r2 = radius * radius;
    let dinv = Factor::from_dmatrix(colored.dinv().as_dmatrix())?;
    let gamma = Factor::from_dmatrix(cert.gamma.as_dmatrix())?;

    // draws (γ_D, ‖Γγ_D‖²) from one chunk stream
    let draw = |rng: &mut ChaCha8Rng, eta: &mut [f64], gd: &mut [f64], w: &mut [f64]| {
        eta.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        dinv.apply(eta, gd);
        gamma.apply(gd, w);
        norm_sq(w)
    };

    let pilot_spec = rng.derive(rng.domain.wrapping_add(1));
    let pilot = run_chunks(
        &pilot_spec,
        n,
        threads,
        Welford::default,
        |r, count, acc| {
            let (mut eta, mut gd, mut w) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
            for _ in 0..count {
                let q = draw(r, &mut eta, &mut gd, &mut w);
                acc.push(if q <= r2 { t.eval_unchecked(&gd) } else { 0.0 });
            }
        },
        |a, b| a.merge(&b),
    );
    let centering = pilot.mean;
    let tail_level = epsilon * (2.0 * x).sqrt();

    // slots: 1(U), 1(X > ε√(2x)), then e^{μX}·1(U) for each μ
    let k = mu_grid.len();
    let acc = run_chunks(
        &rng,
        n,
        threads,
        || vec![Welford::default(); 2 + k],
        |r, count, acc| {
            let (mut eta, mut gd, mut w) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
            for _ in 0..count {
                let q = draw(r, &mut eta, &mut gd, &mut w);
                let inside = q <= r2;
                let xv = t.eval_unchecked(&gd) - centering;
                acc[0].push(if inside { 1.0 } else { 0.0 });
                acc[1].push(if xv > tail_level { 1.0 } else { 0.0 });
                for (slot, &mu) in acc[2..].iter_mut().zip(mu_grid) {
                    slot.push(if inside { (mu * xv).exp() } else { 0.0 });
                }
            }
        },
        |a, b| merge_all(a, &b),
    );
    let nn = n as u64;
    let seed = rng.master_seed;
    let base = json!({"x": x, "radius": radius, "epsilon": epsilon, "tau": cert.tau, "opnorm_j": j_norm});
    let mut reports = Vec::with_capacity(k + 2);
    let outside = 1.0 - acc[0].mean;
    reports.push(
        McReport::new("truncation_probability", base.clone(), outside, binomial_stderr(outside, nn), nn, seed)
            .checked(Check::Upper, (-x).exp()),
    );
    for (i, &mu) in mu_grid.iter().enumerate() {
        let w = &acc[2 + i];
        let mut params = base.clone();
        params["mu"] = json!(mu);
        params["centering"] = json!(centering);
        reports.push(
            McReport::new("truncated_mgf", params, w.mean, w.stderr(), nn, seed)
                .checked(Check::Relative, (mu * mu * epsilon * epsilon / 2.0).exp()),
        );
    }
    let tail = acc[1].mean;
    let mut params = base;
    params["level"] = json!(tail_level);
    reports.push(
        McReport::new("herbst_tail", params, tail, binomial_stderr(tail, nn), nn, seed)
            .checked(Check::Upper, 2.0 * (-x).exp()),
    );
    Ok(MgfVerification {
        epsilon,
        radius,
        centering,
        reports: reports.into_iter().map(|r| r.with_elapsed(start)).collect(),
        warnings,
    })
}

fn double_factorial_odd(k: u32) -> f64 {
    (1..=k).map(|i| f64::from(2 * i - 1)).product()
}

/// `E|X|^{2k} <= C_k² ε^{2k}` for `X ~ N(0, ε²)`, by Monte Carlo and by the
/// exact Gaussian moment `(2k − 1)!! ε^{2k}`.
pub fn verify_moment_constants(eps: f64, k_grid: &[u32], n: usize, rng: RngSpec, threads: usize) -> Result<Vec<McReport>> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    require(n, MIN_TAIL_SAMPLES)?;
    let start = Instant::now();
    let consts = k_grid.iter().map(|&k| moment_constant(k)).collect::<Result<Vec<f64>>>()?;
    let stream = sample_vectors(NoiseFamily::Gaussian, Factor::identity(1), n, rng)?;
    let acc = stream.fold(
        threads,
        || vec![Welford::default(); k_grid.len()],
        |w, xi| {
            let x2 = (eps * xi[0]).powi(2);
            for (slot, &k) in w.iter_mut().zip(k_grid) {
                slot.push(x2.powi(k as i32));
            }
        },
        |a, b| merge_all(a, &b),
    );
    let nn = n as u64;
    Ok(k_grid
        .iter()
        .zip(&consts)
        .zip(&acc)
        .map(|((&k, &c), w)| {
            let scale = eps.powi(2 * k as i32);
            let bound = c * c * scale;
            let analytic = double_factorial_odd(k) * scale;
            let ratio = double_factorial_odd(k) / (c * c);
            let mut r = McReport::new(
                "moment_constant",
                json!({"k": k, "eps": eps, "c_k": c, "analytic": analytic, "analytic_ratio": ratio}),
                w.mean,
                w.stderr(),
                nn,
                rng.master_seed,
            )
            .checked(Check::UpperLoose, bound)
            .with_elapsed(start);
            r.pass = r.pass.map(|ok| ok && analytic <= bound);
            r
        })
        .collect())
}

/// `k = 3`: `|E e^X − 1 − EX − EX²/2| <= 2ε³e^{ε²}`.
/// `k = 2`: `|E(X e^X) − EX − EX²| <= 5ε³e^{ε²}`.
///
/// The estimate is a 64-node Gauss–Hermite value; a Monte Carlo estimate and
/// the closed form are carried in `params` as cross-checks, and the report
/// passes only if the Monte Carlo value agrees with the quadrature within
/// `5·stderr`.
pub fn verify_taylor_remainder(eps: f64, k: u32, n: usize, rng: RngSpec, threads: usize) -> Result<McReport> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::NonPositiveEps(eps));
    }
    require(n, MIN_TAIL_SAMPLES)?;
    let start = Instant::now();
    let e2 = eps * eps;
    let (f, bound, analytic): (fn(f64) -> f64, f64, f64) = match k {
        3 => (
            |x| x.exp_m1() - x - 0.5 * x * x,
            2.0 * eps.powi(3) * e2.exp(),
            (0.5 * e2).exp_m1() - 0.5 * e2,
        ),
        2 => (
            |x| x * x.exp_m1() - x * x,
            5.0 * eps.powi(3) * e2.exp(),
            e2 * (0.5 * e2).exp_m1(),
        ),
        _ => return Err(Error::Unsupported(format!("taylor remainder is defined for k in {{2, 3}}, got {k}"))),
    };
    let quad = gaussian_expectation(eps, QUADRATURE_NODES, f).abs();
    let stream = sample_vectors(NoiseFamily::Gaussian, Factor::identity(1), n, rng)?;
    let w = stream.fold(threads, Welford::default, |w, xi| w.push(f(eps * xi[0])), |a, b| a.merge(&b));
    let mc = w.mean.abs();
    let agrees = (mc - quad).abs() <= 5.0 * w.stderr();
    let bounded_xi = taylor_truncation_bound(eps, k, TaylorVariant::BoundedXi)?;
    let mut r = McReport::new(
        "taylor_remainder",
        json!({
            "eps": eps,
            "k": k,
            "estimator": "gauss_hermite_64",
            "analytic": analytic,
            "mc_estimate": mc,
            "mc_stderr": w.stderr(),
            "mc_agrees": agrees,
            "truncation_bound_bounded_xi": bounded_xi,
        }),
        quad,
        0.0,
        n as u64,
        rng.master_seed,
    )
    .checked(Check::Upper, bound)
    .with_elapsed(start);
    r.pass = r.pass.map(|ok| ok && agrees);
    Ok(r)
}
