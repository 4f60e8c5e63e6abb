mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use quadconc::linalg::SymMatrix;
use quadconc::mc::{sample_vectors, NoiseFamily, RngSpec, Welford};
use quadconc::tensor::*;
use quadconc::Error;
use rand::Rng;

fn scalar(v: f64) -> SymTensor3 {
    SymTensor3::new(1, vec![(0, 0, 0, v)]).unwrap()
}

fn frob_sq(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum()
}

#[test]
fn contractions_match_dense_loops() {
    let mut r = rng(31);
    for case in 0..40 {
        let p = 1 + case % 12;
        let t = random_tensor(&mut r, p, 3 * p);
        let d = dense(&t);
        assert_eq!(t.to_dense(), d);
        assert!(rel_err(t.frobenius_sq(), dense_frobenius_sq(&d)) < 1e-12 || t.is_zero());
        for (a, b) in t.trace_vector().iter().zip(dense_trace_vector(&d, p)) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = t.s_matrix().to_row_major();
        for (a, b) in s.iter().zip(dense_s_matrix(&d, p)) {
            assert!((a - b).abs() < 1e-10);
        }
        for _ in 0..5 {
            let u = gaussian_vec(&mut r, p);
            let v = t.evaluate(&u).unwrap();
            assert!((v - dense_eval(&d, p, &u)).abs() <= 1e-10 * (1.0 + v.abs()));
            let sl = t.slice(&u).unwrap().to_row_major();
            for (a, b) in sl.iter().zip(dense_slice(&d, p, &u)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn permuted_input_canonicalizes() {
    let a = SymTensor3::new(3, vec![(2, 0, 1, 1.5), (1, 1, 0, -2.0)]).unwrap();
    let b = SymTensor3::new(3, vec![(0, 1, 2, 1.5), (0, 1, 1, -2.0)]).unwrap();
    assert_eq!(a, b);
    assert!(matches!(
        SymTensor3::new(3, vec![(0, 1, 2, 1.0), (2, 1, 0, 1.0)]),
        Err(Error::DuplicateEntry { .. })
    ));
}

#[test]
fn derivatives_match_finite_differences() {
    let mut r = rng(32);
    for p in [1, 2, 5, 9] {
        let t = random_tensor(&mut r, p, 4 * p);
        let f = |u: &[f64]| t.evaluate(u).unwrap();
        for _ in 0..5 {
            let u = gaussian_vec(&mut r, p);
            let g = t.gradient(&u).unwrap();
            let fd = fd_gradient(f, &u, 1e-5);
            let scale = 1.0 + g.iter().map(|x| x.abs()).fold(0.0, f64::max);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * scale, "grad {a} vs {b}");
            }
            // the Hessian of T is 6 T[u]
            let h = fd_hessian(f, &u, 1e-4);
            let sl = t.slice(&u).unwrap().to_row_major();
            for (a, b) in sl.iter().zip(&h) {
                assert!((6.0 * a - b).abs() <= 1e-5 * scale, "hess {} vs {b}", 6.0 * a);
            }
        }
    }
}

#[test]
fn euler_identities() {
    let mut r = rng(33);
    for p in [2, 4, 8] {
        let t = random_tensor(&mut r, p, 5 * p);
        for _ in 0..10 {
            let u = gaussian_vec(&mut r, p);
            let v = t.evaluate(&u).unwrap();
            let g = t.gradient(&u).unwrap();
            assert!((dot(&g, &u) - 3.0 * v).abs() <= 1e-10 * (1.0 + v.abs()));
            let su = t.slice(&u).unwrap().mul_vec(&u);
            for (a, b) in su.iter().zip(&g) {
                assert!((3.0 * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
            assert!((t.slice(&u).unwrap().quad_form(&u) - v).abs() <= 1e-10 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn s_matrix_quadratic_form_is_slice_frobenius() {
    let mut r = rng(34);
    let t = random_tensor(&mut r, 7, 30);
    let s2 = t.s_matrix();
    for _ in 0..100 {
        let u = gaussian_vec(&mut r, 7);
        let lhs = s2.quad_form(&u);
        let rhs = 2.0 * frob_sq(&t.slice(&u).unwrap().to_row_major());
        assert!(rel_err(lhs, rhs) < 1e-10);
    }
}

#[test]
fn moments_closed_form_examples() {
    assert_eq!(gaussian_moments_exact(&scalar(1.0)).e_t2, 15.0);
    let t = SymTensor3::new(3, vec![(0, 1, 2, 2.0)]).unwrap();
    let m = gaussian_moments_exact(&t);
    assert_eq!(m.e_t2, 36.0 * 4.0);
    assert_eq!(m.e_centered2, 36.0 * 4.0);
}

#[test]
fn moments_against_sampling() {
    let mut r = rng(35);
    let t = random_tensor(&mut r, 4, 8);
    let exact = gaussian_moments_exact(&t);
    let m = t.trace_vector();
    let s = sample_vectors(NoiseFamily::Gaussian, quadconc::linalg::Factor::identity(4), 300_000, RngSpec::new(36)).unwrap();
    let (a, b, c) = s.fold(
        0,
        || (Welford::default(), Welford::default(), Welford::default()),
        |(a, b, c), g| {
            let v = t.evaluate(g).unwrap();
            a.push(v * v);
            b.push((v - 3.0 * dot(&m, g)).powi(2));
            let gr = t.gradient(g).unwrap();
            c.push(gr.iter().map(|x| (x / 3.0).powi(2)).sum());
        },
        |x, y| {
            x.0.merge(&y.0);
            x.1.merge(&y.1);
            x.2.merge(&y.2);
        },
    );
    assert!((a.mean - exact.e_t2).abs() <= 5.0 * a.stderr());
    assert!((b.mean - exact.e_centered2).abs() <= 5.0 * b.stderr());
    assert!((c.mean - exact.e_grad_norm2).abs() <= 5.0 * c.stderr());
}

#[test]
fn norm_diagonal_and_scalar() {
    let t = SymTensor3::new(2, vec![(0, 0, 0, 3.0), (1, 1, 1, 4.0)]).unwrap();
    let n = operator_norm(&t, &NormOptions::default());
    assert!((n.value - 4.0).abs() < 1e-6);
    assert!(n.converged);
    assert!((operator_norm(&scalar(-2.5), &NormOptions::default()).value - 2.5).abs() < 1e-14);
    assert_eq!(operator_norm(&SymTensor3::zeros(3), &NormOptions::default()).value, 0.0);
}

#[test]
fn norm_inequalities() {
    let mut r = rng(37);
    for p in [2, 3, 6, 10] {
        let t = random_tensor(&mut r, p, 4 * p);
        let n = operator_norm(&t, &NormOptions::default()).value;
        let fr = t.frobenius_sq().sqrt();
        assert!(n <= fr * (1.0 + 1e-10));
        // the norm dominates every sampled value of the cubic form
        for _ in 0..2000 {
            let u = unit_vec(&mut r, p);
            assert!(t.evaluate(&u).unwrap().abs() <= n * (1.0 + 1e-9));
        }
        for _ in 0..200 {
            let u = gaussian_vec(&mut r, p);
            let un = dot(&u, &u).sqrt();
            let g = t.gradient(&u).unwrap();
            assert!(dot(&g, &g).sqrt() <= 3.0 * n * un * un * (1.0 + 1e-9));
            let sl = t.slice(&u).unwrap().eigenvalues();
            let op = sl.iter().fold(0.0f64, |m, l| m.max(l.abs()));
            assert!(6.0 * op <= 6.0 * n * un * (1.0 + 1e-9));
        }
    }
}

#[test]
fn banach_grid_and_trilinear() {
    let mut r = rng(38);
    for (case, p) in [2, 2, 3, 3, 4, 4].into_iter().enumerate() {
        let t = random_tensor(&mut r, p, 3 * p);
        if t.is_zero() {
            continue;
        }
        let cubic = cubic_sup_grid(&t, 100 + case as u64);
        let tri = trilinear_sup(&t, 30, 200 + case as u64);
        let pi = operator_norm(&t, &NormOptions::default()).value;
        assert!(rel_err(tri, cubic) < 1e-2, "p={p} tri={tri} cubic={cubic}");
        assert!(rel_err(pi, cubic) < 1e-3, "p={p} pi={pi} cubic={cubic}");
    }
}

#[test]
fn transform_is_substitution() {
    let mut r = rng(39);
    let t = random_tensor(&mut r, 5, 15);
    let a = DMatrix::from_fn(5, 5, |_, _| r.random_range(-1.0..1.0));
    let ta = t.transform(&a).unwrap();
    for _ in 0..20 {
        let u = gaussian_vec(&mut r, 5);
        let au: Vec<f64> = (a.clone() * nalgebra::DVector::from_column_slice(&u)).iter().cloned().collect();
        let lhs = ta.evaluate(&u).unwrap();
        let rhs = t.evaluate(&au).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}

#[test]
fn certificate_dominates_on_samples() {
    let mut r = rng(40);
    for p in [2, 4, 6] {
        let t = random_tensor(&mut r, p, 3 * p);
        let gamma = random_spd(&mut r, p, 0.5, 2.0);
        // some restarts converge linearly with a large shift; 500 iterations is not always enough
        let opts = NormOptions {
            iters: 2000,
            ..Default::default()
        };
        let cert = certify_gamma(&t, &gamma, &opts).unwrap();
        assert!(cert.certified, "{}", cert.method);
        let chk = verify_gamma_tau(&t, &gamma, cert.tau, 10_000, 41).unwrap();
        assert!(chk.holds, "{chk:?}");
        // the bound is nearly tight: sampled ratios approach τ
        assert!(chk.max_ratio >= 0.5 * cert.tau);
    }
}

#[test]
fn pushforward_substitution_and_condition() {
    let mut r = rng(42);
    let p = 4;
    let t = random_tensor(&mut r, p, 12);
    let gamma = random_spd(&mut r, p, 0.5, 2.0);
    let d = random_spd(&mut r, p, 0.5, 3.0);
    let spec = ColoredSpec::with_gamma(d.clone(), &gamma).unwrap();
    let pf = colored_pushforward(&t, &spec).unwrap();
    let dinv = d.inverse().unwrap();
    let cert = certify_gamma(&t, &gamma, &NormOptions::default()).unwrap();
    for _ in 0..1000 {
        let u = gaussian_vec(&mut r, p);
        let v = pf.ttilde.evaluate(&u).unwrap();
        let direct = t.evaluate(&dinv.mul_vec(&u)).unwrap();
        assert!((v - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        // |T̃(u)| <= τ ‖Ju‖³ with ‖Ju‖² = uᵀJ²u
        let ju = pf.jsq.quad_form(&u).sqrt();
        assert!(v.abs() <= cert.tau * ju.powi(3) * (1.0 + 1e-8));
    }
    assert!(matches!(ColoredSpec::new(SymMatrix::diag(&[1.0, -1.0])), Err(Error::SingularD)));
    let bare = ColoredSpec::new(d).unwrap();
    assert!(matches!(colored_pushforward(&t, &bare), Err(Error::MissingGamma)));
}

#[test]
fn bound_sheet_dominates_exact_quantities() {
    let mut r = rng(43);
    for case in 0..100 {
        let p = 2 + case % 5;
        let t = random_tensor(&mut r, p, 3 * p);
        let gamma = random_spd(&mut r, p, 0.5, 2.0);
        let cert = certify_gamma(&t, &gamma, &NormOptions::default()).unwrap();
        let sheet = gamma_bounds(&cert, None).unwrap();
        let tol = 1e-8;
        assert!(t.frobenius_sq() <= sheet.frobenius_sq_bound * (1.0 + tol));
        let m = t.trace_vector();
        assert!(dot(&m, &m).sqrt() <= sheet.trace_vec_bound * (1.0 + tol));
        let ex = gaussian_moments_exact(&t);
        assert!(ex.e_t2 <= sheet.e_t2_bound_sharp * (1.0 + tol));
        assert!(sheet.e_t2_bound_sharp <= sheet.e_t2_bound * (1.0 + tol));
        // S² ≼ 2τ² tr G⁴ · G²
        let s2 = t.s_matrix().to_row_major();
        let g2 = gamma.square().to_row_major();
        let diff: Vec<f64> = g2.iter().zip(&s2).map(|(g, s)| sheet.s_matrix_dominance_factor * g - s).collect();
        let scale = 1.0 + frob_sq(&s2).sqrt();
        assert!(jacobi_eigenvalues(&diff, p)[0] >= -1e-8 * scale);
        for _ in 0..20 {
            let u = gaussian_vec(&mut r, p);
            let g = t.gradient(&u).unwrap();
            assert!(dot(&g, &g).sqrt() <= sheet.gradient_bound(&u) * (1.0 + tol));
            let sl = frob_sq(&t.slice(&u).unwrap().to_row_major());
            assert!(sl <= sheet.slice_frobenius_sq_bound(&u) * (1.0 + tol));
        }
    }
}

#[test]
fn scalar_sheet_saturates() {
    let cert = certify_gamma(&scalar(1.0), &SymMatrix::identity(1), &NormOptions::default()).unwrap();
    let sheet = gamma_bounds(&cert, None).unwrap();
    assert_eq!(sheet.e_t2_bound, 15.0);
    assert_eq!(gaussian_moments_exact(&scalar(1.0)).e_t2, sheet.e_t2_bound);
}

#[test]
fn herbst_constants() {
    let jsq = quadconc::linalg::SpectralSummary::from_eigenvalues(&[1.0]);
    let r = herbst_radius(&jsq, 1.0).unwrap();
    assert!((r * r - 5.0).abs() < 1e-14);
    let eps = herbst_epsilon(0.01, r, 1.0, EpsilonKind::Tensor).unwrap();
    assert!((eps - 0.15).abs() < 1e-14);
    for k in 1..=10u32 {
        let c = moment_constant(k).unwrap();
        let f: f64 = (1..=k).map(f64::from).product();
        assert!(rel_err(c * c, 2f64.powi(k as i32 + 1) * f) < 1e-12);
    }
    assert_eq!(moment_constant(MOMENT_CONSTANT_MAX_K + 1), Err(Error::Overflow(MOMENT_CONSTANT_MAX_K + 1)));
}

fn tensor_strategy() -> impl Strategy<Value = SymTensor3> {
    (1usize..6, prop::collection::vec((0usize..6, 0usize..6, 0usize..6, -3.0f64..3.0), 0..12)).prop_map(|(p, items)| {
        let mut seen = std::collections::BTreeSet::new();
        let items: Vec<_> = items
            .into_iter()
            .map(|(i, j, k, v)| (i % p, j % p, k % p, v))
            .filter(|&(i, j, k, _)| {
                let mut key = [i, j, k];
                key.sort();
                seen.insert(key)
            })
            .collect();
        SymTensor3::new(p, items).unwrap()
    })
}

proptest! {
    #[test]
    fn cubic_homogeneity(t in tensor_strategy(), c in -4.0f64..4.0, seed in 0u64..1000) {
        let mut r = rng(seed);
        let u = gaussian_vec(&mut r, t.dim());
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let lhs = t.evaluate(&cu).unwrap();
        let rhs = c.powi(3) * t.evaluate(&u).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn moment_identity_relations(t in tensor_strategy()) {
        let m = gaussian_moments_exact(&t);
        let tr = t.s_matrix().trace();
        // tr S² = 2‖T‖²_Fr, the trace of the gradient covariance
        prop_assert!((tr - 2.0 * t.frobenius_sq()).abs() <= 1e-10 * (1.0 + tr));
        prop_assert!(m.e_centered2 <= m.e_t2 + 1e-12);
        prop_assert!(3.0 * m.e_grad_norm2 <= m.e_t2 * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn norm_scales_linearly(t in tensor_strategy(), c in 0.1f64..10.0) {
        let opts = NormOptions::default();
        let a = operator_norm(&t.scale(c), &opts).value;
        let b = c * operator_norm(&t, &opts).value;
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b));
    }

    #[test]
    fn text_round_trip(t in tensor_strategy()) {
        let back = parse_tensor(&t.to_text(), Some(t.dim())).unwrap();
        prop_assert_eq!(back, t);
    }
}
