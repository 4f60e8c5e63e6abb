//! Independent oracles for the integration tests: dense tensor loops, a
//! Jacobi eigensolver, finite differences, brute-force sphere searches and
//! chi-square tails.

#![allow(dead_code)]

use quadconc::linalg::SymMatrix;
use quadconc::tensor::SymTensor3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(r: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(r)).collect()
}

pub fn unit_vec(r: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let mut v = gaussian_vec(r, p);
    normalize(&mut v);
    v
}

pub fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `A Aᵀ / p` with `A` a `p × rank` Gaussian matrix.
pub fn random_psd(r: &mut ChaCha8Rng, p: usize, rank: usize) -> SymMatrix {
    let a: Vec<Vec<f64>> = (0..p).map(|_| gaussian_vec(r, rank)).collect();
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            m[i * p + j] = dot(&a[i], &a[j]) / p as f64;
        }
    }
    SymMatrix::from_row_major(p, m).unwrap()
}

/// Symmetric positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd(r: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> SymMatrix {
    let q = random_orthogonal(r, p);
    let lam: Vec<f64> = (0..p).map(|_| r.random_range(lo..hi)).collect();
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            m[i * p + j] = (0..p).map(|k| q[i][k] * lam[k] * q[j][k]).sum();
        }
    }
    SymMatrix::from_row_major(p, m).unwrap()
}

/// Rows of a random orthogonal matrix (Gram–Schmidt on Gaussian rows).
pub fn random_orthogonal(r: &mut ChaCha8Rng, p: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < p {
        let mut v = gaussian_vec(r, p);
        for b in &q {
            let d = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        if normalize(&mut v) > 1e-6 {
            q.push(v);
        }
    }
    q
}

/// Random sparse tensor with up to `nnz` distinct canonical entries.
pub fn random_tensor(r: &mut ChaCha8Rng, p: usize, nnz: usize) -> SymTensor3 {
    let mut seen = std::collections::BTreeSet::new();
    let mut items = Vec::new();
    for _ in 0..nnz {
        let mut idx = [r.random_range(0..p), r.random_range(0..p), r.random_range(0..p)];
        idx.sort();
        if seen.insert(idx) {
            // supplied in a random permutation to exercise canonicalization
            let perm = match r.random_range(0..3) {
                0 => (idx[0], idx[1], idx[2]),
                1 => (idx[2], idx[0], idx[1]),
                _ => (idx[1], idx[2], idx[0]),
            };
            items.push((perm.0, perm.1, perm.2, StandardNormal.sample(r)));
        }
    }
    SymTensor3::new(p, items).unwrap()
}

/// Dense `p³` array built by writing every permutation of each entry.
pub fn dense(t: &SymTensor3) -> Vec<f64> {
    let p = t.dim();
    let mut d = vec![0.0; p * p * p];
    for e in t.entries() {
        let (i, j, k) = (e.i, e.j, e.k);
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            d[(a * p + b) * p + c] = e.value;
        }
    }
    d
}

pub fn dense_eval(d: &[f64], p: usize, u: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                s += d[(i * p + j) * p + k] * u[i] * u[j] * u[k];
            }
        }
    }
    s
}

pub fn dense_trilinear(d: &[f64], p: usize, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                s += d[(i * p + j) * p + k] * u[i] * v[j] * w[k];
            }
        }
    }
    s
}

pub fn dense_frobenius_sq(d: &[f64]) -> f64 {
    d.iter().map(|x| x * x).sum()
}

pub fn dense_trace_vector(d: &[f64], p: usize) -> Vec<f64> {
    (0..p).map(|i| (0..p).map(|j| d[(i * p + j) * p + j]).sum()).collect()
}

/// `(S²)_{ab} = 2 Σ_{jk} T_{ajk} T_{bjk}`.
pub fn dense_s_matrix(d: &[f64], p: usize) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for j in 0..p {
                for k in 0..p {
                    acc += d[(a * p + j) * p + k] * d[(b * p + j) * p + k];
                }
            }
            s[a * p + b] = 2.0 * acc;
        }
    }
    s
}

/// `Σ_i u_i T_i` as a row-major `p × p` buffer.
pub fn dense_slice(d: &[f64], p: usize, u: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                m[j * p + k] += u[i] * d[(i * p + j) * p + k];
            }
        }
    }
    m
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, u: &[f64], h: f64) -> Vec<f64> {
    let mut x = u.to_vec();
    (0..u.len())
        .map(|i| {
            x[i] = u[i] + h;
            let a = f(&x);
            x[i] = u[i] - h;
            let b = f(&x);
            x[i] = u[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, u: &[f64], h: f64) -> Vec<f64> {
    let p = u.len();
    let mut out = vec![0.0; p * p];
    let mut x = u.to_vec();
    for i in 0..p {
        for j in 0..p {
            let mut at = |si: f64, sj: f64| {
                x.copy_from_slice(u);
                x[i] += si * h;
                x[j] += sj * h;
                f(&x)
            };
            out[i * p + j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
        }
    }
    out
}

/// Cyclic Jacobi eigenvalues of a dense symmetric matrix, ascending.
pub fn jacobi_eigenvalues(m: &[f64], p: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j] * a[i * p + j])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for pi in 0..p {
            for q in (pi + 1)..p {
                let apq = a[pi * p + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * p + q] - a[pi * p + pi]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let akp = a[k * p + pi];
                    let akq = a[k * p + q];
                    a[k * p + pi] = c * akp - s * akq;
                    a[k * p + q] = s * akp + c * akq;
                }
                for k in 0..p {
                    let apk = a[pi * p + k];
                    let aqk = a[q * p + k];
                    a[pi * p + k] = c * apk - s * aqk;
                    a[q * p + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..p).map(|i| a[i * p + i]).collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    vals
}

/// Local ascent of `|f|` on the unit sphere by shrinking random perturbations.
fn refine_on_sphere(f: &impl Fn(&[f64]) -> f64, start: &[f64], r: &mut ChaCha8Rng) -> f64 {
    let p = start.len();
    let mut u = start.to_vec();
    let mut best = f(&u).abs();
    let mut step = 0.05;
    while step > 1e-9 {
        let mut improved = false;
        for _ in 0..(8 * p) {
            let mut v: Vec<f64> = u.iter().map(|x| { let z: f64 = StandardNormal.sample(&mut *r); x + step * z }).collect();
            normalize(&mut v);
            let val = f(&v).abs();
            if val > best {
                best = val;
                u = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// `sup_{‖u‖=1} |T(u)|` by an angular grid (`p <= 3`) or random points
/// (`p = 4`), followed by local refinement of the best candidates.
pub fn cubic_sup_grid(t: &SymTensor3, seed: u64) -> f64 {
    let p = t.dim();
    let d = dense(t);
    let f = |u: &[f64]| dense_eval(&d, p, u);
    let mut cands: Vec<(f64, Vec<f64>)> = Vec::new();
    match p {
        1 => return d[0].abs(),
        2 => {
            for a in 0..10_000 {
                let th = std::f64::consts::PI * a as f64 / 10_000.0;
                let u = vec![th.cos(), th.sin()];
                cands.push((f(&u).abs(), u));
            }
        }
        3 => {
            let (nt, np) = (150, 300);
            for a in 0..=nt {
                let th = std::f64::consts::PI * a as f64 / nt as f64;
                for b in 0..np {
                    let ph = 2.0 * std::f64::consts::PI * b as f64 / np as f64;
                    let u = vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    cands.push((f(&u).abs(), u));
                }
            }
        }
        _ => {
            let mut r = rng(seed);
            for _ in 0..60_000 {
                let u = unit_vec(&mut r, p);
                cands.push((f(&u).abs(), u));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut r = rng(seed ^ 0xabc);
    cands
        .iter()
        .take(10)
        .map(|(_, u)| refine_on_sphere(&f, u, &mut r))
        .fold(0.0, f64::max)
}

/// `sup |T(u, v, w)|` over three unit vectors by alternating maximization
/// from `starts` random initial triples.
pub fn trilinear_sup(t: &SymTensor3, starts: usize, seed: u64) -> f64 {
    let p = t.dim();
    let d = dense(t);
    let mut r = rng(seed);
    let contract = |v: &[f64], w: &[f64]| -> Vec<f64> {
        (0..p)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..p {
                    for k in 0..p {
                        s += d[(i * p + j) * p + k] * v[j] * w[k];
                    }
                }
                s
            })
            .collect()
    };
    let mut best = 0.0f64;
    for _ in 0..starts {
        let mut u = unit_vec(&mut r, p);
        let mut v = unit_vec(&mut r, p);
        let mut w = unit_vec(&mut r, p);
        let mut val = 0.0;
        for _ in 0..200 {
            // the block maximum over u with v, w fixed is ‖T(·, v, w)‖
            u = contract(&v, &w);
            normalize(&mut u);
            v = contract(&u, &w);
            normalize(&mut v);
            w = contract(&u, &v);
            let nw = normalize(&mut w);
            let done = (nw - val).abs() <= 1e-14 * nw.max(1e-300);
            val = nw;
            if done {
                break;
            }
        }
        best = best.max(dense_trilinear(&d, p, &u, &v, &w).abs());
    }
    best
}

pub fn chi2_sf(k: f64, t: f64) -> f64 {
    1.0 - ChiSquared::new(k).unwrap().cdf(t)
}

/// Largest eigenvalue of a dense symmetric matrix.
pub fn lambda_max(m: &[f64], p: usize) -> f64 {
    *jacobi_eigenvalues(m, p).last().unwrap()
}
