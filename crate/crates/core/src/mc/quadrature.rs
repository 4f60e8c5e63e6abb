//! Gauss–Hermite quadrature for expectations of smooth functions of a
//! centered Gaussian.

use std::f64::consts::PI;

/// Nodes and weights for `∫ f(x) e^{−x²} dx ≈ Σ w_i f(x_i)`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        // initial guesses for the largest roots first
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E f(εγ)` for `γ ~ N(0, 1)` with `n` Gauss–Hermite nodes.
pub fn gaussian_expectation(eps: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s = std::f64::consts::SQRT_2 * eps;
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(s * xi)).sum::<f64>() / PI.sqrt()
}
