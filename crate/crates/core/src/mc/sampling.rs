//! Noise families and the sample stream `ξ = L η`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::engine::{run_chunks, RngSpec};
use crate::error::{Error, Result};
use crate::linalg::Factor;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Coordinate laws with zero mean and unit variance.
///
/// All three have variance proxy `g² = 1`: the Rademacher MGF is
/// `cosh λ <= e^{λ²/2}`, and the uniform law on `[−√3, √3]` has MGF
/// `sinh(√3 λ)/(√3 λ) <= e^{λ²/2}` because `sinh y / y <= e^{y²/6}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Rademacher,
    #[serde(rename = "uniform")]
    UniformSym,
}

impl NoiseFamily {
    pub fn gsq(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Rademacher => "rademacher",
            NoiseFamily::UniformSym => "uniform",
        }
    }

    #[inline]
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseFamily::UniformSym => (2.0 * rng.random::<f64>() - 1.0) * SQRT3,
        }
    }

    pub fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = self.draw(rng));
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "rademacher" => Ok(NoiseFamily::Rademacher),
            "uniform" | "uniformsym" => Ok(NoiseFamily::UniformSym),
            other => Err(Error::Unsupported(format!("unknown noise family {other:?}"))),
        }
    }
}

/// `n` draws of `ξ = L η` with iid coordinates of `η` from `family`.
#[derive(Debug, Clone)]
pub struct SampleStream {
    pub family: NoiseFamily,
    pub factor: Factor,
    pub n: usize,
    pub rng: RngSpec,
}

pub fn sample_vectors(family: NoiseFamily, factor: Factor, n: usize, rng: RngSpec) -> Result<SampleStream> {
    if factor.dim() == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok(SampleStream { family, factor, n, rng })
}

impl SampleStream {
    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    /// Parallel fold over all draws; `visit` sees each `ξ` once.
    pub fn fold<A, I, V, M>(&self, threads: usize, init: I, visit: V, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, &[f64]) + Sync,
        M: FnMut(&mut A, A),
    {
        let p = self.dim();
        run_chunks(
            &self.rng,
            self.n,
            threads,
            init,
            |rng, count, acc| {
                let mut eta = vec![0.0; p];
                let mut xi = vec![0.0; p];
                for _ in 0..count {
                    self.family.fill(rng, &mut eta);
                    self.factor.apply(&eta, &mut xi);
                    visit(acc, &xi);
                }
            },
            merge,
        )
    }

    /// Materializes every draw, in stream order.
    pub fn collect(&self, threads: usize) -> Vec<Vec<f64>> {
        self.fold(
            threads,
            Vec::new,
            |acc: &mut Vec<Vec<f64>>, xi| acc.push(xi.to_vec()),
            |a, b| a.extend(b),
        )
    }
}
