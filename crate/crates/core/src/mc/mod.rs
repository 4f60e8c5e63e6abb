//! Reproducible Monte Carlo: chunked substreams, noise families, reports and
//! the verification drivers built on them.

pub mod engine;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod verify;

pub use engine::{binomial_stderr, run_chunks, RngSpec, Welford, DEFAULT_CHUNK};
pub use quadrature::{gauss_hermite, gaussian_expectation};
pub use report::{all_pass, Check, McReport};
pub use sampling::{sample_vectors, NoiseFamily, SampleStream};
pub use verify::{
    estimate_tail, tail_counts, verify_moment_constants, verify_quantile_bound, verify_taylor_remainder,
    verify_tensor_moments, verify_truncated_mgf, MgfVerification,
};
