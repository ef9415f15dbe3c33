//! Sparse recovery from randomly subsampled circular convolutions.
//!
//! The crate builds partial circulant measurement operators from a seeded
//! generator vector and a Bernoulli row selector, recovers sparse signals by
//! l1 minimization with a primal-dual splitting solver, and ships the
//! analysis and certification tools used to study when recovery succeeds:
//!
//! - [`measurement`]: circular convolution (FFT and naive paths), selector
//!   masks, partial circulant operators, Hadamard-type orthogonal/unitary
//!   transforms and the factored diagonal operators built from them.
//! - [`generators`]: seeded subgaussian sample vectors (Gaussian, Rademacher,
//!   scaled uniform) with moment growth diagnostics.
//! - [`analysis`]: nonincreasing rearrangements, top-k norms, best s-term
//!   approximation errors, cone membership, regularity checks and the
//!   sparsity-regime parameter computation.
//! - [`solver`]: the l1 ball-constrained solver, duality-gap certification
//!   and a-priori error bound evaluation.
//! - [`certify`]: brute-force null space property certificates for explicit
//!   matrices plus Monte Carlo small-ball, selector and one-sparse checks.
//! - [`harness`]: reproducible recovery trials, phase diagrams, minimal
//!   measurement search and noise sweeps with CSV/JSON reporting.
//!
//! Monte Carlo batches run data-parallel through [`par`] when the `parallel`
//! feature (default) is enabled; every batch also has a sequential twin so
//! the two paths can be compared directly.

pub mod analysis;
pub mod certify;
pub mod error;
pub mod generators;
pub mod harness;
pub mod io;
pub mod measurement;
pub mod par;
pub mod solver;
pub mod stats;
pub mod vector;

pub use error::{Error, Result};
