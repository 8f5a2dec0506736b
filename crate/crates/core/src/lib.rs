//! Noise-robust classification losses and the machinery to certify them.
//!
//! The crate is organized around five pieces:
//!
//! - [`simplex`] — probability vectors, labels, datasets, and the softmax map.
//! - [`losses`] — the loss zoo (CE, FL, MAE, MSE, RCE, normalized variants,
//!   AMSE, and active/passive combinations such as JAL-CE and JAL-FL), each
//!   with a closed-form value and an analytic gradient.
//! - [`verifier`] — numerical certification of the symmetric and asymmetric
//!   robustness conditions: the closed-form threshold on the dominant-weight
//!   ratio, the one-dimensional `sup h(x)` reduction behind it, and a
//!   brute-force simplex-grid oracle that cross-checks both.
//! - [`noise`] — seeded label corruption (symmetric, pair-flip, group-shift,
//!   instance-dependent) with analytic and empirical transition matrices.
//! - [`trainer`] / [`harness`] — a deterministic from-scratch MLP trainer
//!   (SGD + momentum, L1/L2 decay, cosine annealing) and the experiment
//!   runner behind the `asymloss` CLI.
//!
//! Everything is seeded and single-threaded by default: the same inputs and
//! seeds produce bit-identical outputs.

pub mod error;
pub mod harness;
pub mod losses;
pub mod noise;
pub mod rng;
pub mod simplex;
pub mod trainer;
pub mod verifier;

pub use error::Error;
pub use losses::LossSpec;
pub use noise::NoiseSpec;
pub use simplex::{ClassLabel, Dataset, ProbVector, Sample};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
