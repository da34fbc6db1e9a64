//! Column-sign-randomized embeddings.
//!
//! The crate builds embedding operators of the form `A·D_ε` where `A` is a
//! fixed matrix (a normalized Gaussian matrix or a partial circulant matrix
//! generated by random signs) and `D_ε` is a diagonal of independent random
//! signs. Around that it provides:
//!
//! * [`numerics`]: dense matrices, FFT circular convolution, a cyclic Jacobi
//!   eigensolver and a splittable counter-based random stream.
//! * [`ensembles`]: operator construction behind one apply/materialize contract.
//! * [`regularity`]: exact and sampled sparse distortion profiles and the
//!   threshold `k*`.
//! * [`geometry`]: test sets with closed-form support functions, Gaussian
//!   mean-width estimation and uniform distortion evaluation.
//! * [`experiments`]: Monte-Carlo distortion trials, tail reports, scaling
//!   fits and the Gaussian baseline comparison.
//! * [`cli`]: the config-driven front end used by the `signembed` binary.

pub mod cli;
pub mod config;
pub mod ensembles;
mod error;
pub mod experiments;
pub mod geometry;
pub mod numerics;
pub mod regularity;
pub mod svg;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, RealVector, RngStream};
