//! Deterministic numerical kernels shared by every other module.

pub mod eigen;
pub mod fft;
pub mod matrix;
pub mod rng;

pub use eigen::{sym_eig, sym_eig_with_vectors, EigenResult};
pub use fft::{circular_convolve, circular_convolve_direct, CirculantKernel};
pub use matrix::{mat_vec, DenseMatrix, RealVector};
pub use rng::{rng_standard_normal, RngCursor, RngStream};
