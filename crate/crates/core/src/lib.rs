//! Fourth-order compact solver for the coupled nonlinear space-fractional
//! Ginzburg-Landau system
//!
//! ```text
//! u_t + (β1 + iη1)(-Δ)^{α/2} u + (μ1 + iζ1)|u|²u - γ1 u - i|u|²v = 0
//! v_t + (β2 + iη2)(-Δ)^{α/2} v + (μ2 + iζ2)|v|²v - γ2 v - i|v|²u = 0
//! ```
//!
//! on a bounded interval with the fields extended by zero outside it.
//!
//! The crate is organised bottom-up:
//!
//! - [`coeffs`]: generating-function coefficient sequences and symbol functions.
//! - [`operators`]: the compact averaging matrix `A`, the fractional matrix `B`
//!   and the closed-form polynomial oracle.
//! - [`norms`]: discrete `l_h^p` norms and the Fourier fractional semi-norm.
//! - [`solver`]: the two-level implicit scheme and its fixed-point iteration.
//! - [`harness`]: accuracy/convergence experiments and the invariant suite.
//! - [`config`]: run configuration, manifests and output writers.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod norms;
pub mod operators;
pub mod solver;
pub mod special;
pub mod toeplitz;

pub use error::{Error, Result};
pub use num_complex::Complex64;
