//! Spectral-fractional elliptic solves `(-A)^s u = f` computed through the
//! Bessel-type extension problem.
//!
//! The extension solution is written as a weighted integral of the semigroup
//! generated by `A`. This crate truncates that integral, replaces the
//! semigroup with the Crank–Nicolson map `S(h) = (I - h/2 A)^{-1}(I + h/2 A)`
//! and sums the resulting series in a single streaming pass. The trace at
//! `t = 0` is the fractional solve.
//!
//! Module map:
//!
//! * [`operators`]: finite-difference discretizations (1D Laplacian, disk
//!   Laplacian, 1D variable-coefficient elliptic operator) and the
//!   logarithmic-norm estimate.
//! * [`semigroup`]: the cached-factorization stepper plus dense spectral and
//!   Balakrishnan oracles.
//! * [`extension`]: quadrature weights, the streaming evaluation, trace solve,
//!   conormal derivative, and the two-chain split.
//! * [`specfun`]: Gamma, `J_1`, `K_nu`, closed-form reference solutions.
//! * [`problems`] and [`solvers`]: name-keyed registries of test problems and
//!   trace solvers, selected at runtime.
//! * [`harness`]: convergence studies, observed rates and the Milne device.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod error;
pub mod extension;
pub mod field;
pub mod harness;
pub mod operators;
pub mod problems;
pub mod registry;
pub mod semigroup;
pub mod solvers;
pub mod specfun;

pub use error::{Error, Result};
pub use extension::{
    conormal_estimate, extend, extend_parallel_split, solve_fractional, weights, ExtensionConfig,
    ExtensionResult,
};
pub use field::FieldVector;
pub use operators::{
    apply_operator, build_elliptic_1d, build_laplacian_1d, build_laplacian_disk, estimate_log_norm,
    DiscreteOperator, DiskGrid, EllipticCoefficients, Grid1D, GridLayout,
};
pub use semigroup::{
    apply_stepper, balakrishnan_apply, make_stepper, spectral_decompose, spectral_fractional_apply,
    spectral_semigroup_apply, SpectralDecomposition, Stepper,
};
