//! Exact rational arithmetic and dense exact linear algebra.
//!
//! [`Rational`] is an arbitrary-precision rational kept in lowest terms with
//! a positive denominator; its text form (`-3/4`, `2`) round-trips exactly.
//! [`RVector`] and [`RMatrix`] are dense containers over it. The kernels in
//! this module (rank, solve, null-space basis, right inverse) all run one
//! deterministic Gauss-Jordan elimination: pivot on the leftmost unresolved
//! column, lowest row index first, so every result is reproducible
//! bit-for-bit across runs and platforms.

mod linalg;
mod matrix;
mod rational;

pub use linalg::{
    null_space_basis, rank, reduced_row_echelon, right_inverse, solve_linear, solve_linear_multi,
    Echelon, LinalgError,
};
pub use matrix::{RMatrix, RVector};
pub use rational::{ParseRationalError, Rational};
