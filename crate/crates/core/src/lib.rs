//! Numerical laboratory for local ergodic theorems in finite-dimensional
//! noncommutative `L^p` spaces.
//!
//! The crate models a semifinite von Neumann algebra by a finite direct sum
//! of matrix blocks with a weighted trace, builds semigroups of absolute
//! contractions on it, computes local Cesàro and weighted averages by
//! adaptive quadrature, and constructs the projections that witness
//! bilateral almost uniform convergence.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod averaging;
pub mod banach;
pub mod bau;
pub mod config;
pub mod error;
pub mod expm;
pub mod quadrature;
pub mod random;
pub mod semigroup;

pub use algebra::{
    meet_all, proj_meet, spectral_projection, CMatrix, Operator, OperatorJson, Projection,
    SpectralResolution, TracialAlgebra,
};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use num_complex::Complex64;
