//! Curvature of chart-defined Riemannian manifolds and closed immersed
//! hypersurfaces, and quadrature verification of generalized
//! Minkowski / Hsiung–Minkowski integral identities.

#![no_std]
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::suspicious_arithmetic_impl
)]

extern crate alloc;

pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod hypersurface;
pub mod identity;
pub mod jet;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};
