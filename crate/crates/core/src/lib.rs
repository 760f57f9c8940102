//! Counting zeros of abelian integrals of polynomials along zero-cycles.
//!
//! For a polynomial `f` of degree `m` and a zero-cycle (integer weights `n_j`
//! summing to zero on the `m` preimages `z_j(t)` of `t`), the abelian integral
//! of `g` is `sum_j n_j g(z_j(t))`. This crate counts its zeros, the zeros of
//! the displacement of the deformation `f + εg`, and compares both with the
//! closed-form bounds.

pub mod counting;
pub mod cycle;
pub mod error;
pub mod exec;
pub mod fiber;
pub mod linalg;
pub mod melnikov;
pub mod oracle;
pub mod perm;
pub mod poly;
pub mod precision;
pub mod report;

pub use error::{Error, Result};
