//! Riemannian conjugate gradient methods with scaled vector transport.
//!
//! The crate is organised as
//! - [`manifolds`]: sphere, Stiefel, fixed-rank and oblique geometry;
//! - [`objectives`]: benchmark cost functions and their gradients;
//! - [`linesearch`]: backtracking Armijo and strong Wolfe step selection;
//! - [`cg`]: the conjugate gradient iteration, β rules and descent audits.

// `!(a < b)` is used deliberately so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cg;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod manifolds;
pub mod objectives;

pub use error::{Error, Result};
pub use manifolds::{Manifold, ManifoldPoint, TangentVector};
