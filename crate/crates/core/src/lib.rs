//! Equivariant harmonic self-maps of spheres by shooting, and harmonic maps
//! of non-compact cohomogeneity-one manifolds by conformal deformation.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod integrator;
pub mod noncompact;
pub mod ode;
pub mod output;
pub mod quadrature;
pub mod shooting;

pub use error::{Error, Result};
