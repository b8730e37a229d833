//! Harmonic self-maps of non-compact cohomogeneity-one manifolds
//! `ℝ^{k₀+1} × Π Gᵢ/Hᵢ` with warped-product metrics.
//!
//! A radial profile `r` that solves the radial equation near the singular
//! orbit is extended monotonically; a conformal change `e^{2αᵢ}` of the
//! orbit metrics beyond `ε` then makes the extended map harmonic.

mod deform;
mod extend;
mod ivp;
mod metric;
mod profile;

pub use deform::*;
pub use extend::{extend_monotone, Extension, ExtensionReport, ExtensionScheme, RadialProfile};
pub use ivp::{ivp_solve, ivp_solve_with, series_cubic, IvpConfig, RadialJet, RadialTrajectory};
pub use metric::{builtin, cone_with_smoothed_factor, flat_cone, two_factor, Component, WarpedMetric, BUILTIN_NAMES};
pub use profile::{Jet, Profile, Table};
