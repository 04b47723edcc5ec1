//! Forward and inverse numerics for curved quantum waveguides.
//!
//! A strip or tube of fixed cross-section is bent along a reference curve
//! with curvature `γ` (and, in three dimensions, a torsion angle `θ`).
//! Straightening maps the Dirichlet Laplacian on the guide to a
//! variable-coefficient operator on a straight product domain whose
//! centerline potential is `-γ²/4`. This crate discretizes that operator,
//! solves for bound states and Poisson solutions, and recovers `γ²` from
//! centerline data.

pub mod error;
pub mod geometry;
pub mod inverse;
pub mod io;
mod jet;
pub mod manufactured;
pub mod operator;
pub mod profiles;
#[cfg(test)]
mod proptests;
pub mod solve;

pub use error::{Error, Result};
pub use geometry::{CrossSection, GuideSpec};
pub use operator::{assemble, DiscreteOperator, Field, Grid};
pub use profiles::{CurvatureProfile, TorsionSpec};
pub use solve::{Eigenpair, SolveOptions};
