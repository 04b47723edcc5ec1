//! Straightened operator: coefficients, grids and fields, and the sparse
//! symmetric finite-difference assembly with Dirichlet ends.

mod coefficients;
mod grid;
mod matrix;

pub use coefficients::{coeff_c, coeff_h, potential_v2, potential_v3};
pub use grid::{Field, Grid};
pub use matrix::{apply, assemble, discrete_dirichlet_eigenvalue, straighten_inverse, DiscreteOperator};
