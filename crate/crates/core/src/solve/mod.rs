//! Eigenpairs and Poisson solutions of the discrete operator.

mod banded;
mod cg;
pub mod linalg;
mod lobpcg;

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

pub use banded::BandCholesky;

use crate::error::{Error, Result};
use crate::geometry::{CrossSection, GuideSpec};
use crate::operator::{DiscreteOperator, Field};
use linalg::{dot, norm, scale};

/// Largest unknown count accepted by [`dense_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 20_000;

/// Eigenvalues closer than this to the threshold are flagged as possible
/// truncation artifacts.
pub const NEAR_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    Diagonal,
    /// Band Cholesky factor of `A - σI`. For the assembled stencils all fill
    /// stays inside the band, so the factor is exact.
    IncompleteFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub eig_tol: f64,
    pub lin_tol: f64,
    pub max_iter: usize,
    pub block_size: usize,
    pub preconditioner: Preconditioner,
    pub seed: u64,
    /// Move the preconditioner shift towards the converging eigenvalue.
    pub adaptive_shift: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eig_tol: 1e-10,
            lin_tol: 1e-12,
            max_iter: 500,
            block_size: 4,
            preconditioner: Preconditioner::IncompleteFactor,
            seed: 0x5eed,
            adaptive_shift: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eig_tol > 0.0) {
            return Err(Error::param("eig_tol", "must be positive"));
        }
        if !(self.lin_tol > 0.0) {
            return Err(Error::param("lin_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(Error::param("block_size", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Unit norm, with `Σφ > 0`.
    pub phi: Field,
    /// `‖Aφ - λφ‖ / ‖φ‖`, recomputed after normalization.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Within [`NEAR_THRESHOLD`] of (or above) the essential-spectrum threshold.
    pub near_threshold: bool,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub pairs: Vec<Eigenpair>,
}

impl Spectrum {
    /// `λ₂ - λ₁`, when at least two pairs were computed.
    pub fn gap(&self) -> Option<f64> {
        match self.pairs.as_slice() {
            [a, b, ..] => Some(b.lambda - a.lambda),
            _ => None,
        }
    }
}

/// First Dirichlet eigenvalue of the cross-section.
pub fn essential_spectrum_threshold(spec: &GuideSpec) -> f64 {
    cross_section_threshold(&spec.cross_section)
}

fn cross_section_threshold(cs: &CrossSection) -> f64 {
    cs.widths().iter().map(|w| (PI / w).powi(2)).sum()
}

fn finish(a: &DiscreteOperator, lambda: f64, mut v: Vec<f64>, iterations: usize) -> Result<Eigenpair> {
    let nv = norm(&v);
    let sum: f64 = v.iter().sum();
    scale(if sum < 0.0 { -1.0 } else { 1.0 } / nv, &mut v);
    let mut r = vec![0.0; v.len()];
    a.apply_into(&v, &mut r);
    linalg::axpy(-lambda, &v, &mut r);
    let threshold = cross_section_threshold(&a.grid().cross_section);
    Ok(Eigenpair {
        lambda,
        residual_norm: norm(&r),
        phi: Field::new(*a.grid(), v)?,
        iterations,
        near_threshold: lambda > threshold - NEAR_THRESHOLD,
    })
}

/// The `m` lowest eigenpairs, ascending.
pub fn eigenpairs(a: &DiscreteOperator, m: usize, opts: &SolveOptions) -> Result<Spectrum> {
    opts.validate()?;
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if m > a.n() {
        return Err(Error::param("m", format!("exceeds the {} unknowns", a.n())));
    }
    let out = lobpcg::lowest(a, m, opts)?;
    let pairs = out
        .values
        .into_iter()
        .zip(out.vectors)
        .map(|(l, v)| finish(a, l, v, out.iterations))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { pairs })
}

/// Smallest eigenvalue and its eigenvector.
pub fn ground_eigenpair(a: &DiscreteOperator, opts: &SolveOptions) -> Result<Eigenpair> {
    Ok(eigenpairs(a, 1, opts)?.pairs.remove(0))
}

/// Solution of `A φ = f` by preconditioned conjugate gradients.
pub fn poisson_solve(a: &DiscreteOperator, f: &Field, opts: &SolveOptions) -> Result<Field> {
    opts.validate()?;
    a.grid().check_same(&f.grid)?;
    let x = cg::solve(a, &f.values, opts)?;
    Field::new(*a.grid(), x)
}

/// Full dense eigendecomposition, ascending. Verification only.
pub fn dense_oracle(a: &DiscreteOperator) -> Result<Vec<Eigenpair>> {
    let n = a.n();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .map(|i| {
            let v = eig.eigenvectors.column(i).iter().copied().collect();
            finish(a, eig.eigenvalues[i], v, 0)
        })
        .collect()
}

/// `|⟨x, y⟩| / (‖x‖ ‖y‖)`.
pub fn correlation(x: &Field, y: &Field) -> f64 {
    dot(&x.values, &y.values).abs() / (x.norm() * y.norm())
}
