//! Blocked preconditioned Rayleigh-quotient minimization (LOBPCG) for the
//! lowest eigenpairs of a sparse symmetric operator.
//!
//! Each iteration performs Rayleigh–Ritz on the span of the current block
//! `X`, the preconditioned residuals `W` and the previous search directions
//! `P`. The basis is orthonormalized explicitly, so the small projected
//! problem is a standard symmetric eigenproblem.
//!
//! With the factor preconditioner the shift is moved towards the lowest
//! Ritz value once its residual is small, which turns the preconditioner
//! into an approximate shift-invert and accelerates the clustered
//! near-threshold part of the spectrum.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandCholesky;
use super::linalg::{axpy, dot, norm, scale};
use super::{Preconditioner, SolveOptions};
use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

/// Problems this small are handed to the dense solver.
const DENSE_CUTOFF: usize = 64;
const DROP_TOL: f64 = 1e-10;

pub(crate) struct Outcome {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
}

pub(crate) enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Factor(BandCholesky),
}

impl Precond {
    pub fn build(a: &DiscreteOperator, kind: Preconditioner, shift: f64) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::Diagonal => {
                let d = a.diagonal();
                if let Some(r) = d.iter().position(|&v| v <= 0.0) {
                    return Err(Error::NotPositiveDefinite { row: r, pivot: d[r] });
                }
                Precond::Jacobi(d.into_iter().map(|v| 1.0 / v).collect())
            }
            Preconditioner::IncompleteFactor => Precond::Factor(BandCholesky::factor(a, shift)?),
        })
    }

    pub fn apply(&self, x: &mut [f64]) {
        match self {
            Precond::Identity => {}
            Precond::Jacobi(inv) => x.iter_mut().zip(inv).for_each(|(v, d)| *v *= d),
            Precond::Factor(f) => f.solve_in_place(x),
        }
    }

    fn shift(&self) -> Option<f64> {
        match self {
            Precond::Factor(f) => Some(f.shift()),
            _ => None,
        }
    }
}

/// Factor preconditioner starting from a shift just below the operator's
/// known spectral lower bound, falling back to no shift.
fn initial_precond(a: &DiscreteOperator, kind: Preconditioner) -> Result<Precond> {
    if kind == Preconditioner::IncompleteFactor {
        if let Some(lb) = a.lower_bound() {
            let shift = lb - 1e-6 * lb.abs().max(1.0);
            if let Ok(p) = Precond::build(a, kind, shift) {
                return Ok(p);
            }
        }
        return Precond::build(a, kind, 0.0);
    }
    Precond::build(a, kind, 0.0)
}

fn matvec(a: &DiscreteOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    a.apply_into(x, &mut y);
    y
}

/// Appends `v` to the orthonormal set `basis` (two Gram–Schmidt passes).
/// Returns false if `v` is numerically dependent.
fn push_orthonormal(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>) -> bool {
    let original = norm(&v);
    if original == 0.0 || !original.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis.iter() {
            let c = dot(b, &v);
            axpy(-c, b, &mut v);
        }
    }
    let nv = norm(&v);
    if nv <= DROP_TOL * original {
        return false;
    }
    scale(1.0 / nv, &mut v);
    basis.push(v);
    true
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = (usize, f64)>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, c) in coeffs {
        axpy(c, &basis[k], &mut out);
    }
    out
}

fn dense_lowest(a: &DiscreteOperator, want: usize) -> Outcome {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.n()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = want.min(a.n());
    Outcome {
        values: order[..take].iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order[..take]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
        iterations: 0,
    }
}

pub(crate) fn lowest(a: &DiscreteOperator, want: usize, opts: &SolveOptions) -> Result<Outcome> {
    let n = a.n();
    let m = opts.block_size.max(want + 2);
    if n <= DENSE_CUTOFF || 3 * m > n / 2 {
        return Ok(dense_lowest(a, want));
    }

    let mut precond = initial_precond(a, opts.preconditioner)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3 * m);
    push_orthonormal(&mut basis, vec![1.0; n]);
    while basis.len() < m {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        push_orthonormal(&mut basis, v);
    }
    let mut n_x = m;
    let mut history = Vec::new();

    for iter in 0..opts.max_iter {
        // Rayleigh–Ritz on the current orthonormal basis.
        let abasis: Vec<Vec<f64>> = basis.iter().map(|v| matvec(a, v)).collect();
        let k = basis.len();
        let mut gram = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let g = 0.5 * (dot(&basis[i], &abasis[j]) + dot(&basis[j], &abasis[i]));
                gram[(i, j)] = g;
                gram[(j, i)] = g;
            }
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let order = &order[..m];
        let theta: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let vecs = &eig.eigenvectors;
        let coeff = |c: usize, range: std::ops::Range<usize>| range.map(move |r| (r, vecs[(r, c)]));
        let x: Vec<Vec<f64>> = order.iter().map(|&c| combine(&basis, coeff(c, 0..k), n)).collect();
        let ax: Vec<Vec<f64>> = order.iter().map(|&c| combine(&abasis, coeff(c, 0..k), n)).collect();
        let new_p: Vec<Vec<f64>> = order
            .iter()
            .map(|&c| combine(&basis, coeff(c, n_x..k), n))
            .collect();

        let residuals: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let mut r = ax[j].clone();
                axpy(-theta[j], &x[j], &mut r);
                r
            })
            .collect();
        let rnorm: Vec<f64> = residuals.iter().map(|r| norm(r)).collect();
        let worst = rnorm[..want].iter().cloned().fold(0.0, f64::max);
        history.push(worst);

        if worst <= opts.eig_tol {
            return Ok(Outcome {
                values: theta[..want].to_vec(),
                vectors: x[..want].to_vec(),
                iterations: iter,
            });
        }

        if opts.adaptive_shift {
            if let Some(current) = precond.shift() {
                let scale_ref = theta[0].abs().max(1.0);
                let target = theta[0] - (10.0 * rnorm[0]).max(1e-8 * scale_ref);
                if rnorm[0] < 1e-3 * scale_ref && (theta[0] - target) < 0.1 * (theta[0] - current) {
                    if let Ok(p) = Precond::build(a, opts.preconditioner, target) {
                        precond = p;
                    }
                }
            }
        }

        let active: Vec<usize> = (0..m).filter(|&j| rnorm[j] > opts.eig_tol).collect();
        basis = Vec::with_capacity(3 * m);
        for v in x {
            push_orthonormal(&mut basis, v);
        }
        n_x = basis.len();
        for &j in &active {
            let mut w = residuals[j].clone();
            precond.apply(&mut w);
            push_orthonormal(&mut basis, w);
        }
        if iter > 0 {
            for &j in &active {
                push_orthonormal(&mut basis, new_p[j].clone());
            }
        }
    }

    Err(Error::NotConverged {
        stage: "eigensolver",
        iterations: opts.max_iter,
        best_residual: history.iter().cloned().fold(f64::INFINITY, f64::min),
        history,
    })
}
