use super::linalg::{axpy, dot, norm};
use super::lobpcg::Precond;
use super::SolveOptions;
use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

/// Preconditioned conjugate gradients for `A x = b`, stopping on the true
/// relative residual `‖b - A x‖ / ‖b‖ ≤ lin_tol`.
pub(crate) fn solve(a: &DiscreteOperator, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    let n = a.n();
    let mut x = vec![0.0; n];
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(x);
    }
    let m = Precond::build(a, opts.preconditioner, 0.0)?;
    let mut ax = vec![0.0; n];
    let mut history = Vec::new();

    let mut r = b.to_vec();
    let mut z = r.clone();
    m.apply(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for _ in 0..opts.max_iter {
        a.apply_into(&p, &mut ax);
        let pap = dot(&p, &ax);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ax, &mut r);
        let rel = norm(&r) / bn;
        history.push(rel);

        if rel <= opts.lin_tol {
            // confirm against the true residual and restart from it if needed
            a.apply_into(&x, &mut ax);
            for (ri, (bi, axi)) in r.iter_mut().zip(b.iter().zip(&ax)) {
                *ri = bi - axi;
            }
            let true_rel = norm(&r) / bn;
            *history.last_mut().unwrap() = true_rel;
            if true_rel <= opts.lin_tol {
                return Ok(x);
            }
            z.copy_from_slice(&r);
            m.apply(&mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }

        z.copy_from_slice(&r);
        m.apply(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    Err(Error::NotConverged {
        stage: "poisson",
        iterations: opts.max_iter,
        best_residual: history.iter().cloned().fold(f64::INFINITY, f64::min),
        history,
    })
}
