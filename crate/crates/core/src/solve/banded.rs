use crate::error::{Error, Result};
use crate::operator::DiscreteOperator;

/// Cholesky factor of `A - shift I` restricted to the band profile of `A`.
///
/// Fill is only created inside the band. For the s-major stencil orderings
/// produced by [`crate::operator::assemble`] all Cholesky fill lies inside the
/// band, so the factor is exact there; for other patterns it is an
/// incomplete factor with banded fill.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    band: usize,
    shift: f64,
    /// Row `i` holds columns `i - band ..= i` at offsets `0 ..= band`.
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &DiscreteOperator, shift: f64) -> Result<Self> {
        let n = a.n();
        let band = a.bandwidth();
        let w = band + 1;
        let mut l = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    l[r * w + c + band - r] = if c == r { v - shift } else { v };
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(band);
            for j in j0..=i {
                let len = j - j0;
                let ri = i * w + j0 + band - i;
                let rj = j * w + j0 + band - j;
                let mut acc = l[i * w + j + band - i];
                for k in 0..len {
                    acc -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(acc > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: acc });
                    }
                    l[i * w + band] = acc.sqrt();
                } else {
                    l[i * w + j + band - i] = acc / l[j * w + band];
                }
            }
        }
        Ok(BandCholesky { n, band, shift, l })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Overwrites `x` with `(A - shift I)^{-1} x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.band, self.band + 1);
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            let row = &self.l[i * w + j0 + b - i..i * w + b];
            let mut acc = x[i];
            for (lik, xk) in row.iter().zip(&x[j0..i]) {
                acc -= lik * xk;
            }
            x[i] = acc / self.l[i * w + b];
        }
        for i in (0..n).rev() {
            x[i] /= self.l[i * w + b];
            let xi = x[i];
            let j0 = i.saturating_sub(b);
            let row = &self.l[i * w + j0 + b - i..i * w + b];
            for (xk, lik) in x[j0..i].iter_mut().zip(row) {
                *xk -= lik * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GuideSpec;
    use crate::operator::{assemble, Grid};
    use crate::profiles::{CurvatureProfile, TorsionSpec};

    #[test]
    fn solves_match_the_operator() {
        let spec = GuideSpec::strip(1.0, 6.0).unwrap();
        let grid = Grid::new(&spec, 41, 7).unwrap();
        let a = assemble(&grid, &spec, &CurvatureProfile::gaussian(0.4, 1.0).unwrap()).unwrap();
        let f = BandCholesky::factor(&a, 0.0).unwrap();
        let b: Vec<f64> = (0..a.n()).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let mut ax = vec![0.0; a.n()];
        a.apply_into(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn shifted_factor_in_three_dimensions() {
        let t = TorsionSpec::ramp(0.0, 1.0, 0.0, 2.0).unwrap();
        let spec = GuideSpec::tube(1.0, 1.0, 4.0, t).unwrap();
        let grid = Grid::new(&spec, 15, 5).unwrap();
        let a = assemble(&grid, &spec, &CurvatureProfile::gaussian(0.3, 1.0).unwrap()).unwrap();
        let shift = 5.0;
        let f = BandCholesky::factor(&a, shift).unwrap();
        let b: Vec<f64> = (0..a.n()).map(|k| (k as f64).sin()).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let mut ax = vec![0.0; a.n()];
        a.apply_into(&x, &mut ax);
        for k in 0..a.n() {
            assert!((ax[k] - shift * x[k] - b[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_shift_is_detected() {
        let spec = GuideSpec::strip(1.0, 6.0).unwrap();
        let grid = Grid::new(&spec, 21, 5).unwrap();
        let a = assemble(&grid, &spec, &CurvatureProfile::zero()).unwrap();
        // the smallest eigenvalue is slightly above π²
        assert!(matches!(
            BandCholesky::factor(&a, 12.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
