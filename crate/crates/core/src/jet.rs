//! Truncated Taylor arithmetic used to evaluate the closed-form profile
//! families together with their first five derivatives.
//!
//! A [`Jet`] stores normalized Taylor coefficients `c_k = f^(k)(s) / k!`.

use std::ops::{Add, Mul, Neg, Sub};

pub(crate) const ORDER: usize = 5;
const LEN: usize = ORDER + 1;
const FACTORIAL: [f64; LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet([f64; LEN]);

impl Jet {
    pub fn constant(value: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = value;
        Jet(c)
    }

    /// The affine map `s -> (s - shift) * scale` expanded about `s`.
    pub fn affine(s: f64, shift: f64, scale: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = (s - shift) * scale;
        c[1] = scale;
        Jet(c)
    }

    pub fn zero() -> Self {
        Jet([0.0; LEN])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn derivatives(&self) -> [f64; LEN] {
        let mut d = [0.0; LEN];
        for k in 0..LEN {
            d[k] = self.0[k] * FACTORIAL[k];
        }
        d
    }

    pub fn scale(self, factor: f64) -> Self {
        Jet(self.0.map(|c| c * factor))
    }

    pub fn recip(self) -> Self {
        let a = &self.0;
        let mut r = [0.0; LEN];
        r[0] = 1.0 / a[0];
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += a[j] * r[k - j];
            }
            r[k] = -acc * r[0];
        }
        Jet(r)
    }

    pub fn exp(self) -> Self {
        let a = &self.0;
        let mut g = [0.0; LEN];
        g[0] = a[0].exp();
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * g[k - j];
            }
            g[k] = acc / k as f64;
        }
        Jet(g)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|c| -c))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (a, b) = (&self.0, &rhs.0);
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            for j in 0..=k {
                c[k] += a[j] * b[k - j];
            }
        }
        Jet(c)
    }
}

/// C-infinity step that is exactly 0 for `x <= 0`, exactly 1 for `x >= 1`,
/// built from `exp(-1/x)`. The argument jet carries the chain rule.
pub(crate) fn smooth_step(x: Jet) -> Jet {
    let t = x.value();
    if t <= 0.0 {
        return Jet::zero();
    }
    if t >= 1.0 {
        return Jet::constant(1.0);
    }
    let left = flat_exp(x);
    let right = flat_exp(Jet::constant(1.0) - x);
    left * (left + right).recip()
}

/// `exp(-1/x)` for `x > 0`, zero otherwise. Below 1e-3 the value and all
/// derivatives underflow, so the zero jet is returned directly.
fn flat_exp(x: Jet) -> Jet {
    if x.value() < 1e-3 {
        Jet::zero()
    } else {
        (-x.recip()).exp()
    }
}
