//! Pointwise coefficients of the straightened operators.

use crate::error::{Error, Result};
use crate::geometry::{metric_2d, metric_3d, MetricSample};
use crate::profiles::{CurvatureProfile, TorsionSpec};

fn positive(m: MetricSample, s: f64, offset: [f64; 2]) -> Result<MetricSample> {
    if m.jacobian > 0.0 {
        Ok(m)
    } else {
        Err(Error::DegenerateMetric {
            s,
            offset,
            value: m.jacobian,
        })
    }
}

/// `c_γ(s, u) = (1 - uγ(s))^-2`, the s-flux coefficient of the strip operator.
pub fn coeff_c(p: &CurvatureProfile, s: f64, u: f64) -> Result<f64> {
    let m = positive(metric_2d(p, s, u), s, [u, 0.0])?;
    Ok(1.0 / (m.jacobian * m.jacobian))
}

/// Curvature-induced potential of the strip:
/// `-γ²/(4g) - uγ''/(2g^{3/2}) - 5u²γ'²/(4g²)` with `g^{1/2} = 1 - uγ`.
pub fn potential_v2(p: &CurvatureProfile, s: f64, u: f64) -> Result<f64> {
    let [g0, g1, g2] = p.second_order(s);
    let j = positive(metric_2d(p, s, u), s, [u, 0.0])?.jacobian;
    let j2 = j * j;
    Ok(-g0 * g0 / (4.0 * j2) - u * g2 / (2.0 * j2 * j) - 5.0 * u * u * g1 * g1 / (4.0 * j2 * j2))
}

/// `h^-2`, the s-flux coefficient of the tube operator.
pub fn coeff_h(k: &CurvatureProfile, torsion: &TorsionSpec, s: f64, u2: f64, u3: f64) -> Result<f64> {
    let m = positive(metric_3d(k, torsion, s, [u2, u3]), s, [u2, u3])?;
    Ok(1.0 / (m.jacobian * m.jacobian))
}

/// Curvature-induced potential of the tube:
/// `-k²/(4h²) + ∂s²h/(2h³) - 5(∂s h)²/(4h⁴)`.
pub fn potential_v3(k: &CurvatureProfile, torsion: &TorsionSpec, s: f64, u2: f64, u3: f64) -> Result<f64> {
    let k0 = k.second_order(s)[0];
    let m = positive(metric_3d(k, torsion, s, [u2, u3]), s, [u2, u3])?;
    let h = m.jacobian;
    let h2 = h * h;
    Ok(-k0 * k0 / (4.0 * h2) + m.ds2_h / (2.0 * h2 * h) - 5.0 * m.ds_h * m.ds_h / (4.0 * h2 * h2))
}
