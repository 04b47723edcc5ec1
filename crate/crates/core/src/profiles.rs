//! Closed-form curvature and torsion-angle families.
//!
//! Every family is evaluated through truncated Taylor arithmetic, so the
//! derivatives up to order five are exact (to rounding) rather than finite
//! differences.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GuideSpec;
use crate::jet::{smooth_step, Jet, ORDER};

/// Highest derivative order any family supports.
pub const MAX_ORDER: usize = ORDER;

/// Shape of a curvature profile. `a` has units of 1/length, `sigma` of length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileShape {
    Zero,
    /// Plateau of height `a` on `|s| <= plateau`, blended smoothly to zero
    /// over a transition of width `sigma`; exactly zero for `|s| >= plateau + sigma`.
    ConstantBump { a: f64, plateau: f64, sigma: f64 },
    /// `a * exp(-s^2 / sigma^2)`
    Gaussian { a: f64, sigma: f64 },
    /// `a * sech^2(s / sigma)`
    Sech2 { a: f64, sigma: f64 },
}

/// Signed curvature (2D) or first curvature (3D) as an analytic function of arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub shape: ProfileShape,
    pub smoothness_class: usize,
}

impl CurvatureProfile {
    pub fn new(shape: ProfileShape, smoothness_class: usize) -> Result<Self> {
        if smoothness_class < 2 {
            return Err(Error::param(
                "smoothness_class",
                format!("must be at least 2, got {smoothness_class}"),
            ));
        }
        if smoothness_class > MAX_ORDER {
            return Err(Error::OrderUnsupported(smoothness_class));
        }
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        match shape {
            ProfileShape::Zero => {}
            ProfileShape::ConstantBump { a, plateau, sigma } => {
                finite("a", a)?;
                positive("sigma", sigma)?;
                if !(plateau.is_finite() && plateau >= 0.0) {
                    return Err(Error::param("plateau", "must be non-negative"));
                }
            }
            ProfileShape::Gaussian { a, sigma } | ProfileShape::Sech2 { a, sigma } => {
                finite("a", a)?;
                positive("sigma", sigma)?;
            }
        }
        Ok(CurvatureProfile {
            shape,
            smoothness_class,
        })
    }

    pub fn zero() -> Self {
        CurvatureProfile {
            shape: ProfileShape::Zero,
            smoothness_class: MAX_ORDER,
        }
    }

    pub fn gaussian(a: f64, sigma: f64) -> Result<Self> {
        Self::new(ProfileShape::Gaussian { a, sigma }, MAX_ORDER)
    }

    pub fn sech2(a: f64, sigma: f64) -> Result<Self> {
        Self::new(ProfileShape::Sech2 { a, sigma }, MAX_ORDER)
    }

    pub fn constant_bump(a: f64, plateau: f64, sigma: f64) -> Result<Self> {
        Self::new(ProfileShape::ConstantBump { a, plateau, sigma }, MAX_ORDER)
    }

    /// Value (order 0) or derivative of the profile at `s`.
    pub fn eval(&self, s: f64, order: usize) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::OrderUnsupported(order));
        }
        if order > self.smoothness_class {
            return Err(Error::SmoothnessExceeded {
                order,
                class: self.smoothness_class,
            });
        }
        Ok(self.jet(s).derivatives()[order])
    }

    /// `[γ, γ', γ'']` at `s`. Always permitted since the class is at least 2.
    pub fn second_order(&self, s: f64) -> [f64; 3] {
        let d = self.jet(s).derivatives();
        [d[0], d[1], d[2]]
    }

    pub(crate) fn jet(&self, s: f64) -> Jet {
        match self.shape {
            ProfileShape::Zero => Jet::zero(),
            ProfileShape::Gaussian { a, sigma } => {
                let x = Jet::affine(s, 0.0, 1.0 / sigma);
                (-(x * x)).exp().scale(a)
            }
            ProfileShape::Sech2 { a, sigma } => {
                // sech^2 x = 4q / (1 + q)^2 with q = exp(-2|x|), written per side
                // so the exponential never overflows.
                let sign = if s >= 0.0 { -2.0 } else { 2.0 };
                let q = Jet::affine(s, 0.0, sign / sigma).exp();
                let denom = Jet::constant(1.0) + q;
                (q * (denom * denom).recip()).scale(4.0 * a)
            }
            ProfileShape::ConstantBump { a, plateau, sigma } => {
                let rise = smooth_step(Jet::affine(s, -(plateau + sigma), 1.0 / sigma));
                let fall = smooth_step(Jet::affine(s, plateau + sigma, -1.0 / sigma));
                (rise * fall).scale(a)
            }
        }
    }

    /// `sup |γ|` over the real line.
    pub fn sup_abs(&self) -> f64 {
        match self.shape {
            ProfileShape::Zero => 0.0,
            ProfileShape::ConstantBump { a, .. }
            | ProfileShape::Gaussian { a, .. }
            | ProfileShape::Sech2 { a, .. } => a.abs(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self.shape {
            ProfileShape::Zero => 0.0,
            ProfileShape::ConstantBump { a, .. }
            | ProfileShape::Gaussian { a, .. }
            | ProfileShape::Sech2 { a, .. } => a,
        }
    }

    /// Length over which the profile varies; `INFINITY` for the zero profile.
    pub fn length_scale(&self) -> f64 {
        match self.shape {
            ProfileShape::Zero => f64::INFINITY,
            ProfileShape::ConstantBump { sigma, .. }
            | ProfileShape::Gaussian { sigma, .. }
            | ProfileShape::Sech2 { sigma, .. } => sigma,
        }
    }

    /// Half-length of the region outside of which the profile is negligible.
    pub fn support_radius(&self) -> f64 {
        match self.shape {
            ProfileShape::Zero => 0.0,
            ProfileShape::ConstantBump { plateau, sigma, .. } => plateau + sigma,
            ProfileShape::Gaussian { sigma, .. } | ProfileShape::Sech2 { sigma, .. } => sigma,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_abs() == 0.0
    }

    /// Short identifier recorded as coefficient provenance.
    pub fn id(&self) -> String {
        match self.shape {
            ProfileShape::Zero => "zero".into(),
            ProfileShape::ConstantBump { a, plateau, sigma } => {
                format!("constant_bump(a={a},plateau={plateau},sigma={sigma})")
            }
            ProfileShape::Gaussian { a, sigma } => format!("gaussian(a={a},sigma={sigma})"),
            ProfileShape::Sech2 { a, sigma } => format!("sech2(a={a},sigma={sigma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TorsionShape {
    Constant { theta: f64 },
    /// Smooth monotone ramp from `theta_start` to `theta_end`, centred at
    /// `center` and completed over `width`.
    RampSmoothed {
        theta_start: f64,
        theta_end: f64,
        center: f64,
        width: f64,
    },
}

/// Rotation angle θ of the torsion-adapted frame; the torsion is τ = θ'.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionSpec {
    pub shape: TorsionShape,
    pub bounded_angle: bool,
}

impl TorsionSpec {
    pub fn new(shape: TorsionShape, bounded_angle: bool) -> Result<Self> {
        let (lo, hi) = match shape {
            TorsionShape::Constant { theta } => {
                if !theta.is_finite() {
                    return Err(Error::param("theta", "must be finite"));
                }
                (theta, theta)
            }
            TorsionShape::RampSmoothed {
                theta_start,
                theta_end,
                center,
                width,
            } => {
                if !(theta_start.is_finite() && theta_end.is_finite() && center.is_finite()) {
                    return Err(Error::param("theta", "ramp parameters must be finite"));
                }
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::param("width", format!("must be positive, got {width}")));
                }
                (theta_start.min(theta_end), theta_start.max(theta_end))
            }
        };
        // The ramp is monotone between its end values, so checking those suffices.
        if bounded_angle && (lo < 0.0 || hi > FRAC_PI_2) {
            return Err(Error::param(
                "theta",
                format!("range [{lo}, {hi}] leaves [0, pi/2] with the bounded-angle mode on"),
            ));
        }
        Ok(TorsionSpec {
            shape,
            bounded_angle,
        })
    }

    pub fn constant(theta: f64) -> Self {
        TorsionSpec {
            shape: TorsionShape::Constant { theta },
            bounded_angle: false,
        }
    }

    pub fn ramp(theta_start: f64, theta_end: f64, center: f64, width: f64) -> Result<Self> {
        Self::new(
            TorsionShape::RampSmoothed {
                theta_start,
                theta_end,
                center,
                width,
            },
            false,
        )
    }

    pub(crate) fn jet(&self, s: f64) -> Jet {
        match self.shape {
            TorsionShape::Constant { theta } => Jet::constant(theta),
            TorsionShape::RampSmoothed {
                theta_start,
                theta_end,
                center,
                width,
            } => {
                let x = Jet::affine(s, center - 0.5 * width, 1.0 / width);
                Jet::constant(theta_start) + smooth_step(x).scale(theta_end - theta_start)
            }
        }
    }

    /// `[θ, θ', θ'']` at `s`.
    pub fn second_order(&self, s: f64) -> [f64; 3] {
        let d = self.jet(s).derivatives();
        [d[0], d[1], d[2]]
    }

    pub fn theta(&self, s: f64) -> f64 {
        self.jet(s).value()
    }

    /// Torsion τ(s) = θ'(s).
    pub fn tau(&self, s: f64) -> f64 {
        self.jet(s).derivatives()[1]
    }

    pub fn eval(&self, s: f64, order: usize) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::OrderUnsupported(order));
        }
        Ok(self.jet(s).derivatives()[order])
    }

    pub fn theta_range(&self) -> (f64, f64) {
        match self.shape {
            TorsionShape::Constant { theta } => (theta, theta),
            TorsionShape::RampSmoothed {
                theta_start,
                theta_end,
                ..
            } => (theta_start.min(theta_end), theta_start.max(theta_end)),
        }
    }
}

/// Outcome of checking a profile against the standing geometric hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub sup_gamma: f64,
    pub non_trivially_curved: bool,
    /// `d/2 < 1/sup|γ|` (2D) or `a_ω sup|k| < 1` (3D).
    pub half_width_bound_ok: bool,
    pub decay_ok: bool,
    /// `a_ω · sup|k| < 1` with `a_ω` the cross-section radius; equals the
    /// half-width check in 2D.
    pub tube_bound_ok: bool,
    /// 3D only: the first curvature must be non-negative.
    pub sign_ok: bool,
    /// Smoothness class high enough for the Poisson reconstruction pipelines.
    pub poisson_smoothness_ok: bool,
    pub torsion_range_ok: bool,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    /// All hard requirements hold. The smoothness flag for the Poisson
    /// pipelines is informational only.
    pub fn passed(&self) -> bool {
        self.non_trivially_curved
            && self.half_width_bound_ok
            && self.decay_ok
            && self.tube_bound_ok
            && self.sign_ok
            && self.torsion_range_ok
    }

    /// Metric positivity holds, which is all the discretization needs. A
    /// straight guide passes this even though it is not "curved".
    pub fn metric_ok(&self) -> bool {
        self.half_width_bound_ok && self.tube_bound_ok
    }
}

pub fn validate_assumptions(p: &CurvatureProfile, g: &GuideSpec) -> AssumptionReport {
    let sup = p.sup_abs();
    let radius = g.cross_section.radius();
    let mut notes = Vec::new();

    let non_trivially_curved = !p.is_zero();
    if !non_trivially_curved {
        notes.push("curvature vanishes identically: the guide is straight".to_string());
    }

    let half = g.cross_section.transverse_reach();
    let half_width_bound_ok = half * sup < 1.0;
    if !half_width_bound_ok {
        notes.push(format!(
            "half-width bound violated: half-width {half} >= 1/sup|curvature| = {}",
            1.0 / sup
        ));
    }
    let tube_bound_ok = radius * sup < 1.0;
    if !tube_bound_ok && g.dim() == 3 {
        notes.push(format!(
            "tube bound violated: cross-section radius {radius} times sup|k| = {} is not below 1",
            radius * sup
        ));
    }

    // Every family decays (or has compact support) by construction; the
    // truncation check is a numerical sanity note.
    let decay_ok = true;
    let tail = p
        .eval(-g.half_length, 0)
        .unwrap_or(0.0)
        .abs()
        .max(p.eval(g.half_length, 0).unwrap_or(0.0).abs());
    if sup > 0.0 && tail > 1e-6 * sup {
        notes.push(format!(
            "curvature at the truncation boundary is {tail:.3e}; consider a longer domain"
        ));
    }

    let sign_ok = g.dim() == 2 || p.amplitude() >= 0.0;
    if !sign_ok {
        notes.push("first curvature of a space curve must be non-negative".to_string());
    }

    let poisson_smoothness_ok = p.smoothness_class >= 5;
    if !poisson_smoothness_ok {
        notes.push(format!(
            "smoothness class {} < 5: Poisson reconstruction is evaluated but not covered by the classical-solution argument",
            p.smoothness_class
        ));
    }

    let torsion_range_ok = match (&g.torsion, g.dim()) {
        (Some(t), 3) if t.bounded_angle => {
            let (lo, hi) = t.theta_range();
            lo >= 0.0 && hi <= FRAC_PI_2
        }
        _ => true,
    };
    if !torsion_range_ok {
        notes.push("torsion angle leaves [0, pi/2]".to_string());
    }

    AssumptionReport {
        sup_gamma: sup,
        non_trivially_curved,
        half_width_bound_ok,
        decay_ok,
        tube_bound_ok,
        sign_ok,
        poisson_smoothness_ok,
        torsion_range_ok,
        notes,
    }
}
