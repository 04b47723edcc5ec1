//! Curvilinear maps of the guide: the planar reference curve and its normal,
//! the space curve with its rotated (torsion-adapted) frame, metric factors and
//! a sampled self-approach check.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{CurvatureProfile, TorsionSpec};

/// Self-approach distance reported when no part of the guide folds back on itself.
pub const SELF_APPROACH_CAP: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossSection {
    /// Interval `(-width/2, width/2)` of a planar strip.
    Strip { width: f64 },
    /// Rectangle `(-width2/2, width2/2) x (-width3/2, width3/2)` of a tube.
    Rectangle { width2: f64, width3: f64 },
}

impl CrossSection {
    pub fn dim(&self) -> usize {
        match self {
            CrossSection::Strip { .. } => 2,
            CrossSection::Rectangle { .. } => 3,
        }
    }

    /// `sup |u|` over the cross-section.
    pub fn radius(&self) -> f64 {
        match *self {
            CrossSection::Strip { width } => 0.5 * width,
            CrossSection::Rectangle { width2, width3 } => (0.5 * width2).hypot(0.5 * width3),
        }
    }

    /// Largest offset along any single normal direction that enters the metric.
    pub fn transverse_reach(&self) -> f64 {
        self.radius()
    }

    pub fn widths(&self) -> Vec<f64> {
        match *self {
            CrossSection::Strip { width } => vec![width],
            CrossSection::Rectangle { width2, width3 } => vec![width2, width3],
        }
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    /// Open-set membership of a transverse offset.
    pub fn contains(&self, u: [f64; 2]) -> bool {
        match *self {
            CrossSection::Strip { width } => u[0].abs() < 0.5 * width && u[1] == 0.0,
            CrossSection::Rectangle { width2, width3 } => {
                u[0].abs() < 0.5 * width2 && u[1].abs() < 0.5 * width3
            }
        }
    }
}

/// Cross-section, truncation half-length `L` and (3D) the torsion angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuideSpec {
    pub cross_section: CrossSection,
    pub half_length: f64,
    pub torsion: Option<TorsionSpec>,
}

impl GuideSpec {
    pub fn strip(width: f64, half_length: f64) -> Result<Self> {
        check_positive("width", width)?;
        check_positive("half_length", half_length)?;
        Ok(GuideSpec {
            cross_section: CrossSection::Strip { width },
            half_length,
            torsion: None,
        })
    }

    pub fn tube(width2: f64, width3: f64, half_length: f64, torsion: TorsionSpec) -> Result<Self> {
        check_positive("width2", width2)?;
        check_positive("width3", width3)?;
        check_positive("half_length", half_length)?;
        Ok(GuideSpec {
            cross_section: CrossSection::Rectangle { width2, width3 },
            half_length,
            torsion: Some(torsion),
        })
    }

    pub fn dim(&self) -> usize {
        self.cross_section.dim()
    }

    /// Torsion spec, defaulting to θ ≡ 0 for tubes without one.
    pub(crate) fn torsion_or_flat(&self) -> TorsionSpec {
        self.torsion.unwrap_or_else(|| TorsionSpec::constant(0.0))
    }

    /// Pads a transverse coordinate slice to two components, checking its length.
    pub(crate) fn offset(&self, u: &[f64]) -> Result<[f64; 2]> {
        match (self.dim(), u) {
            (2, [u]) => Ok([*u, 0.0]),
            (3, [u2, u3]) => Ok([*u2, *u3]),
            (dim, _) => Err(Error::DimensionMismatch(format!(
                "{dim}D guide expects {} transverse coordinates, got {}",
                dim - 1,
                u.len()
            ))),
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub s: f64,
    pub point: Vector3<f64>,
    /// Unit tangent `e1 = Γ'`.
    pub tangent: Vector3<f64>,
    /// Planar normal `N` (2D) or principal normal `e2` (3D).
    pub normal: Vector3<f64>,
    pub binormal: Option<Vector3<f64>>,
    /// Rotated transverse pair `(ẽ2, ẽ3)` of a tube.
    pub rotated: Option<[Vector3<f64>; 2]>,
    /// Tangent angle for planar curves; frame rotation angle for tubes.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    /// `1 - uγ(s)` in 2D, `h(s, u2, u3)` in 3D.
    pub jacobian: f64,
    pub ds_h: f64,
    pub ds2_h: f64,
}

/// Integration controls for the reference curve.
#[derive(Debug, Clone, Copy)]
pub struct CurveOptions {
    pub max_step: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { max_step: 2e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct CurveTrace {
    pub samples: Vec<FrameSample>,
    pub warnings: Vec<String>,
}

type State = [f64; 12];

/// Reference curve tabulated on a uniform arc-length grid through `s = 0`,
/// where `Γ(0) = 0` with the tangent along the first axis. Frames between
/// nodes come from one partial RK4 step off the nearest node.
#[derive(Debug, Clone)]
pub struct ReferenceCurve {
    curvature: CurvatureProfile,
    torsion: Option<TorsionSpec>,
    step: f64,
    n_negative: usize,
    nodes: Vec<State>,
}

impl ReferenceCurve {
    /// Planar curve with signed curvature `p`.
    pub fn planar(p: &CurvatureProfile, s_min: f64, s_max: f64, opts: CurveOptions) -> Self {
        Self::build(*p, None, s_min, s_max, opts)
    }

    /// Space curve with first curvature `k` and torsion `θ'`.
    pub fn spatial(
        k: &CurvatureProfile,
        torsion: &TorsionSpec,
        s_min: f64,
        s_max: f64,
        opts: CurveOptions,
    ) -> Self {
        Self::build(*k, Some(*torsion), s_min, s_max, opts)
    }

    pub fn for_guide(spec: &GuideSpec, p: &CurvatureProfile, s_min: f64, s_max: f64) -> Self {
        match spec.dim() {
            2 => Self::planar(p, s_min, s_max, CurveOptions::default()),
            _ => Self::spatial(p, &spec.torsion_or_flat(), s_min, s_max, CurveOptions::default()),
        }
    }

    fn build(
        curvature: CurvatureProfile,
        torsion: Option<TorsionSpec>,
        s_min: f64,
        s_max: f64,
        opts: CurveOptions,
    ) -> Self {
        let step = opts.max_step;
        let n_negative = (-s_min.min(0.0) / step).ceil() as usize;
        let n_positive = (s_max.max(0.0) / step).ceil() as usize;
        let mut curve = ReferenceCurve {
            curvature,
            torsion,
            step,
            n_negative,
            nodes: Vec::new(),
        };
        let origin = curve.initial_state();
        let mut forward = vec![origin];
        for i in 0..n_positive {
            let s = i as f64 * step;
            forward.push(curve.rk4(s, forward[i], step));
        }
        let mut backward = vec![origin];
        for i in 0..n_negative {
            let s = -(i as f64) * step;
            backward.push(curve.rk4(s, backward[i], -step));
        }
        backward.reverse();
        backward.pop();
        backward.extend(forward);
        curve.nodes = backward;
        curve
    }

    fn is_spatial(&self) -> bool {
        self.torsion.is_some()
    }

    fn initial_state(&self) -> State {
        let mut y = [0.0; 12];
        if self.is_spatial() {
            // Γ = 0, e1 = x, e2 = y, e3 = z
            y[3] = 1.0;
            y[7] = 1.0;
            y[11] = 1.0;
        }
        y
    }

    fn rhs(&self, s: f64, y: &State) -> State {
        let mut dy = [0.0; 12];
        let k = self.curvature.second_order(s)[0];
        match &self.torsion {
            None => {
                // y = [angle, x, y]
                dy[0] = k;
                dy[1] = y[0].cos();
                dy[2] = y[0].sin();
            }
            Some(t) => {
                let tau = t.tau(s);
                for c in 0..3 {
                    let (e1, e2, e3) = (y[3 + c], y[6 + c], y[9 + c]);
                    dy[c] = e1;
                    dy[3 + c] = k * e2;
                    dy[6 + c] = -k * e1 + tau * e3;
                    dy[9 + c] = -tau * e2;
                }
            }
        }
        dy
    }

    fn rk4(&self, s: f64, y: State, h: f64) -> State {
        let axpy = |a: &State, b: &State, f: f64| {
            let mut out = *a;
            for (o, v) in out.iter_mut().zip(b) {
                *o += f * v;
            }
            out
        };
        let k1 = self.rhs(s, &y);
        let k2 = self.rhs(s + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = self.rhs(s + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = self.rhs(s + h, &axpy(&y, &k3, h));
        let mut out = y;
        for i in 0..12 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if self.is_spatial() {
            reorthonormalize(&mut out);
        }
        out
    }

    fn state_at(&self, s: f64) -> State {
        let last = self.nodes.len() - 1;
        let idx = ((s / self.step).round() + self.n_negative as f64).clamp(0.0, last as f64) as usize;
        let s_node = (idx as f64 - self.n_negative as f64) * self.step;
        let y = self.nodes[idx];
        if s == s_node {
            return y;
        }
        // Off-table queries are integrated in node-sized sub-steps.
        let gap = s - s_node;
        let n_sub = (gap.abs() / self.step).ceil().max(1.0) as usize;
        let h = gap / n_sub as f64;
        let mut state = y;
        for j in 0..n_sub {
            state = self.rk4(s_node + j as f64 * h, state, h);
        }
        state
    }

    pub fn frame(&self, s: f64) -> FrameSample {
        let y = self.state_at(s);
        match &self.torsion {
            None => {
                let (sin, cos) = y[0].sin_cos();
                FrameSample {
                    s,
                    point: Vector3::new(y[1], y[2], 0.0),
                    tangent: Vector3::new(cos, sin, 0.0),
                    normal: Vector3::new(-sin, cos, 0.0),
                    binormal: None,
                    rotated: None,
                    theta: y[0],
                }
            }
            Some(t) => {
                let e1 = Vector3::new(y[3], y[4], y[5]);
                let e2 = Vector3::new(y[6], y[7], y[8]);
                let e3 = Vector3::new(y[9], y[10], y[11]);
                let theta = t.theta(s);
                let (sin, cos) = theta.sin_cos();
                // ẽ_i = Σ_j R_ij e_j with R = [[cos, -sin], [sin, cos]]
                let r2 = e2 * cos - e3 * sin;
                let r3 = e2 * sin + e3 * cos;
                FrameSample {
                    s,
                    point: Vector3::new(y[0], y[1], y[2]),
                    tangent: e1,
                    normal: e2,
                    binormal: Some(e3),
                    rotated: Some([r2, r3]),
                    theta,
                }
            }
        }
    }

    /// Physical point for curvilinear coordinates `(s, u)`.
    pub fn map(&self, s: f64, u: [f64; 2]) -> Vector3<f64> {
        let f = self.frame(s);
        match f.rotated {
            None => f.point + f.normal * u[0],
            Some([r2, r3]) => f.point + r2 * u[0] + r3 * u[1],
        }
    }
}

fn reorthonormalize(y: &mut State) {
    let mut e1 = Vector3::new(y[3], y[4], y[5]);
    let mut e2 = Vector3::new(y[6], y[7], y[8]);
    e1.normalize_mut();
    e2 -= e1 * e1.dot(&e2);
    e2.normalize_mut();
    let e3 = e1.cross(&e2);
    y[3..6].copy_from_slice(e1.as_slice());
    y[6..9].copy_from_slice(e2.as_slice());
    y[9..12].copy_from_slice(e3.as_slice());
}

fn resolution_warnings(p: &CurvatureProfile, step: f64) -> Vec<String> {
    let mut w = Vec::new();
    let sup = p.sup_abs();
    if step * sup > 0.05 {
        w.push(format!(
            "integration step {step} turns the tangent by up to {:.3} rad per step",
            step * sup
        ));
    }
    if step > p.length_scale() / 20.0 {
        w.push(format!(
            "integration step {step} under-resolves the profile length scale {}",
            p.length_scale()
        ));
    }
    w
}

fn trace(curve: &ReferenceCurve, p: &CurvatureProfile, s_samples: &[f64], step: f64) -> CurveTrace {
    CurveTrace {
        samples: s_samples.iter().map(|&s| curve.frame(s)).collect(),
        warnings: resolution_warnings(p, step),
    }
}

fn span(s_samples: &[f64]) -> (f64, f64) {
    s_samples
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)))
}

/// Integrates the planar reference curve with `Γ(0) = 0` and initial
/// tangent `(1, 0)`, sampling frames at `s_samples`.
pub fn reference_curve_2d(p: &CurvatureProfile, s_samples: &[f64], opts: CurveOptions) -> CurveTrace {
    let (lo, hi) = span(s_samples);
    let curve = ReferenceCurve::planar(p, lo, hi, opts);
    trace(&curve, p, s_samples, opts.max_step)
}

/// Space-curve counterpart of [`reference_curve_2d`] with the rotated frame.
pub fn reference_curve_3d(
    k: &CurvatureProfile,
    torsion: &TorsionSpec,
    s_samples: &[f64],
    opts: CurveOptions,
) -> CurveTrace {
    let (lo, hi) = span(s_samples);
    let curve = ReferenceCurve::spatial(k, torsion, lo, hi, opts);
    trace(&curve, k, s_samples, opts.max_step)
}

/// Physical point `Γ(s) + u N(s)` (2D) or `Γ(s) + u2 ẽ2(s) + u3 ẽ3(s)` (3D).
pub fn map_to_guide(spec: &GuideSpec, p: &CurvatureProfile, s: f64, u: &[f64]) -> Result<Vector3<f64>> {
    let offset = spec.offset(u)?;
    if !spec.cross_section.contains(offset) {
        return Err(Error::OutsideCrossSection { offset });
    }
    let curve = ReferenceCurve::for_guide(spec, p, s.min(0.0), s.max(0.0));
    Ok(curve.map(s, offset))
}

/// Jacobian of the straightening map together with its first two
/// arc-length derivatives.
pub fn metric_factor(spec: &GuideSpec, p: &CurvatureProfile, s: f64, u: &[f64]) -> Result<MetricSample> {
    let offset = spec.offset(u)?;
    let sample = match spec.dim() {
        2 => metric_2d(p, s, offset[0]),
        _ => metric_3d(p, &spec.torsion_or_flat(), s, offset),
    };
    if sample.jacobian <= 0.0 {
        return Err(Error::DegenerateMetric {
            s,
            offset,
            value: sample.jacobian,
        });
    }
    Ok(sample)
}

pub(crate) fn metric_2d(p: &CurvatureProfile, s: f64, u: f64) -> MetricSample {
    let [g, g1, g2] = p.second_order(s);
    MetricSample {
        jacobian: 1.0 - u * g,
        ds_h: -u * g1,
        ds2_h: -u * g2,
    }
}

/// `h = 1 - k (cos θ u2 + sin θ u3)` with chain-rule derivatives. Writing
/// `A = cos θ u2 + sin θ u3`, `B = -sin θ u2 + cos θ u3` gives `A' = θ' B`,
/// `B' = -θ' A`.
pub(crate) fn metric_3d(k: &CurvatureProfile, torsion: &TorsionSpec, s: f64, u: [f64; 2]) -> MetricSample {
    let [k0, k1, k2] = k.second_order(s);
    let [th, th1, th2] = torsion.second_order(s);
    let (sin, cos) = th.sin_cos();
    let a = cos * u[0] + sin * u[1];
    let b = -sin * u[0] + cos * u[1];
    MetricSample {
        jacobian: 1.0 - k0 * a,
        ds_h: -k1 * a - k0 * th1 * b,
        ds2_h: -k2 * a - 2.0 * k1 * th1 * b - k0 * th2 * b + k0 * th1 * th1 * a,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub injective: bool,
    /// Smallest distance between cross-sections of parts of the guide that
    /// fold back towards each other; [`SELF_APPROACH_CAP`] if none do.
    pub min_self_approach: f64,
    pub sections: usize,
    /// The check samples the guide; it does not certify injectivity.
    pub heuristic: bool,
}

/// Sampled self-approach scan over `s ∈ [-L, L]` with `sample_density`
/// cross-sections per unit length.
///
/// Two sections count as non-neighbouring when they are at least two widths
/// apart in arc length and their centers are closer than 0.9 times that arc
/// distance, i.e. the curve has bent back. The guide is flagged when such a
/// pair comes within a tenth of the width.
pub fn check_injectivity(spec: &GuideSpec, p: &CurvatureProfile, sample_density: f64) -> InjectivityReport {
    let l = spec.half_length;
    let width = spec.cross_section.max_width();
    let n = ((2.0 * l * sample_density).ceil() as usize).max(2);
    let curve = ReferenceCurve::for_guide(spec, p, -l, l);
    let offsets = section_offsets(&spec.cross_section);
    let sections: Vec<(f64, Vector3<f64>, Vec<Vector3<f64>>)> = (0..=n)
        .map(|i| {
            let s = -l + 2.0 * l * i as f64 / n as f64;
            let center = curve.map(s, [0.0, 0.0]);
            let pts = offsets.iter().map(|&u| curve.map(s, u)).collect();
            (s, center, pts)
        })
        .collect();
    let reach = spec.cross_section.radius();
    let mut best = SELF_APPROACH_CAP;
    for i in 0..sections.len() {
        for j in (i + 1)..sections.len() {
            let (si, ci, pi) = &sections[i];
            let (sj, cj, pj) = &sections[j];
            let arc = sj - si;
            if arc < 2.0 * width {
                continue;
            }
            let chord = (ci - cj).norm();
            if chord >= 0.9 * arc || chord - 2.0 * reach >= best {
                continue;
            }
            for a in pi {
                for b in pj {
                    best = best.min((a - b).norm());
                }
            }
        }
    }
    InjectivityReport {
        injective: best >= width / 10.0,
        min_self_approach: best,
        sections: sections.len(),
        heuristic: true,
    }
}

fn section_offsets(cs: &CrossSection) -> Vec<[f64; 2]> {
    match *cs {
        CrossSection::Strip { width } => (0..=4)
            .map(|i| [-0.5 * width + 0.25 * width * i as f64, 0.0])
            .collect(),
        CrossSection::Rectangle { width2, width3 } => {
            let mut v = Vec::new();
            for i in 0..=2 {
                for j in 0..=2 {
                    v.push([
                        -0.5 * width2 + 0.5 * width2 * i as f64,
                        -0.5 * width3 + 0.5 * width3 * j as f64,
                    ]);
                }
            }
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn gaussian() -> CurvatureProfile {
        CurvatureProfile::gaussian(0.3, 1.0).unwrap()
    }

    /// Fourth-order central differences of the curve position.
    fn fd_derivatives(curve: &ReferenceCurve, s: f64, h: f64) -> (Vector3<f64>, Vector3<f64>) {
        let p = |x: f64| curve.frame(x).point;
        let (m2, m1, z, p1, p2) = (p(s - 2.0 * h), p(s - h), p(s), p(s + h), p(s + 2.0 * h));
        let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
        let d2 = (-(m2 + p2) + (m1 + p1) * 16.0 - z * 30.0) / (12.0 * h * h);
        (d1, d2)
    }

    #[test]
    fn straight_profile_gives_a_line() {
        let trace = reference_curve_2d(&CurvatureProfile::zero(), &[-2.0, 0.0, 1.5], CurveOptions::default());
        for f in &trace.samples {
            assert!((f.point - Vector3::new(f.s, 0.0, 0.0)).norm() < 1e-12);
            assert_eq!(f.normal, Vector3::new(0.0, 1.0, 0.0));
        }
        assert!(trace.warnings.is_empty());
    }

    #[test]
    fn plateau_traces_a_circular_arc() {
        let c = 0.5;
        let p = CurvatureProfile::constant_bump(c, 3.0, 0.5).unwrap();
        let curve = ReferenceCurve::planar(&p, -3.0, 3.0, CurveOptions::default());
        // centre of curvature: Γ(0) + N(0)/c
        let center = curve.frame(0.0).point + curve.frame(0.0).normal / c;
        for s in [-2.9, -1.0, 0.5, 2.0, 3.0] {
            let r = (curve.frame(s).point - center).norm();
            assert!((r - 1.0 / c).abs() < 1e-10, "s={s} r={r}");
        }
    }

    #[test]
    fn recovered_curvature_matches_profile() {
        let p = gaussian();
        let curve = ReferenceCurve::planar(&p, -3.0, 3.0, CurveOptions::default());
        let (d1, d2) = fd_derivatives(&curve, 0.0, 1e-2);
        let kappa = -d2.x * d1.y + d2.y * d1.x;
        assert!((kappa - 0.3).abs() < 1e-8, "kappa={kappa}");
        for s in [-2.0, -0.7, 0.4, 1.3, 2.5] {
            let (d1, d2) = fd_derivatives(&curve, s, 1e-2);
            let kappa = -d2.x * d1.y + d2.y * d1.x;
            assert!((kappa - p.eval(s, 0).unwrap()).abs() < 1e-7, "s={s}");
            assert!((d1.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn frames_stay_orthonormal() {
        let k = gaussian();
        let t = TorsionSpec::ramp(0.0, FRAC_PI_2, 0.0, 4.0).unwrap();
        let samples: Vec<f64> = (0..=60).map(|i| -15.0 + 0.5 * i as f64).collect();
        let trace = reference_curve_3d(&k, &t, &samples, CurveOptions::default());
        for f in &trace.samples {
            let e = [f.tangent, f.normal, f.binormal.unwrap()];
            let r = f.rotated.unwrap();
            for i in 0..3 {
                assert!((e[i].norm() - 1.0).abs() < 1e-10);
                for j in (i + 1)..3 {
                    assert!(e[i].dot(&e[j]).abs() < 1e-10);
                }
            }
            assert!(r[0].dot(&r[1]).abs() < 1e-10 && r[0].dot(&f.tangent).abs() < 1e-10);
        }
        let planar = reference_curve_2d(&k, &samples, CurveOptions::default());
        for f in &planar.samples {
            assert!((f.tangent.norm() - 1.0).abs() < 1e-10);
            assert!(f.tangent.dot(&f.normal).abs() < 1e-12);
        }
    }

    #[test]
    fn map_examples() {
        let spec = GuideSpec::strip(1.0, 10.0).unwrap();
        let x = map_to_guide(&spec, &CurvatureProfile::zero(), 1.0, &[0.2]).unwrap();
        assert!((x - Vector3::new(1.0, 0.2, 0.0)).norm() < 1e-12);
        let curve = ReferenceCurve::planar(&gaussian(), -2.0, 2.0, CurveOptions::default());
        let on = map_to_guide(&spec, &gaussian(), 1.7, &[0.0]).unwrap();
        assert!((on - curve.frame(1.7).point).norm() < 1e-12);
        assert!(matches!(
            map_to_guide(&spec, &gaussian(), 0.0, &[0.6]),
            Err(Error::OutsideCrossSection { .. })
        ));
        assert!(map_to_guide(&spec, &gaussian(), 0.0, &[0.1, 0.1]).is_err());
    }

    #[test]
    fn quarter_turn_moves_offset_onto_binormal_axis() {
        let spec = GuideSpec::tube(1.0, 1.0, 5.0, TorsionSpec::constant(FRAC_PI_2)).unwrap();
        let k = CurvatureProfile::zero();
        let x = map_to_guide(&spec, &k, 0.0, &[0.3, 0.0]).unwrap();
        // ẽ2 = cos θ e2 - sin θ e3 = -e3 at θ = π/2, with e3 = (0, 0, 1) at s = 0
        assert!((x - Vector3::new(0.0, 0.0, -0.3)).norm() < 1e-12);
        let y = map_to_guide(&spec, &k, 0.0, &[0.0, 0.3]).unwrap();
        assert!((y - Vector3::new(0.0, 0.3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotated_frame_makes_coordinates_orthogonal() {
        // Jacobian columns of the tube map: ∂s f = h e1, ∂u2 f = ẽ2, ∂u3 f = ẽ3.
        let k = gaussian();
        let t = TorsionSpec::ramp(0.0, FRAC_PI_2, 0.3, 3.0).unwrap();
        let spec = GuideSpec::tube(1.0, 0.8, 6.0, t).unwrap();
        let curve = ReferenceCurve::for_guide(&spec, &k, -6.0, 6.0);
        let h = 1e-3;
        for &(s, u2, u3) in &[(0.2, 0.3, -0.2), (-1.1, -0.4, 0.35), (0.9, 0.1, 0.3)] {
            let ds = (curve.map(s + h, [u2, u3]) - curve.map(s - h, [u2, u3])) / (2.0 * h);
            let f = curve.frame(s);
            let [r2, r3] = f.rotated.unwrap();
            let m = metric_factor(&spec, &k, s, &[u2, u3]).unwrap();
            assert!((ds - f.tangent * m.jacobian).norm() < 1e-6, "s={s}");
            assert!(ds.dot(&r2).abs() < 1e-6 && ds.dot(&r3).abs() < 1e-6);
        }
    }

    #[test]
    fn metric_examples() {
        let strip = GuideSpec::strip(1.0, 10.0).unwrap();
        let bump = CurvatureProfile::constant_bump(0.5, 2.0, 1.0).unwrap();
        let m = metric_factor(&strip, &bump, 0.0, &[0.2]).unwrap();
        assert!((m.jacobian - 0.9).abs() < 1e-15);

        let tube = GuideSpec::tube(1.0, 1.0, 10.0, TorsionSpec::constant(FRAC_PI_2)).unwrap();
        let m = metric_factor(&tube, &bump, 0.0, &[0.3, 0.1]).unwrap();
        assert!((m.jacobian - 0.95).abs() < 1e-15);

        let t = TorsionSpec::ramp(0.0, 1.2, 0.0, 2.0).unwrap();
        let tube = GuideSpec::tube(1.0, 1.0, 10.0, t).unwrap();
        let m = metric_factor(&tube, &gaussian(), 0.4, &[0.0, 0.0]).unwrap();
        assert_eq!((m.jacobian, m.ds_h, m.ds2_h), (1.0, 0.0, 0.0));

        let strong = CurvatureProfile::gaussian(3.0, 1.0).unwrap();
        assert!(matches!(
            metric_factor(&strip, &strong, 0.0, &[0.45]),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn metric_derivatives_match_finite_differences() {
        let k = CurvatureProfile::sech2(0.4, 1.2).unwrap();
        let t = TorsionSpec::ramp(0.1, 1.4, -0.5, 3.0).unwrap();
        let tube = GuideSpec::tube(1.0, 0.6, 10.0, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let step = 1e-4;
        for _ in 0..100 {
            let s = rng.gen_range(-3.0..3.0);
            let u = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3)];
            let at = |x: f64| metric_factor(&tube, &k, x, &u).unwrap();
            let m = at(s);
            let d1 = (at(s + step).jacobian - at(s - step).jacobian) / (2.0 * step);
            let d2 = (at(s + step).jacobian - 2.0 * m.jacobian + at(s - step).jacobian) / (step * step);
            assert!((d1 - m.ds_h).abs() < 1e-7);
            assert!((d2 - m.ds2_h).abs() < 1e-5);
            assert!((d1 - (at(s + step).ds_h + at(s - step).ds_h) / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn metric_stays_in_band() {
        let k = CurvatureProfile::gaussian(0.9, 1.0).unwrap();
        let t = TorsionSpec::ramp(0.0, FRAC_PI_2, 0.0, 2.0).unwrap();
        let tube = GuideSpec::tube(1.0, 1.0, 10.0, t).unwrap();
        let bound = tube.cross_section.radius() * k.sup_abs();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let s = rng.gen_range(-4.0..4.0);
            let u = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let h = metric_factor(&tube, &k, s, &u).unwrap().jacobian;
            assert!(h > 1.0 - bound && h < 1.0 + bound);
        }
    }

    #[test]
    fn injectivity_scan() {
        let straight = GuideSpec::strip(1.0, 15.0).unwrap();
        let r = check_injectivity(&straight, &CurvatureProfile::zero(), 4.0);
        assert!(r.injective && r.heuristic);
        assert_eq!(r.min_self_approach, SELF_APPROACH_CAP);

        let r = check_injectivity(&straight, &gaussian(), 4.0);
        assert!(r.injective);

        // plateau of length 8 > 2π closes a full unit circle
        let narrow = GuideSpec::strip(0.2, 6.0).unwrap();
        let loop_profile = CurvatureProfile::constant_bump(1.0, 4.0, 0.5).unwrap();
        let r = check_injectivity(&narrow, &loop_profile, 10.0);
        assert!(!r.injective, "{r:?}");
        assert!(r.min_self_approach < 0.02);

        let wide_turn = CurvatureProfile::constant_bump(1.0, 0.5 * PI / 2.0, 0.5).unwrap();
        assert!(check_injectivity(&narrow, &wide_turn, 10.0).injective);
    }

    #[test]
    fn coarse_step_warns() {
        let t = reference_curve_2d(&gaussian(), &[1.0], CurveOptions { max_step: 0.5 });
        assert!(!t.warnings.is_empty());
    }
}
