//! Curvature recovery from centerline data.
//!
//! On the centerline the straightened operator reduces to `-Δ - γ²/4`, so
//! an eigenpair gives `γ² = -4Δφ/φ - 4λ` and a Poisson pair gives
//! `γ² = -4Δφ/φ - 4f/φ` wherever `φ ≠ 0`. In three dimensions the same
//! formulas return `k²`.
//!
//! The discrete operator inherits this: its centerline rows have unit
//! s-flux weights and potential `-γ²/4`, so reconstruction from any field
//! and its discrete image is exact up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GuideSpec;
use crate::operator::{assemble, Field};
use crate::profiles::CurvatureProfile;
use crate::solve::{linalg::norm, Eigenpair};

pub const DEFAULT_MASK_EPS: f64 = 1e-3;
/// Reconstructed squares below `-TOL_NEG` are flagged rather than clamped silently.
pub const TOL_NEG: f64 = 1e-8;
/// Denominator floor for the discrimination ratio.
pub const RATIO_FLOOR: f64 = 1e-30;

/// Discrete Laplacian at the centerline nodes, one value per s-node.
///
/// Interior s-nodes use centered differences in every direction with
/// Dirichlet zeros beyond the grid. The two end nodes use a one-sided
/// second difference in s; they are excluded from every reconstruction mask.
pub fn centerline_laplacian(phi: &Field) -> Result<Vec<f64>> {
    let g = phi.grid;
    if g.n_s < 4 {
        return Err(Error::GridMismatch(format!(
            "centerline Laplacian needs at least 4 s-nodes, grid has {}",
            g.n_s
        )));
    }
    let v = &phi.values;
    let inv_ds2 = 1.0 / (g.ds() * g.ds());
    let du = g.du();
    let c = |i: usize| v[g.center_index(i)];
    let mut out = Vec::with_capacity(g.n_s);
    for i in 0..g.n_s {
        let k = g.center_index(i);
        let d_ss = if i == 0 {
            2.0 * c(0) - 5.0 * c(1) + 4.0 * c(2) - c(3)
        } else if i + 1 == g.n_s {
            2.0 * c(i) - 5.0 * c(i - 1) + 4.0 * c(i - 2) - c(i - 3)
        } else {
            c(i - 1) - 2.0 * c(i) + c(i + 1)
        } * inv_ds2;
        let mut lap = d_ss;
        for a in 0..g.transverse_axes() {
            let st = g.stride(a);
            // the centerline is the middle node, so both neighbors exist when n_u ≥ 3
            let (lo, hi) = if g.n_u >= 3 { (v[k - st], v[k + st]) } else { (0.0, 0.0) };
            lap += (lo - 2.0 * v[k] + hi) / (du[a] * du[a]);
        }
        out.push(lap);
    }
    Ok(out)
}

/// `|φ(s, 0)| ≥ mask_eps · max |φ(s, 0)|`, excluding both s-range ends.
pub fn centerline_mask(center: &[f64], mask_eps: f64) -> Vec<bool> {
    let peak = center.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let n = center.len();
    center
        .iter()
        .enumerate()
        .map(|(i, v)| i > 0 && i + 1 < n && peak > 0.0 && v.abs() >= mask_eps * peak)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Nonnegative,
    Nonpositive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mask_eps: f64,
    pub masked_nodes: usize,
    /// Errors against the truth, divided by the largest true `γ²` on the mask.
    pub max_rel_error: Option<f64>,
    pub median_rel_error: Option<f64>,
    pub max_abs_error: Option<f64>,
    /// s-node indices whose reconstruction fell below `-TOL_NEG`.
    pub negative_nodes: Vec<usize>,
    pub branch: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub s_nodes: Vec<f64>,
    /// `Some` exactly where `mask` is set.
    pub gamma_sq: Vec<Option<f64>>,
    pub mask: Vec<bool>,
    pub gamma_signed: Option<Vec<Option<f64>>>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    /// Fills the error diagnostics against the true curvature `γ(s)`.
    pub fn with_truth(mut self, gamma: impl Fn(f64) -> f64) -> Self {
        let truth: Vec<f64> = self.s_nodes.iter().map(|&s| gamma(s).powi(2)).collect();
        let mut abs = Vec::new();
        let mut sup: f64 = 0.0;
        for (g, t) in self.gamma_sq.iter().zip(&truth) {
            if let Some(g) = g {
                abs.push((g - t).abs());
                sup = sup.max(t.abs());
            }
        }
        if abs.is_empty() {
            return self;
        }
        let max_abs = abs.iter().cloned().fold(0.0, f64::max);
        self.diagnostics.max_abs_error = Some(max_abs);
        if sup > 0.0 {
            abs.sort_by(f64::total_cmp);
            let mid = abs.len() / 2;
            let median = if abs.len() % 2 == 1 {
                abs[mid]
            } else {
                0.5 * (abs[mid - 1] + abs[mid])
            };
            self.diagnostics.max_rel_error = Some(max_abs / sup);
            self.diagnostics.median_rel_error = Some(median / sup);
        }
        self
    }

    pub fn masked(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s_nodes
            .iter()
            .zip(&self.gamma_sq)
            .filter_map(|(&s, g)| g.map(|g| (s, g)))
    }
}

fn reconstruct(phi: &Field, rhs: impl Fn(usize, f64) -> f64, mask_eps: f64) -> Result<ReconstructionResult> {
    if !(0.0..1.0).contains(&mask_eps) {
        return Err(Error::param("mask_eps", format!("must lie in [0, 1), got {mask_eps}")));
    }
    let lap = centerline_laplacian(phi)?;
    let center = phi.centerline();
    let mask = centerline_mask(&center, mask_eps);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let gamma_sq: Vec<Option<f64>> = (0..center.len())
        .map(|i| mask[i].then(|| -4.0 * lap[i] / center[i] - 4.0 * rhs(i, center[i]) / center[i]))
        .collect();
    let negative_nodes = gamma_sq
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_some_and(|g| g < -TOL_NEG))
        .map(|(i, _)| i)
        .collect();
    Ok(ReconstructionResult {
        s_nodes: phi.grid.s_nodes(),
        gamma_sq,
        mask: mask.clone(),
        gamma_signed: None,
        diagnostics: Diagnostics {
            mask_eps,
            masked_nodes: mask.iter().filter(|&&m| m).count(),
            negative_nodes,
            ..Default::default()
        },
    })
}

/// `γ²(s) = -4Δφ(s,0)/φ(s,0) - 4λ` on the masked centerline nodes.
pub fn reconstruct_from_eigenpair(e: &Eigenpair, mask_eps: f64) -> Result<ReconstructionResult> {
    reconstruct(&e.phi, |_, c| e.lambda * c, mask_eps)
}

/// `γ²(s) = -4Δφ(s,0)/φ(s,0) - 4f(s,0)/φ(s,0)` on the masked centerline nodes.
pub fn reconstruct_from_poisson(phi: &Field, f: &Field, mask_eps: f64) -> Result<ReconstructionResult> {
    phi.grid.check_same(&f.grid)?;
    let fc = f.centerline();
    reconstruct(phi, |i, _| fc[i], mask_eps)
}

/// Takes the square root on the declared branch. Negatives within
/// `TOL_NEG` clamp to zero; larger ones clamp too but stay flagged.
pub fn select_branch(mut r: ReconstructionResult, sign: Sign) -> ReconstructionResult {
    let s = match sign {
        Sign::Nonnegative => 1.0,
        Sign::Nonpositive => -1.0,
    };
    r.gamma_signed = Some(r.gamma_sq.iter().map(|g| g.map(|g| s * g.max(0.0).sqrt())).collect());
    r.diagnostics.negative_nodes = r
        .gamma_sq
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_some_and(|g| g < -TOL_NEG))
        .map(|(i, _)| i)
        .collect();
    r.diagnostics.branch = Some(sign);
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    /// `‖H₁φ - f‖ / ‖f‖`
    pub residual_matched: f64,
    /// `‖H₂φ - f‖ / ‖f‖`
    pub residual_alternative: f64,
    pub ratio: f64,
    /// `|f| ≤ M|φ|` at every node where `φ ≠ 0`.
    pub m_bound_ok: bool,
}

/// Tests whether `φ` and `f` are a solution pair of the operator for `p1`
/// but not of the operator for `p2`. Both operators are assembled on the
/// field's grid; in three dimensions they share the torsion of `spec`.
pub fn discrimination_residual(
    spec: &GuideSpec,
    p1: &CurvatureProfile,
    p2: &CurvatureProfile,
    phi: &Field,
    f: &Field,
    m: f64,
) -> Result<DiscriminationReport> {
    phi.grid.check_same(&f.grid)?;
    let fn_ = norm(&f.values);
    let residual = |p: &CurvatureProfile| -> Result<f64> {
        let a = assemble(&phi.grid, spec, p)?;
        let mut r = vec![0.0; a.n()];
        a.apply_into(&phi.values, &mut r);
        for (ri, fi) in r.iter_mut().zip(&f.values) {
            *ri -= fi;
        }
        let rn = norm(&r);
        Ok(if fn_ > 0.0 { rn / fn_ } else { rn })
    };
    let residual_matched = residual(p1)?;
    let residual_alternative = residual(p2)?;
    let m_bound_ok = phi
        .values
        .iter()
        .zip(&f.values)
        .filter(|(p, _)| **p != 0.0)
        .all(|(p, q)| q.abs() <= m * p.abs() * (1.0 + 1e-12));
    Ok(DiscriminationReport {
        residual_matched,
        residual_alternative,
        ratio: residual_alternative / residual_matched.max(RATIO_FLOOR),
        m_bound_ok,
    })
}
