use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::coefficients::{coeff_c, coeff_h, potential_v2, potential_v3};
use super::grid::{Field, Grid};
use crate::error::{Error, Result};
use crate::geometry::{metric_factor, GuideSpec};
use crate::profiles::{validate_assumptions, CurvatureProfile};

/// Rows above this count are multiplied in parallel. Each row is summed in
/// a fixed order, so results do not depend on the thread count.
const PARALLEL_ROWS: usize = 16_384;

/// Sparse symmetric discretization of the straightened operator, stored as
/// full CSR with columns ascending in each row.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    provenance: String,
    lower_bound: Option<f64>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Identifiers of the profiles the coefficients were computed from.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// A guaranteed lower bound on the smallest eigenvalue, if known.
    pub fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }

    /// Largest `|row - col|` among stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n())
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|r| self.get(r, r)).collect()
    }

    /// Every stored entry has a bit-identical mirror.
    pub fn is_symmetric_exact(&self) -> bool {
        (0..self.n()).all(|r| {
            self.row(r)
                .all(|(c, v)| self.get(c, r).to_bits() == v.to_bits())
        })
    }

    /// `y = A x` on raw slices.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(y.len(), self.n());
        let row = |(r, out): (usize, &mut f64)| {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        };
        if self.n() >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Coordinate-triplet dump, one `row col value` line per stored entry.
    pub fn write_triplets(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# n = {} nnz = {} provenance = {}", self.n(), self.nnz(), self.provenance)?;
        for r in 0..self.n() {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }

    /// Builds an operator from an explicit symmetric pattern. Intended for
    /// tests and external matrices; `entries` must list both triangles.
    pub fn from_triplets(grid: Grid, mut entries: Vec<(usize, usize, f64)>, provenance: &str) -> Result<Self> {
        let n = grid.len();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch(format!("entry ({r}, {c}) outside {n} x {n}")));
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(DiscreteOperator {
            grid,
            row_ptr,
            cols,
            vals,
            provenance: provenance.to_string(),
            lower_bound: None,
        })
    }
}

/// `y = A x` for a field on the operator's grid.
pub fn apply(a: &DiscreteOperator, x: &Field) -> Result<Field> {
    a.grid.check_same(&x.grid)?;
    let mut y = vec![0.0; a.n()];
    a.apply_into(&x.values, &mut y);
    Ok(Field {
        grid: a.grid,
        values: y,
    })
}

enum Coefficients<'a> {
    Strip(&'a CurvatureProfile),
    Tube(&'a CurvatureProfile, crate::profiles::TorsionSpec),
}

impl Coefficients<'_> {
    fn flux(&self, s: f64, u: [f64; 2]) -> Result<f64> {
        match self {
            Coefficients::Strip(p) => coeff_c(p, s, u[0]),
            Coefficients::Tube(k, t) => coeff_h(k, t, s, u[0], u[1]),
        }
    }

    fn potential(&self, s: f64, u: [f64; 2]) -> Result<f64> {
        match self {
            Coefficients::Strip(p) => potential_v2(p, s, u[0]),
            Coefficients::Tube(k, t) => potential_v3(k, t, s, u[0], u[1]),
        }
    }
}

/// Lowest eigenvalue of the discrete Dirichlet second difference on `n`
/// interior nodes of an interval of width `w`.
pub fn discrete_dirichlet_eigenvalue(w: f64, n: usize) -> f64 {
    let h = w / (n + 1) as f64;
    let x = (PI * h / (2.0 * w)).sin();
    4.0 * x * x / (h * h)
}

/// Assembles the flux-form stencil of `-∂s(c ∂s) - Δ_u + V` on `grid`.
///
/// The s-flux coefficient is sampled at half-points `s ± Δs/2` on the same
/// transverse line, so each off-diagonal pair is one computed number stored
/// twice. On the centerline `c = 1` exactly.
pub fn assemble(grid: &Grid, spec: &GuideSpec, p: &CurvatureProfile) -> Result<DiscreteOperator> {
    if grid.cross_section != spec.cross_section || grid.half_length != spec.half_length {
        return Err(Error::GridMismatch("grid was not built for this guide".into()));
    }
    let report = validate_assumptions(p, spec);
    if !report.metric_ok() {
        return Err(Error::AssumptionViolated(report.notes.join("; ")));
    }
    let coeffs = match spec.dim() {
        2 => Coefficients::Strip(p),
        _ => Coefficients::Tube(p, spec.torsion_or_flat()),
    };

    let nt = grid.transverse_len();
    let ds = grid.ds();
    let inv_ds2 = 1.0 / (ds * ds);
    let du = grid.du();
    let axes = grid.transverse_axes();
    let inv_du2 = [1.0 / (du[0] * du[0]), if axes == 2 { 1.0 / (du[1] * du[1]) } else { 0.0 }];

    // edge e sits between s-nodes e-1 and e, at s = -L + (e + 1/2) Δs
    let mut edges = vec![0.0; (grid.n_s + 1) * nt];
    for e in 0..=grid.n_s {
        let s = -grid.half_length + (e as f64 + 0.5) * ds;
        for t in 0..nt {
            edges[e * nt + t] = coeffs.flux(s, grid.offset(t))? * inv_ds2;
        }
    }

    let n = grid.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * (3 + 2 * axes));
    let mut vals = Vec::with_capacity(n * (3 + 2 * axes));
    row_ptr.push(0);
    let mut v_min = f64::INFINITY;
    for i in 0..grid.n_s {
        let s = grid.s(i);
        for t in 0..nt {
            let r = grid.index(i, t);
            let idx = grid.transverse_indices(t);
            let left = edges[i * nt + t];
            let right = edges[(i + 1) * nt + t];
            let v = coeffs.potential(s, grid.offset(t))?;
            v_min = v_min.min(v);
            let mut diag = left + right + v;
            for a in 0..axes {
                diag += 2.0 * inv_du2[a];
            }

            let mut push = |c: usize, val: f64| {
                cols.push(c);
                vals.push(val);
            };
            if i > 0 {
                push(r - nt, -left);
            }
            for a in 0..axes {
                if idx[a] > 0 {
                    push(r - grid.stride(a), -inv_du2[a]);
                }
            }
            push(r, diag);
            for a in (0..axes).rev() {
                if idx[a] + 1 < grid.n_u {
                    push(r + grid.stride(a), -inv_du2[a]);
                }
            }
            if i + 1 < grid.n_s {
                push(r + nt, -right);
            }
            row_ptr.push(cols.len());
        }
    }

    // A = S + T + V with S ⪰ 0 (positive flux weights) and T ⪰ μ_T.
    let widths = spec.cross_section.widths();
    let transverse: f64 = widths
        .iter()
        .map(|&w| discrete_dirichlet_eigenvalue(w, grid.n_u))
        .sum();

    let provenance = match &spec.torsion {
        Some(t) if spec.dim() == 3 => format!("{} | torsion {:?}", p.id(), t.shape),
        _ => p.id(),
    };
    Ok(DiscreteOperator {
        grid: *grid,
        row_ptr,
        cols,
        vals,
        provenance,
        lower_bound: Some(transverse + v_min),
    })
}

/// Pulls a straightened field back to the physical guide: multiplies each
/// node by `g^{-1/4}`, i.e. `(1 - uγ)^{-1/2}` or `h^{-1/2}`.
pub fn straighten_inverse(spec: &GuideSpec, p: &CurvatureProfile, phi: &Field) -> Result<Field> {
    let grid = phi.grid;
    let mut values = Vec::with_capacity(phi.len());
    for (k, &v) in phi.values.iter().enumerate() {
        let (s, u) = grid.coords(k);
        let m = metric_factor(spec, p, s, &u[..grid.transverse_axes()])?;
        values.push(v / m.jacobian.sqrt());
    }
    Ok(Field { grid, values })
}
