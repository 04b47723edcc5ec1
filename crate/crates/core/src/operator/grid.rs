use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CrossSection, GuideSpec};

/// Tensor grid of interior nodes on the truncated straight domain
/// `[-L, L] x ω`. Nodes are ordered s-major, then u2, then u3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cross_section: CrossSection,
    pub half_length: f64,
    pub n_s: usize,
    /// Interior nodes per transverse axis; odd so the centerline is a grid line.
    pub n_u: usize,
}

impl Grid {
    pub fn new(spec: &GuideSpec, n_s: usize, n_u: usize) -> Result<Self> {
        if n_u % 2 == 0 {
            return Err(Error::EvenTransverseCount(n_u));
        }
        if n_s < 3 {
            return Err(Error::param("n_s", format!("need at least 3 nodes along s, got {n_s}")));
        }
        Ok(Grid {
            cross_section: spec.cross_section,
            half_length: spec.half_length,
            n_s,
            n_u,
        })
    }

    pub fn dim(&self) -> usize {
        self.cross_section.dim()
    }

    pub fn ds(&self) -> f64 {
        2.0 * self.half_length / (self.n_s + 1) as f64
    }

    /// Spacing per transverse axis (`du[1]` is unused in 2D).
    pub fn du(&self) -> [f64; 2] {
        let n = (self.n_u + 1) as f64;
        match self.cross_section {
            CrossSection::Strip { width } => [width / n, 0.0],
            CrossSection::Rectangle { width2, width3 } => [width2 / n, width3 / n],
        }
    }

    pub fn transverse_axes(&self) -> usize {
        self.dim() - 1
    }

    /// Nodes per s-slice.
    pub fn transverse_len(&self) -> usize {
        self.n_u.pow(self.transverse_axes() as u32)
    }

    pub fn len(&self) -> usize {
        self.n_s * self.transverse_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn s(&self, i: usize) -> f64 {
        -self.half_length + (i + 1) as f64 * self.ds()
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.n_s).map(|i| self.s(i)).collect()
    }

    /// Transverse coordinate of node `j` on `axis`; exactly 0 at the middle node.
    pub fn u(&self, axis: usize, j: usize) -> f64 {
        let c = ((self.n_u - 1) / 2) as f64;
        (j as f64 - c) * self.du()[axis]
    }

    /// Per-axis node indices of transverse slot `t`.
    pub fn transverse_indices(&self, t: usize) -> [usize; 2] {
        match self.dim() {
            2 => [t, 0],
            _ => [t / self.n_u, t % self.n_u],
        }
    }

    /// Transverse offset `(u2, u3)` of slot `t` (`u3 = 0` in 2D).
    pub fn offset(&self, t: usize) -> [f64; 2] {
        let [j, l] = self.transverse_indices(t);
        match self.dim() {
            2 => [self.u(0, j), 0.0],
            _ => [self.u(0, j), self.u(1, l)],
        }
    }

    /// Index stride of a unit step along transverse `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match (self.dim(), axis) {
            (2, _) => 1,
            (_, 0) => self.n_u,
            _ => 1,
        }
    }

    pub fn index(&self, i: usize, t: usize) -> usize {
        i * self.transverse_len() + t
    }

    /// Transverse slot of the centerline.
    pub fn center_slot(&self) -> usize {
        let c = (self.n_u - 1) / 2;
        match self.dim() {
            2 => c,
            _ => c * self.n_u + c,
        }
    }

    pub fn center_index(&self, i: usize) -> usize {
        self.index(i, self.center_slot())
    }

    /// Coordinates `(s, offset)` of linear node index `k`.
    pub fn coords(&self, k: usize) -> (f64, [f64; 2]) {
        let nt = self.transverse_len();
        (self.s(k / nt), self.offset(k % nt))
    }

    /// Volume element of one node, used for quadrature-weighted norms.
    pub fn cell_volume(&self) -> f64 {
        let du = self.du();
        match self.dim() {
            2 => self.ds() * du[0],
            _ => self.ds() * du[0] * du[1],
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Real values on the interior nodes of a grid; zero on the Dirichlet boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite value at node {k}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(s, [u2, u3])` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, [f64; 2]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (s, u) = grid.coords(k);
                f(s, u)
            })
            .collect();
        Field { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        crate::solve::linalg::norm(&self.values)
    }

    pub fn dot(&self, other: &Field) -> f64 {
        crate::solve::linalg::dot(&self.values, &other.values)
    }

    /// Values at the centerline nodes, one per s-node.
    pub fn centerline(&self) -> Vec<f64> {
        (0..self.grid.n_s)
            .map(|i| self.values[self.grid.center_index(i)])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
