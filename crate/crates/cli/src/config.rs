//! Run configuration: a strict JSON schema, path-named validation and the
//! translation into library types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use waveguide::inverse::{Sign, DEFAULT_MASK_EPS};
use waveguide::profiles::{ProfileShape, TorsionShape};
use waveguide::{CurvatureProfile, Grid, GuideSpec, SolveOptions, TorsionSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Validate,
    Forward,
    InverseEigen,
    InversePoisson,
    Discriminate,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Validate => "validate",
            Pipeline::Forward => "forward",
            Pipeline::InverseEigen => "inverse-eigen",
            Pipeline::InversePoisson => "inverse-poisson",
            Pipeline::Discriminate => "discriminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuideConfig {
    pub dim: usize,
    /// Strip width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Rectangle widths of a tube.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d3: Option<f64>,
    /// Truncation half-length; defaults to a multiple of the profile scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
}

fn default_class() -> usize {
    waveguide::profiles::MAX_ORDER
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Zero {
        #[serde(default = "default_class")]
        smoothness_class: usize,
    },
    ConstantBump {
        a: f64,
        plateau: f64,
        sigma: f64,
        #[serde(default = "default_class")]
        smoothness_class: usize,
    },
    Gaussian {
        a: f64,
        sigma: f64,
        #[serde(default = "default_class")]
        smoothness_class: usize,
    },
    Sech2 {
        a: f64,
        sigma: f64,
        #[serde(default = "default_class")]
        smoothness_class: usize,
    },
}

impl ProfileConfig {
    pub fn build(&self) -> Result<CurvatureProfile, waveguide::Error> {
        let (shape, class) = match *self {
            ProfileConfig::Zero { smoothness_class } => (ProfileShape::Zero, smoothness_class),
            ProfileConfig::ConstantBump {
                a,
                plateau,
                sigma,
                smoothness_class,
            } => (ProfileShape::ConstantBump { a, plateau, sigma }, smoothness_class),
            ProfileConfig::Gaussian { a, sigma, smoothness_class } => {
                (ProfileShape::Gaussian { a, sigma }, smoothness_class)
            }
            ProfileConfig::Sech2 { a, sigma, smoothness_class } => (ProfileShape::Sech2 { a, sigma }, smoothness_class),
        };
        CurvatureProfile::new(shape, class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TorsionConfig {
    Constant {
        theta: f64,
        #[serde(default)]
        bounded_angle: bool,
    },
    RampSmoothed {
        theta_start: f64,
        theta_end: f64,
        center: f64,
        width: f64,
        /// Require θ to stay within `[0, π/2]`.
        #[serde(default)]
        bounded_angle: bool,
    },
}

impl TorsionConfig {
    pub fn build(&self) -> Result<TorsionSpec, waveguide::Error> {
        match *self {
            TorsionConfig::Constant { theta, bounded_angle } => {
                TorsionSpec::new(TorsionShape::Constant { theta }, bounded_angle)
            }
            TorsionConfig::RampSmoothed {
                theta_start,
                theta_end,
                center,
                width,
                bounded_angle,
            } => TorsionSpec::new(
                TorsionShape::RampSmoothed {
                    theta_start,
                    theta_end,
                    center,
                    width,
                },
                bounded_angle,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_s: usize,
    pub n_u: usize,
}

/// Source term of the Poisson pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// Analytic image of `exp(-s²)` times the first transverse mode.
    Manufactured,
    /// A `.fld` file on the run grid.
    File { path: PathBuf },
    /// `f = λ₁ φ₁` from the ground eigenpair (discrimination only).
    Eigen,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Manufactured
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminateConfig {
    pub alternative: ProfileConfig,
    /// Constant of the node-wise bound `|f| ≤ M|φ|`; defaults to `λ₁` for an
    /// eigen source and to `max |f/φ|` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bound: Option<f64>,
}

fn default_mask_eps() -> f64 {
    DEFAULT_MASK_EPS
}

fn default_eigenpairs() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: Pipeline,
    pub guide: GuideConfig,
    pub profile: ProfileConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torsion: Option<TorsionConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default = "default_mask_eps")]
    pub mask_eps: f64,
    /// Number of eigenpairs computed by the forward pipelines.
    #[serde(default = "default_eigenpairs")]
    pub eigenpairs: usize,
    /// Re-solve on a domain shortened to 3/4 of `L` at the same `Δs` and
    /// report the shift in λ₁.
    #[serde(default = "default_true")]
    pub truncation_check: bool,
    /// Declared sign of the curvature; the square root is only taken when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Sign>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminate: Option<DiscriminateConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Library objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: GuideSpec,
    pub profile: CurvatureProfile,
    pub grid: Grid,
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parses JSON, naming the first offending path on failure.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| schema("", format!("not valid JSON: {e}")))?;
    from_value(value)
}

pub fn from_value(value: serde_json::Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "" } else { &path }, e.into_inner().to_string())
    })
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| schema("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Default truncation: ten profile scales plus five widths beyond the support.
pub fn default_half_length(profile: &CurvatureProfile, max_width: f64) -> f64 {
    let core = match profile.shape {
        ProfileShape::ConstantBump { plateau, sigma, .. } => plateau + sigma,
        _ => 0.0,
    };
    let scale = if profile.is_zero() { 1.0 } else { profile.length_scale() };
    core + 10.0 * scale + 5.0 * max_width
}

impl RunConfig {
    /// Applies a `--dim` override: a strip width becomes both tube widths
    /// and vice versa.
    pub fn override_dim(&mut self, dim: usize) {
        let g = &mut self.guide;
        if g.dim == dim {
            return;
        }
        match dim {
            3 => {
                let d = g.d.take();
                g.d2 = g.d2.or(d);
                g.d3 = g.d3.or(d);
            }
            _ => {
                g.d = g.d.or(g.d2);
                g.d2 = None;
                g.d3 = None;
                self.torsion = None;
            }
        }
        g.dim = dim;
    }

    /// Checks every rule beyond the JSON shape and fills defaulted values
    /// (recorded so the manifest echo is complete).
    pub fn resolve(&mut self) -> Result<Resolved, CliError> {
        let profile = self.profile.build().map_err(|e| schema("profile", e.to_string()))?;
        let g = &self.guide;
        let widths = match g.dim {
            2 => {
                if g.d2.is_some() || g.d3.is_some() {
                    return Err(schema("guide", "a 2D strip takes `d`, not `d2`/`d3`"));
                }
                vec![g.d.ok_or_else(|| schema("guide.d", "missing strip width"))?]
            }
            3 => {
                if g.d.is_some() {
                    return Err(schema("guide.d", "a 3D tube takes `d2` and `d3`"));
                }
                vec![
                    g.d2.ok_or_else(|| schema("guide.d2", "missing tube width"))?,
                    g.d3.ok_or_else(|| schema("guide.d3", "missing tube width"))?,
                ]
            }
            other => return Err(schema("guide.dim", format!("must be 2 or 3, got {other}"))),
        };
        for (name, w) in ["guide.d2", "guide.d3"].iter().zip(&widths) {
            if !(w.is_finite() && *w > 0.0) {
                let name = if g.dim == 2 { "guide.d" } else { name };
                return Err(schema(name, format!("must be positive, got {w}")));
            }
        }
        let max_width = widths.iter().cloned().fold(0.0, f64::max);
        let half_length = g.half_length.unwrap_or_else(|| default_half_length(&profile, max_width));
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(schema("guide.half_length", format!("must be positive, got {half_length}")));
        }
        self.guide.half_length = Some(half_length);

        if self.torsion.is_some() && self.guide.dim == 2 {
            return Err(schema("torsion", "only a 3D tube takes a torsion angle"));
        }
        let spec = match self.guide.dim {
            2 => GuideSpec::strip(widths[0], half_length),
            _ => {
                let t = self
                    .torsion
                    .get_or_insert(TorsionConfig::Constant {
                        theta: 0.0,
                        bounded_angle: false,
                    })
                    .build()
                    .map_err(|e| schema("torsion", e.to_string()))?;
                GuideSpec::tube(widths[0], widths[1], half_length, t)
            }
        }
        .map_err(|e| schema("guide", e.to_string()))?;

        if self.grid.n_u % 2 == 0 {
            return Err(schema(
                "grid.n_u",
                format!("must be odd so the centerline is a grid line, got {}", self.grid.n_u),
            ));
        }
        if self.grid.n_s < 4 {
            return Err(schema("grid.n_s", format!("must be at least 4, got {}", self.grid.n_s)));
        }
        let grid = Grid::new(&spec, self.grid.n_s, self.grid.n_u).map_err(|e| schema("grid", e.to_string()))?;

        for (name, v) in [("solve.eig_tol", self.solve.eig_tol), ("solve.lin_tol", self.solve.lin_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(schema(name, format!("must be positive, got {v}")));
            }
        }
        if self.solve.max_iter == 0 {
            return Err(schema("solve.max_iter", "must be at least 1"));
        }
        if self.solve.block_size == 0 {
            return Err(schema("solve.block_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.mask_eps) {
            return Err(schema("mask_eps", format!("must lie in [0, 1), got {}", self.mask_eps)));
        }
        if self.eigenpairs == 0 {
            return Err(schema("eigenpairs", "must be at least 1"));
        }
        if self.pipeline == Pipeline::Discriminate {
            let d = self
                .discriminate
                .as_ref()
                .ok_or_else(|| schema("discriminate", "the discriminate pipeline needs an alternative profile"))?;
            d.alternative
                .build()
                .map_err(|e| schema("discriminate.alternative", e.to_string()))?;
            if let Some(m) = d.m_bound {
                if !(m.is_finite() && m >= 0.0) {
                    return Err(schema("discriminate.m_bound", format!("must be non-negative, got {m}")));
                }
            }
        }
        if self.source == SourceConfig::Eigen && self.pipeline == Pipeline::InversePoisson {
            return Err(schema("source", "an eigen source is only meaningful for discrimination"));
        }
        Ok(Resolved { spec, profile, grid })
    }
}
