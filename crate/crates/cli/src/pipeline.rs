//! The run pipelines. Each writes its artifacts into the output directory
//! and fills the manifest; the caller writes the manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use waveguide::geometry::{check_injectivity, metric_factor, ReferenceCurve};
use waveguide::inverse::{
    discrimination_residual, reconstruct_from_eigenpair, reconstruct_from_poisson, select_branch,
    ReconstructionResult,
};
use waveguide::profiles::validate_assumptions;
use waveguide::solve::{eigenpairs, essential_spectrum_threshold, ground_eigenpair, poisson_solve, Eigenpair};
use waveguide::{assemble, io, manufactured, CurvatureProfile, DiscreteOperator, Field, Grid, GuideSpec};

use crate::config::{Pipeline, Resolved, RunConfig, SourceConfig};
use crate::error::CliError;
use crate::manifest::RunManifest;

/// Self-approach samples per unit length in the validation scan.
const INJECTIVITY_DENSITY: f64 = 20.0;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub r: &'a Resolved,
    pub out: &'a Path,
    pub manifest: &'a mut RunManifest,
}

fn core(stage: &'static str) -> impl Fn(waveguide::Error) -> CliError {
    move |e| CliError::from_core(stage, e)
}

impl Context<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.path(name);
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, value).map_err(|e| CliError::Output(e.to_string()))
    }

    fn write_field(&mut self, name: &str, field: &Field, lambda: Option<f64>) -> Result<(), CliError> {
        let path = self.path(name);
        io::write_field(&path, field, Some(name.trim_end_matches(".fld")), lambda).map_err(core("output"))
    }

    fn assemble(&mut self, p: &CurvatureProfile) -> Result<DiscreteOperator, CliError> {
        let (grid, spec) = (self.r.grid, self.r.spec);
        self.manifest
            .time("assemble", || assemble(&grid, &spec, p))
            .map_err(core("assemble"))
    }

    fn eigensolve(&mut self, a: &DiscreteOperator) -> Result<Vec<Eigenpair>, CliError> {
        let (m, opts) = (self.cfg.eigenpairs, self.cfg.solve);
        let spectrum = self
            .manifest
            .time("eigensolve", || eigenpairs(a, m, &opts))
            .map_err(core("eigensolve"))?;
        let threshold = essential_spectrum_threshold(&self.r.spec);
        let ground = &spectrum.pairs[0];
        let ms = &mut *self.manifest;
        ms.scalar("threshold", threshold);
        ms.scalar("lambda1", ground.lambda);
        ms.scalar("residual_norm", ground.residual_norm);
        ms.scalar("iterations", ground.iterations as f64);
        ms.scalar("threshold_minus_lambda1", threshold - ground.lambda);
        if let Some(gap) = spectrum.gap() {
            ms.scalar("lambda2", spectrum.pairs[1].lambda);
            ms.scalar("gap", gap);
        }
        ms.flag("below_threshold", ground.lambda < threshold);
        ms.flag("near_threshold", ground.near_threshold);
        if ground.near_threshold {
            ms.notes.push(
                "ground eigenvalue lies within 1e-6 of the threshold: possibly a truncation artifact".into(),
            );
        }
        Ok(spectrum.pairs)
    }

    fn write_eigenvalues(&mut self, pairs: &[Eigenpair]) -> Result<(), CliError> {
        let path = self.path("eigenvalues.csv");
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(e.to_string()))?;
        let out = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(["index", "lambda", "residual_norm", "near_threshold"]).map_err(out)?;
        for (i, e) in pairs.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                format!("{:.17e}", e.lambda),
                format!("{:.3e}", e.residual_norm),
                e.near_threshold.to_string(),
            ])
            .map_err(out)?;
        }
        w.flush()?;
        Ok(())
    }

    fn finish_reconstruction(&mut self, r: ReconstructionResult) -> Result<(), CliError> {
        let p = self.r.profile;
        let truth = move |s: f64| p.eval(s, 0).unwrap_or(f64::NAN);
        let mut r = r.with_truth(truth);
        if let Some(sign) = self.cfg.branch {
            r = select_branch(r, sign);
        }
        let d = &r.diagnostics;
        let ms = &mut *self.manifest;
        ms.scalar("masked_nodes", d.masked_nodes as f64);
        if let Some(v) = d.max_rel_error {
            ms.scalar("masked_max_rel_error", v);
        }
        if let Some(v) = d.median_rel_error {
            ms.scalar("masked_median_rel_error", v);
        }
        if let Some(v) = d.max_abs_error {
            ms.scalar("masked_max_abs_error", v);
        }
        ms.scalar("negative_nodes", d.negative_nodes.len() as f64);
        if !d.negative_nodes.is_empty() {
            ms.notes.push(format!(
                "{} masked nodes reconstructed a square below -1e-8 (under-resolution)",
                d.negative_nodes.len()
            ));
        }
        let path = self.path("reconstruction.csv");
        io::write_reconstruction_csv(BufWriter::new(File::create(path)?), &r, Some(&truth))
            .map_err(core("output"))?;
        Ok(())
    }

    fn source(&mut self) -> Result<Field, CliError> {
        let (grid, spec, p) = (self.r.grid, self.r.spec, self.r.profile);
        match &self.cfg.source {
            SourceConfig::Manufactured | SourceConfig::Eigen => manufactured::sample_source(grid, &spec, &p)
                .map_err(core("source")),
            SourceConfig::File { path } => {
                let (_, f) = io::read_field(path).map_err(|e| CliError::Config {
                    path: "source.path".into(),
                    message: e.to_string(),
                })?;
                if f.grid != grid {
                    return Err(CliError::Config {
                        path: "source.path".into(),
                        message: "field grid differs from the configured grid".into(),
                    });
                }
                Ok(f)
            }
        }
    }
}

pub fn execute(ctx: &mut Context) -> Result<(), CliError> {
    match ctx.cfg.pipeline {
        Pipeline::Validate => validate(ctx),
        Pipeline::Forward => forward(ctx).map(|_| ()),
        Pipeline::InverseEigen => {
            let pairs = forward(ctx)?;
            let mask_eps = ctx.cfg.mask_eps;
            let r = ctx
                .manifest
                .time("reconstruct", || reconstruct_from_eigenpair(&pairs[0], mask_eps))
                .map_err(core("reconstruct"))?;
            ctx.finish_reconstruction(r)
        }
        Pipeline::InversePoisson => inverse_poisson(ctx),
        Pipeline::Discriminate => discriminate(ctx),
    }
}

fn forward(ctx: &mut Context) -> Result<Vec<Eigenpair>, CliError> {
    let p = ctx.r.profile;
    let a = ctx.assemble(&p)?;
    let pairs = ctx.eigensolve(&a)?;
    ctx.write_eigenvalues(&pairs)?;
    ctx.write_field("phi.fld", &pairs[0].phi, Some(pairs[0].lambda))?;
    if ctx.cfg.truncation_check {
        truncation_check(ctx, pairs[0].lambda)?;
    }
    Ok(pairs)
}

/// Same `Δs`, three quarters of the domain. Bound states decay
/// exponentially, so a large shift means `L` is too short.
fn truncation_check(ctx: &mut Context, lambda: f64) -> Result<(), CliError> {
    let (spec, p, grid) = (ctx.r.spec, ctx.r.profile, ctx.r.grid);
    let n_s = ((0.75 * (grid.n_s + 1) as f64).round() as usize).saturating_sub(1).max(4);
    let short = GuideSpec {
        half_length: spec.half_length * (n_s + 1) as f64 / (grid.n_s + 1) as f64,
        ..spec
    };
    let opts = ctx.cfg.solve;
    let short_lambda = ctx
        .manifest
        .time("truncation_check", || {
            let g = Grid::new(&short, n_s, grid.n_u)?;
            ground_eigenpair(&assemble(&g, &short, &p)?, &opts)
        })
        .map_err(core("truncation_check"))?
        .lambda;
    let ms = &mut *ctx.manifest;
    ms.scalar("short_half_length", short.half_length);
    ms.scalar("lambda1_short_domain", short_lambda);
    ms.scalar("truncation_sensitivity", (short_lambda - lambda).abs());
    Ok(())
}

fn inverse_poisson(ctx: &mut Context) -> Result<(), CliError> {
    let (spec, p, grid) = (ctx.r.spec, ctx.r.profile, ctx.r.grid);
    if p.smoothness_class < 5 {
        ctx.manifest
            .notes
            .push("profile smoothness class below 5: formula evaluated outside its classical setting".into());
    }
    let a = ctx.assemble(&p)?;
    let f = ctx.source()?;
    let opts = ctx.cfg.solve;
    let phi = ctx
        .manifest
        .time("poisson", || poisson_solve(&a, &f, &opts))
        .map_err(core("poisson"))?;
    if ctx.cfg.source == SourceConfig::Manufactured {
        let exact = manufactured::sample_phi(grid, &spec);
        let err = phi
            .values
            .iter()
            .zip(&exact.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        ctx.manifest.scalar("solution_max_abs_error", err);
        // the sampled field carries the discretization error of the formula itself
        let mask_eps = ctx.cfg.mask_eps;
        let sampled = reconstruct_from_poisson(&exact, &f, mask_eps)
            .map_err(core("reconstruct"))?
            .with_truth(|s| p.eval(s, 0).unwrap_or(f64::NAN));
        if let Some(v) = sampled.diagnostics.max_rel_error {
            ctx.manifest.scalar("sampled_field_max_rel_error", v);
        }
    }
    ctx.write_field("phi.fld", &phi, None)?;
    ctx.write_field("f.fld", &f, None)?;
    let mask_eps = ctx.cfg.mask_eps;
    let r = ctx
        .manifest
        .time("reconstruct", || reconstruct_from_poisson(&phi, &f, mask_eps))
        .map_err(core("reconstruct"))?;
    ctx.finish_reconstruction(r)
}

fn discriminate(ctx: &mut Context) -> Result<(), CliError> {
    let (spec, p1) = (ctx.r.spec, ctx.r.profile);
    let d = ctx.cfg.discriminate.clone().expect("checked during resolve");
    let p2 = d.alternative.build().map_err(core("config"))?;
    let a = ctx.assemble(&p1)?;
    let (phi, f, default_m) = if ctx.cfg.source == SourceConfig::Eigen {
        let pairs = ctx.eigensolve(&a)?;
        let e = &pairs[0];
        let f = Field::new(e.phi.grid, e.phi.values.iter().map(|v| e.lambda * v).collect())
            .map_err(core("source"))?;
        (e.phi.clone(), f, e.lambda)
    } else {
        let f = ctx.source()?;
        let opts = ctx.cfg.solve;
        let phi = ctx
            .manifest
            .time("poisson", || poisson_solve(&a, &f, &opts))
            .map_err(core("poisson"))?;
        let m = phi
            .values
            .iter()
            .zip(&f.values)
            .filter(|(x, _)| **x != 0.0)
            .map(|(x, y)| (y / x).abs())
            .fold(0.0, f64::max);
        (phi, f, m)
    };
    let m = d.m_bound.unwrap_or(default_m);
    let report = ctx
        .manifest
        .time("discriminate", || discrimination_residual(&spec, &p1, &p2, &phi, &f, m))
        .map_err(core("discriminate"))?;
    let ms = &mut *ctx.manifest;
    ms.scalar("residual_matched", report.residual_matched);
    ms.scalar("residual_alternative", report.residual_alternative);
    ms.scalar("ratio", report.ratio);
    ms.scalar("m_bound", m);
    ms.flag("m_bound_ok", report.m_bound_ok);
    ctx.write_json("discrimination.json", &report)?;
    ctx.write_field("phi.fld", &phi, None)
}

#[derive(Serialize)]
struct ValidationReport {
    assumptions: waveguide::profiles::AssumptionReport,
    injectivity: waveguide::geometry::InjectivityReport,
    min_jacobian: f64,
    threshold: f64,
}

fn validate(ctx: &mut Context) -> Result<(), CliError> {
    let (spec, p, grid) = (ctx.r.spec, ctx.r.profile, ctx.r.grid);
    let report = ctx.manifest.time("assumptions", || validate_assumptions(&p, &spec));
    let injectivity = ctx
        .manifest
        .time("injectivity", || check_injectivity(&spec, &p, INJECTIVITY_DENSITY));
    let mut min_jacobian = f64::INFINITY;
    for k in 0..grid.len() {
        let (s, u) = grid.coords(k);
        if let Ok(m) = metric_factor(&spec, &p, s, &u[..spec.dim() - 1]) {
            min_jacobian = min_jacobian.min(m.jacobian);
        } else {
            min_jacobian = min_jacobian.min(0.0);
        }
    }
    let ms = &mut *ctx.manifest;
    ms.scalar("sup_curvature", report.sup_gamma);
    ms.scalar("min_self_approach", injectivity.min_self_approach);
    ms.scalar("min_jacobian", min_jacobian);
    ms.scalar("threshold", essential_spectrum_threshold(&spec));
    ms.flag("assumptions_passed", report.passed());
    ms.flag("injective", injectivity.injective);
    ms.notes.extend(report.notes.iter().cloned());
    let passed = report.passed() && injectivity.injective;
    let notes = report.notes.clone();
    ctx.write_json(
        "validation.json",
        &ValidationReport {
            assumptions: report,
            injectivity,
            min_jacobian,
            threshold: essential_spectrum_threshold(&spec),
        },
    )?;
    if passed {
        Ok(())
    } else {
        let mut why = notes;
        if !ctx.manifest.flags["injective"] {
            why.push("the sampled guide comes close to itself (possible self-intersection)".into());
        }
        Err(CliError::Assumption(why.join("; ")))
    }
}

/// Frames along the reference curve at the grid's s-nodes with the metric
/// factor at the outer edge `u = d/2` (tube: `(d2/2, 0)`).
pub fn geometry_dump(r: &Resolved, out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let spec = r.spec;
    let l = spec.half_length;
    let curve = manifest.time("curve", || ReferenceCurve::for_guide(&spec, &r.profile, -l, l));
    let edge: Vec<f64> = match spec.dim() {
        2 => vec![0.5 * spec.cross_section.widths()[0]],
        _ => vec![0.5 * spec.cross_section.widths()[0], 0.0],
    };
    let mut rows = Vec::with_capacity(r.grid.n_s);
    let mut min_edge = f64::INFINITY;
    for s in r.grid.s_nodes() {
        let jac = metric_factor(&spec, &r.profile, s, &edge).map(|m| m.jacobian).unwrap_or(0.0);
        min_edge = min_edge.min(jac);
        rows.push((curve.frame(s), jac));
    }
    fs::create_dir_all(out)?;
    io::write_geometry_csv(BufWriter::new(File::create(out.join("geometry.csv"))?), &rows)
        .map_err(core("output"))?;
    manifest.outputs.push("geometry.csv".into());
    manifest.scalar("min_edge_jacobian", min_edge);
    if let Some(last) = rows.last() {
        manifest.scalar("end_x", last.0.point[0]);
        manifest.scalar("end_y", last.0.point[1]);
        manifest.scalar("end_z", last.0.point[2]);
    }
    Ok(())
}
