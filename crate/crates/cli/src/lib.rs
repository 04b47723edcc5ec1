//! Configuration-driven runs of the waveguide toolkit.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod sweep;

use std::path::PathBuf;

use config::{Pipeline, RunConfig};
use error::CliError;
use manifest::RunManifest;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Single worker thread; scalar outputs are then bit-reproducible.
    pub deterministic: bool,
    pub out: Option<PathBuf>,
    pub dim: Option<usize>,
}

/// What a run produced. `manifest` is absent when the configuration was
/// rejected before an output directory was known.
pub struct RunOutcome {
    pub manifest: Option<RunManifest>,
    pub result: Result<(), CliError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(()) => 0,
            Err(e) => e.exit_code(),
        }
    }
}

fn in_pool<T: Send>(deterministic: bool, f: impl FnOnce() -> T + Send) -> (T, usize) {
    if deterministic {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            return (pool.install(f), 1);
        }
    }
    (f(), rayon::current_num_threads())
}

/// Runs the configured pipeline, or `geometry dump` when `geometry` is set.
pub fn run(mut cfg: RunConfig, opts: &RunOptions, geometry: bool) -> RunOutcome {
    if let Some(dim) = opts.dim {
        cfg.override_dim(dim);
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => {
            return RunOutcome {
                manifest: None,
                result: Err(e),
            }
        }
    };
    let out = cfg.output_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&out) {
        return RunOutcome {
            manifest: None,
            result: Err(e.into()),
        };
    }
    let echo = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);
    let name = if geometry { "geometry-dump" } else { cfg.pipeline.name() };

    let ((mut manifest, result), threads) = in_pool(opts.deterministic, || {
        let mut manifest = RunManifest::new(name, echo, opts.deterministic, 0);
        let result = if geometry {
            pipeline::geometry_dump(&resolved, &out, &mut manifest)
        } else {
            let mut ctx = pipeline::Context {
                cfg: &cfg,
                r: &resolved,
                out: &out,
                manifest: &mut manifest,
            };
            pipeline::execute(&mut ctx)
        };
        (manifest, result)
    });
    manifest.threads = threads;
    if let Err(e) = &result {
        manifest.exit_code = e.exit_code();
        manifest.error = Some(e.to_string());
    }
    manifest.outputs.push("manifest.json".into());
    let result = match manifest.write_atomic(&out) {
        Ok(()) => result,
        Err(e) => result.and(Err(e.into())),
    };
    RunOutcome {
        manifest: Some(manifest),
        result,
    }
}

/// Loads a configuration file and optionally overrides its pipeline.
pub fn load(path: &std::path::Path, pipeline: Option<Pipeline>) -> Result<RunConfig, CliError> {
    let mut cfg = config::load(path)?;
    if let Some(p) = pipeline {
        cfg.pipeline = p;
    }
    Ok(cfg)
}
