//! Parameter sweeps: one isolated run per value of a dotted config path.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::CliError;
use crate::{run, RunOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: serde_json::Value,
    pub exit_code: i32,
    pub error: Option<String>,
    pub n_s: Option<usize>,
    pub n_u: Option<usize>,
    pub lambda1: Option<f64>,
    pub threshold: Option<f64>,
    pub masked_max_rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Observed order of λ₁ from each consecutive triple of successful runs
    /// (resolution axes only).
    pub lambda_orders: Vec<f64>,
    /// Observed order of the reconstruction error from consecutive pairs.
    pub error_orders: Vec<f64>,
}

fn is_resolution_axis(axis: &str) -> bool {
    axis == "grid.n_s"
}

/// Sets `path` (dot-separated object keys) inside `root`.
pub fn set_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<(), CliError> {
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| CliError::Config {
            path: keys[..i].join("."),
            message: "sweep axis does not name an object field".into(),
        })?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Err(CliError::Config {
        path: path.into(),
        message: "empty sweep axis".into(),
    })
}

/// Keeps `Δs/Δu` fixed when `n_s` changes: `n_u + 1` scales with `n_s + 1`,
/// rounded to the nearest odd count.
fn proportional_n_u(base_n_s: usize, base_n_u: usize, n_s: usize) -> usize {
    let exact = (base_n_u + 1) as f64 * (n_s + 1) as f64 / (base_n_s + 1) as f64 - 1.0;
    let odd = 2.0 * ((exact - 1.0) / 2.0).round() + 1.0;
    odd.max(1.0) as usize
}

/// Observed order from three values on grids refined by ratio `r`.
pub fn observed_order(v: [f64; 3], r: f64) -> f64 {
    ((v[0] - v[1]) / (v[1] - v[2])).abs().ln() / r.ln()
}

pub fn sweep(
    base: serde_json::Value,
    axis: &str,
    values: &[serde_json::Value],
    opts: &RunOptions,
) -> Result<SweepSummary, CliError> {
    let root_out = opts
        .out
        .clone()
        .or_else(|| base.get("output_dir").and_then(|v| v.as_str()).map(Into::into))
        .unwrap_or_else(|| "out".into());
    fs::create_dir_all(&root_out)?;
    let base_grid = config::from_value(base.clone())?.grid;

    let job = |(index, value): (usize, &serde_json::Value)| -> SweepRow {
        let mut cfg_value = base.clone();
        let mut row = SweepRow {
            index,
            value: value.clone(),
            exit_code: 0,
            error: None,
            n_s: None,
            n_u: None,
            lambda1: None,
            threshold: None,
            masked_max_rel_error: None,
        };
        let prepared = set_path(&mut cfg_value, axis, value.clone()).and_then(|()| {
            let mut cfg = config::from_value(cfg_value)?;
            if is_resolution_axis(axis) {
                cfg.grid.n_u = proportional_n_u(base_grid.n_s, base_grid.n_u, cfg.grid.n_s);
            }
            Ok(cfg)
        });
        let cfg = match prepared {
            Ok(c) => c,
            Err(e) => {
                row.exit_code = e.exit_code();
                row.error = Some(e.to_string());
                return row;
            }
        };
        row.n_s = Some(cfg.grid.n_s);
        row.n_u = Some(cfg.grid.n_u);
        let run_opts = RunOptions {
            out: Some(root_out.join(format!("run_{index:03}"))),
            ..opts.clone()
        };
        let outcome = run(cfg, &run_opts, false);
        row.exit_code = outcome.exit_code();
        if let Err(e) = &outcome.result {
            row.error = Some(e.to_string());
        }
        if let Some(m) = &outcome.manifest {
            row.lambda1 = m.scalars.get("lambda1").copied();
            row.threshold = m.scalars.get("threshold").copied();
            row.masked_max_rel_error = m.scalars.get("masked_max_rel_error").copied();
        }
        row
    };

    let jobs: Vec<(usize, &serde_json::Value)> = values.iter().enumerate().collect();
    let rows: Vec<SweepRow> = if opts.deterministic {
        jobs.into_iter().map(job).collect()
    } else {
        jobs.into_par_iter().map(job).collect()
    };

    let mut lambda_orders = Vec::new();
    let mut error_orders = Vec::new();
    if is_resolution_axis(axis) {
        let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.exit_code == 0).collect();
        for w in ok.windows(3) {
            if let (Some(a), Some(b), Some(c)) = (w[0].lambda1, w[1].lambda1, w[2].lambda1) {
                let r = (w[1].n_s.unwrap() + 1) as f64 / (w[0].n_s.unwrap() + 1) as f64;
                lambda_orders.push(observed_order([a, b, c], r));
            }
        }
        for w in ok.windows(2) {
            if let (Some(a), Some(b)) = (w[0].masked_max_rel_error, w[1].masked_max_rel_error) {
                let r = (w[1].n_s.unwrap() + 1) as f64 / (w[0].n_s.unwrap() + 1) as f64;
                error_orders.push((a / b).ln() / r.ln());
            }
        }
    }

    let summary = SweepSummary {
        axis: axis.into(),
        rows,
        lambda_orders,
        error_orders,
    };
    write_outputs(&root_out, &summary)?;
    Ok(summary)
}

fn write_outputs(dir: &Path, s: &SweepSummary) -> Result<(), CliError> {
    let out = |e: csv::Error| CliError::Output(e.to_string());
    let mut w = csv::Writer::from_path(dir.join("sweep.csv")).map_err(out)?;
    w.write_record([
        "index",
        "value",
        "exit_code",
        "n_s",
        "n_u",
        "lambda1",
        "threshold",
        "masked_max_rel_error",
        "error",
    ])
    .map_err(out)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &s.rows {
        w.write_record([
            r.index.to_string(),
            r.value.to_string(),
            r.exit_code.to_string(),
            int(r.n_s),
            int(r.n_u),
            num(r.lambda1),
            num(r.threshold),
            num(r.masked_max_rel_error),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(out)?;
    }
    w.flush()?;
    let text = serde_json::to_string_pretty(s).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(dir.join("sweep.json"), text + "\n")?;
    Ok(())
}
