//! File formats: `.fld` field dumps and per-s CSV curves.
//!
//! A `.fld` file is one line of JSON metadata terminated by `\n`, followed
//! by the node values as little-endian `f64` in s-major node order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FrameSample;
use crate::inverse::ReconstructionResult;
use crate::operator::{Field, Grid};

const FORMAT: &str = "fld";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub grid: Grid,
    pub len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

pub fn write_field_to(mut w: impl Write, field: &Field, label: Option<&str>, lambda: Option<f64>) -> Result<()> {
    let header = FieldHeader {
        format: FORMAT.into(),
        version: VERSION,
        grid: field.grid,
        len: field.len(),
        label: label.map(str::to_owned),
        lambda,
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::FieldFormat(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(path: &Path, field: &Field, label: Option<&str>, lambda: Option<f64>) -> Result<()> {
    write_field_to(BufWriter::new(File::create(path)?), field, label, lambda)
}

pub fn read_field_from(r: impl Read) -> Result<(FieldHeader, Field)> {
    let mut r = BufReader::new(r);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::FieldFormat("missing header line".into()));
    }
    let header: FieldHeader =
        serde_json::from_slice(&line[..line.len() - 1]).map_err(|e| Error::FieldFormat(format!("header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::FieldFormat(format!(
            "unsupported format {} version {}",
            header.format, header.version
        )));
    }
    if header.len != header.grid.len() {
        return Err(Error::FieldFormat(format!(
            "header length {} does not match the grid's {} nodes",
            header.len,
            header.grid.len()
        )));
    }
    let mut bytes = Vec::with_capacity(header.len * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.len * 8 {
        return Err(Error::FieldFormat(format!(
            "expected {} payload bytes, found {}",
            header.len * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::new(header.grid, values)?;
    Ok((header, field))
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, Field)> {
    read_field_from(File::open(path)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// Columns `s, gamma_true, gamma_sq_recon, gamma_recon, mask, abs_err`.
/// Optional columns are left empty when unavailable.
pub fn write_reconstruction_csv(
    w: impl Write,
    r: &ReconstructionResult,
    gamma_true: Option<&dyn Fn(f64) -> f64>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "gamma_true", "gamma_sq_recon", "gamma_recon", "mask", "abs_err"])?;
    for (i, &s) in r.s_nodes.iter().enumerate() {
        let truth = gamma_true.map(|g| g(s));
        let recon = r.gamma_sq[i];
        let signed = r.gamma_signed.as_ref().and_then(|g| g[i]);
        let err = match (truth, recon) {
            (Some(t), Some(g)) => Some((g - t * t).abs()),
            _ => None,
        };
        out.write_record([
            format!("{s:.17e}"),
            opt(truth),
            opt(recon),
            opt(signed),
            (r.mask[i] as u8).to_string(),
            opt(err),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per frame sample: position, tangent, normal and the metric
/// factor at the given edge offset.
pub fn write_geometry_csv(w: impl Write, samples: &[(FrameSample, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "s", "x", "y", "z", "t_x", "t_y", "t_z", "n_x", "n_y", "n_z", "theta", "jacobian_edge",
    ])?;
    for (f, jac) in samples {
        let mut row = vec![f.s];
        row.extend(f.point.iter());
        row.extend(f.tangent.iter());
        row.extend(f.normal.iter());
        row.push(f.theta);
        row.push(*jac);
        out.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
    }
    out.flush()?;
    Ok(())
}
