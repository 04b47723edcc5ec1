use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run. Scalars are reproducible bit for bit in
/// deterministic mode; timings are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub pipeline: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Effective configuration including every defaulted value.
    pub config: serde_json::Value,
    pub versions: BTreeMap<String, String>,
    pub deterministic: bool,
    pub threads: usize,
    pub timings: Vec<StageTiming>,
    pub scalars: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(pipeline: &str, config: serde_json::Value, deterministic: bool, threads: usize) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("waveguide-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("manifest".into(), "1".into());
        RunManifest {
            pipeline: pipeline.into(),
            exit_code: 0,
            error: None,
            config,
            versions,
            deterministic,
            threads,
            timings: Vec::new(),
            scalars: BTreeMap::new(),
            flags: BTreeMap::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn scalar(&mut self, name: &str, v: f64) {
        self.scalars.insert(name.into(), v);
    }

    pub fn flag(&mut self, name: &str, v: bool) {
        self.flags.insert(name.into(), v);
    }

    /// Writes `manifest.json` through a temporary file and a rename, so a
    /// reader never sees a partial manifest.
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let tmp = dir.join(".manifest.json.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            serde_json::to_writer_pretty(&mut f, self)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(tmp, dir.join("manifest.json"))
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
