//! Output directory handling and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use satwave::tolerances;
use serde::Serialize;
use serde_json::Value;

use crate::setup::Failure;

#[derive(Serialize)]
pub struct ToleranceSet {
    pub tol_sigma: f64,
    pub rtol: f64,
    pub atol: f64,
    pub u_min: f64,
    pub series_delta0: f64,
    pub tol_g: f64,
}

impl ToleranceSet {
    pub fn with_sigma(tol_sigma: f64) -> Self {
        Self {
            tol_sigma,
            rtol: tolerances::RTOL,
            atol: tolerances::ATOL,
            u_min: tolerances::U_MIN,
            series_delta0: tolerances::SERIES_DELTA0,
            tol_g: tolerances::TOL_G,
        }
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Option<Value>,
    pub tolerances: ToleranceSet,
    pub seed: u64,
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub summary: Value,
    /// Not reproducible; everything else is.
    pub wall_time_s: f64,
}

/// Owns the output directory and records every file written into it.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let f = File::create(self.root.join(name))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::new(1, e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Hands a writer to `fill`, which typically emits a CSV table.
    pub fn csv(&mut self, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>) -> Result<(), Failure> {
        let mut w = self.open(name)?;
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<(), Failure> {
        manifest.outputs = std::mem::take(&mut self.written);
        manifest.outputs.push("manifest.json".into());
        self.json("manifest.json", &manifest)
    }
}
