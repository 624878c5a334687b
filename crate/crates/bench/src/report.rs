//! Tables, side files and the run manifest.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::error::BenchError;

/// A CSV table: fixed header, rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: Vec<&'static str>) -> Table {
        Table { file: file.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, BenchError> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(BenchError::io(&path))?;
        Ok(path)
    }
}

/// Numeric cell, exact and stable across runs.
pub fn sci(v: f64) -> String {
    format!("{v:e}")
}

/// Wall-time cell.
pub fn secs(v: f64) -> String {
    format!("{v:.6}")
}

/// Rate cell; empty when undefined.
pub fn opt_rate(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.4}")).unwrap_or_default()
}

/// Geometry of one refinement level, echoed in the manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelInfo {
    pub level: u32,
    pub grid_spacing: f64,
    pub mesh_size: f64,
    pub n_dofs: usize,
    pub n_steps: usize,
}

impl LevelInfo {
    fn to_json(self) -> Value {
        json!({
            "level": self.level,
            "grid_spacing": self.grid_spacing,
            "mesh_size": self.mesh_size,
            "n_dofs": self.n_dofs,
            "n_steps": self.n_steps,
        })
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub levels: Vec<LevelInfo>,
    /// Files written during the run (mesh dumps, trajectories).
    pub side_files: Vec<PathBuf>,
    pub summary: Map<String, Value>,
    pub timings: Map<String, Value>,
}

pub fn manifest_name(cfg: &ExperimentConfig) -> String {
    format!("{}_manifest.json", cfg.experiment)
}

/// Writes every table and the manifest into `cfg.out`; returns the paths.
pub fn write_report(cfg: &ExperimentConfig, report: &Report, wall_seconds: f64) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(&cfg.out).map_err(BenchError::io(&cfg.out))?;
    let mut written = Vec::new();
    for t in &report.tables {
        written.push(t.write(&cfg.out)?);
    }
    let config: Map<String, Value> = cfg.pairs().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    let mut timings = report.timings.clone();
    timings.insert("wall_seconds".into(), json!(wall_seconds));
    let outputs: Vec<String> = written.iter().chain(&report.side_files).map(|p| p.display().to_string()).collect();
    let manifest = json!({
        "experiment": cfg.experiment.as_str(),
        "config": config,
        "versions": {
            "kryrom": kryrom::VERSION,
            "kryrom-bench": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
        },
        "levels": report.levels.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
        "timings": timings,
        "summary": report.summary,
        "outputs": outputs,
    });
    let path = cfg.out.join(manifest_name(cfg));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON");
    std::fs::write(&path, text + "\n").map_err(BenchError::io(&path))?;
    written.push(path);
    Ok(written)
}
