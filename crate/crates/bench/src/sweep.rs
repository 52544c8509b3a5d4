//! Independent runs executed on a bounded worker pool.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{BenchError, Result, Stage};
use crate::run::{run_benchmark, RunResult};

/// Outcome of one config in a sweep; failures never abort the others.
#[derive(Debug)]
pub struct SweepEntry {
    pub source: PathBuf,
    pub outcome: Result<RunResult>,
}

/// All `*.json` files in `dir`, sorted by name.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| BenchError::config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn run_sweep(configs: Vec<(PathBuf, RunConfig)>, runs_root: &Path, parallel: usize) -> Result<Vec<SweepEntry>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| BenchError::new(Stage::Config, e.to_string()))?;
    Ok(pool.install(|| {
        configs
            .into_par_iter()
            .map(|(source, cfg)| SweepEntry { outcome: run_benchmark(&cfg, runs_root), source })
            .collect()
    }))
}

/// Loads and runs every config in `dir`; unreadable configs become failed entries.
pub fn sweep_dir(dir: &Path, runs_root: &Path, parallel: usize) -> Result<Vec<SweepEntry>> {
    let mut ready = Vec::new();
    let mut failed = Vec::new();
    for path in config_files(dir)? {
        match RunConfig::from_file(&path) {
            Ok(cfg) => ready.push((path, cfg)),
            Err(e) => failed.push(SweepEntry { source: path, outcome: Err(e) }),
        }
    }
    let mut entries = run_sweep(ready, runs_root, parallel)?;
    entries.extend(failed);
    entries.sort_by(|a, b| a.source.cmp(&b.source));
    Ok(entries)
}
