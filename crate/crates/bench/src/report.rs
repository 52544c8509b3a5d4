//! Collecting finished runs into tables and plots.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use tsgb_viz::{fan_chart, imputation_fan_chart, tsne_overlay, PlotSpec};

use crate::aggregate::{aggregate_results, ReportTable};
use crate::config::Task;
use crate::error::{AtStage, BenchError, Result, Stage};
use crate::run::{load_stored, RunResult, DRAWS_DIR, INPUTS_DIR, PREDICTIONS_DIR, REFERENCE_DIR, RESULT_FILE};

pub const PLOTS_DIR: &str = "plots";
/// Points per source in t-SNE overlays.
pub const TSNE_POINTS: usize = 200;

/// Every completed run directory directly under `runs_root`, sorted.
pub fn completed_runs(runs_root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(runs_root)
        .map_err(|e| BenchError::new(Stage::Report, format!("cannot read {}: {e}", runs_root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(RESULT_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Loads runs and re-checks each persisted config against the protocol.
pub fn load_results(dirs: &[PathBuf]) -> Result<Vec<RunResult>> {
    dirs.iter()
        .map(|d| {
            let r = RunResult::load(d)?;
            r.config
                .validate()
                .map_err(|e| BenchError::new(Stage::Report, format!("{}: {}", d.display(), e.message)))?;
            Ok(r)
        })
        .collect()
}

/// One table per task present.
pub fn tables_by_task(results: &[RunResult]) -> Result<Vec<ReportTable>> {
    let mut groups: BTreeMap<Task, Vec<RunResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.config.task).or_default().push(r.clone());
    }
    groups.values().map(|g| aggregate_results(g)).collect()
}

/// Writes the text tables to `out` and the CSV tables next to it.
pub fn write_report(tables: &[ReportTable], out: &Path) -> Result<Vec<PathBuf>> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).at(Stage::Report)?;
    }
    let text: Vec<String> = tables.iter().map(ReportTable::to_text).collect();
    std::fs::write(out, text.join("\n")).at(Stage::Report)?;
    let mut written = vec![out.to_path_buf()];
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    for t in tables {
        let path = out.with_file_name(format!("{stem}_{}.csv", t.task.name()));
        std::fs::write(&path, t.to_csv()).at(Stage::Report)?;
        written.push(path);
    }
    Ok(written)
}

/// Draws the standard plot for a run into `<run>/plots/`.
pub fn plot_run(run: &Path, result: &RunResult) -> Result<PathBuf> {
    let dir = run.join(PLOTS_DIR);
    match result.config.task {
        Task::Synthesis | Task::ClassSynthesis => {
            let real = load_stored(&run.join(REFERENCE_DIR))?.series;
            let fake = load_stored(&run.join(PREDICTIONS_DIR))?.series;
            let take = |s: &tsgb_core::SeriesSet| s.select(&(0..s.len().min(TSNE_POINTS)).collect::<Vec<_>>());
            let (real, fake) = (take(&real), take(&fake));
            let total = real.len() + fake.len();
            let perplexity = 30f64.min((total / 3) as f64).max(1.0);
            let spec = PlotSpec::new(dir.join("tsne.png")).with_perplexity(perplexity).with_seed(result.config.seed);
            Ok(tsne_overlay(&real, &fake, &spec).at(Stage::Plot)?.image)
        }
        Task::Forecasting => {
            let history = load_stored(&run.join(INPUTS_DIR))?.series;
            let target = load_stored(&run.join(REFERENCE_DIR))?.series;
            let draws = load_stored(&run.join(DRAWS_DIR))?.series;
            let n_draws = draws.len() / target.len();
            let b = target.len();
            let ens = Array2::from_shape_fn((n_draws, target.len_t()), |(k, t)| draws.values()[[k * b, t, 0]]);
            let hist: Vec<f64> = history.values().slice(s![0, .., 0]).to_vec();
            let truth: Vec<f64> = target.values().slice(s![0, .., 0]).to_vec();
            let spec = PlotSpec::new(dir.join("forecast.png"));
            Ok(fan_chart(&hist, ens.view(), &truth, &spec).at(Stage::Plot)?.image)
        }
        Task::Imputation => {
            let inputs = load_stored(&run.join(INPUTS_DIR))?;
            let mask = inputs.mask.ok_or_else(|| BenchError::new(Stage::Plot, "stored inputs carry no mask"))?;
            let truth = load_stored(&run.join(REFERENCE_DIR))?.series;
            let draws = load_stored(&run.join(DRAWS_DIR))?.series;
            let b = truth.len();
            let n_draws = draws.len() / b;
            let row = (0..b)
                .find(|&i| (0..truth.len_t()).any(|t| mask.bits()[[i, t, 0]] == 0))
                .unwrap_or(0);
            let ens = Array2::from_shape_fn((n_draws, truth.len_t()), |(k, t)| draws.values()[[k * b + row, t, 0]]);
            let observed: Vec<f64> = inputs.series.values().slice(s![row, .., 0]).to_vec();
            let bits: Vec<u8> = mask.bits().slice(s![row, .., 0]).to_vec();
            let truth_row: Vec<f64> = truth.values().slice(s![row, .., 0]).to_vec();
            let spec = PlotSpec::new(dir.join("imputation.png"));
            Ok(imputation_fan_chart(&observed, &bits, ens.view(), &truth_row, &spec).at(Stage::Plot)?.image)
        }
    }
}
