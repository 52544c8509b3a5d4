use std::path::PathBuf;

use ndarray::{Array4, ArrayView2};
use tsgb_metrics::ensemble_stats;

use crate::error::{Result, VizError};
use crate::scene::{extent, legend, tint, Scene, Shape, Viewport, BLACK, BLUE, GREEN};
use crate::sidecar::{cell, level_column, write_table};
use crate::spec::PlotSpec;
use crate::write_image;

pub const BAND_CLASS: &str = "band";

#[derive(Debug, Clone)]
pub struct ChartOutput {
    pub image: PathBuf,
    pub sidecar: PathBuf,
    /// Number of shaded band regions drawn.
    pub bands: usize,
    pub mean: Vec<f64>,
    /// Sorted levels with their per-step quantiles.
    pub quantiles: Vec<(f64, Vec<f64>)>,
}

struct Summary {
    mean: Vec<f64>,
    quantiles: Vec<(f64, Vec<f64>)>,
}

fn summarize(draws: ArrayView2<'_, f64>, spec: &PlotSpec) -> Result<Summary> {
    spec.validate_levels()?;
    let (s, len) = draws.dim();
    if s == 0 || len == 0 {
        return Err(VizError::Parameter("fan chart needs at least one non-empty draw".into()));
    }
    let mut levels = spec.levels.clone();
    levels.sort_by(f64::total_cmp);
    let stacked = Array4::from_shape_fn((s, 1, len, 1), |(i, _, j, _)| draws[[i, j]]);
    let stats = ensemble_stats(&stacked, &levels)?;
    let flat = |a: &ndarray::Array3<f64>| a.iter().copied().collect::<Vec<f64>>();
    Ok(Summary {
        mean: flat(&stats.mean),
        quantiles: stats.quantiles.iter().map(|(l, q)| (*l, flat(q))).collect(),
    })
}

fn band_colors(n: usize) -> Vec<[u8; 3]> {
    (0..n).map(|i| tint(BLUE, 0.8 - 0.5 * (i as f64 + 1.0) / (n as f64 + 1.0))).collect()
}

fn quantile<'a>(summary: &'a Summary, level: f64) -> &'a [f64] {
    &summary.quantiles.iter().find(|(l, _)| *l == level).expect("level present").1
}

fn header(first: &[&str], levels: &[(f64, Vec<f64>)]) -> Vec<String> {
    first.iter().map(|s| s.to_string()).chain(levels.iter().map(|(l, _)| level_column(*l))).collect()
}

/// Forecast chart: `history` then `draws [S, L]` against `truth [L]`.
pub fn fan_chart(history: &[f64], draws: ArrayView2<'_, f64>, truth: &[f64], spec: &PlotSpec) -> Result<ChartOutput> {
    let summary = summarize(draws, spec)?;
    let horizon = draws.ncols();
    if truth.len() != horizon {
        return Err(VizError::Sizing(format!("truth length {} vs horizon {horizon}", truth.len())));
    }
    let h = history.len();
    let offset = h as f64;

    let mut scene = Scene::new(720, 360);
    let ys = history
        .iter()
        .chain(truth)
        .chain(&summary.mean)
        .chain(summary.quantiles.iter().flat_map(|(_, q)| q))
        .copied();
    let vp = Viewport::new((scene.width, scene.height), 40.0, (0.0, (h + horizon).max(2) as f64 - 1.0), extent(ys));
    scene.push(vp.frame());

    let pairs = spec.band_pairs();
    for ((lo, hi), color) in pairs.iter().zip(band_colors(pairs.len())) {
        let (ql, qh) = (quantile(&summary, *lo), quantile(&summary, *hi));
        let mut points: Vec<(f64, f64)> = (0..horizon).map(|j| vp.map(offset + j as f64, ql[j])).collect();
        points.extend((0..horizon).rev().map(|j| vp.map(offset + j as f64, qh[j])));
        scene.push(Shape::Fill { points, color, class: BAND_CLASS });
    }
    let line = |vals: &[f64], start: f64| -> Vec<(f64, f64)> {
        vals.iter().enumerate().map(|(j, &v)| vp.map(start + j as f64, v)).collect()
    };
    if h > 0 {
        scene.push(Shape::Line { points: line(history, 0.0), color: BLACK });
    }
    scene.push(Shape::Line { points: line(truth, offset), color: GREEN });
    scene.push(Shape::Line { points: line(&summary.mean, offset), color: BLUE });
    legend(&mut scene, &[("history", BLACK), ("truth", GREEN), ("mean", BLUE)]);
    let bands = scene.count(BAND_CLASS);

    let cols = header(&["step", "history", "truth", "mean"], &summary.quantiles);
    let mut rows = Vec::with_capacity(h + horizon);
    for (t, &v) in history.iter().enumerate() {
        let mut r = vec![t.to_string(), cell(Some(v)), cell(None), cell(None)];
        r.extend(summary.quantiles.iter().map(|_| cell(None)));
        rows.push(r);
    }
    for j in 0..horizon {
        let mut r = vec![(h + j).to_string(), cell(None), cell(Some(truth[j])), cell(Some(summary.mean[j]))];
        r.extend(summary.quantiles.iter().map(|(_, q)| cell(Some(q[j]))));
        rows.push(r);
    }
    let image = write_image(&scene, spec)?;
    let sidecar = spec.sidecar_path();
    write_table(&sidecar, &cols, &rows)?;
    Ok(ChartOutput { image, sidecar, bands, mean: summary.mean, quantiles: summary.quantiles })
}

/// Maximal runs `[start, end]` of zeros in `mask`.
pub fn missing_runs(mask: &[u8]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (t, &m) in mask.iter().enumerate() {
        match (m == 0, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((s, t - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, mask.len() - 1));
    }
    runs
}

/// Imputation chart over one channel: bands only over missing steps.
pub fn imputation_fan_chart(
    observed: &[f64],
    mask: &[u8],
    draws: ArrayView2<'_, f64>,
    truth: &[f64],
    spec: &PlotSpec,
) -> Result<ChartOutput> {
    let summary = summarize(draws, spec)?;
    let len = draws.ncols();
    if observed.len() != len || mask.len() != len || truth.len() != len {
        return Err(VizError::Sizing(format!(
            "observed {}, mask {}, truth {} vs draws length {len}",
            observed.len(),
            mask.len(),
            truth.len()
        )));
    }
    if mask.iter().any(|&m| m > 1) {
        return Err(VizError::Parameter("mask entries must be 0 or 1".into()));
    }
    let runs = missing_runs(mask);

    let mut scene = Scene::new(720, 360);
    let missing = |t: usize| mask[t] == 0;
    let ys = truth
        .iter()
        .copied()
        .chain((0..len).filter(|&t| !missing(t)).map(|t| observed[t]))
        .chain((0..len).filter(|&t| missing(t)).flat_map(|t| {
            std::iter::once(summary.mean[t]).chain(summary.quantiles.iter().map(move |(_, q)| q[t]))
        }))
        .collect::<Vec<_>>();
    let vp = Viewport::new((scene.width, scene.height), 40.0, (-0.5, len as f64 - 0.5), extent(ys));
    scene.push(vp.frame());

    let pairs = spec.band_pairs();
    for ((lo, hi), color) in pairs.iter().zip(band_colors(pairs.len())) {
        let (ql, qh) = (quantile(&summary, *lo), quantile(&summary, *hi));
        for &(a, b) in &runs {
            let mut points = Vec::new();
            for t in a..=b {
                points.push(vp.map(t as f64 - 0.5, ql[t]));
                points.push(vp.map(t as f64 + 0.5, ql[t]));
            }
            for t in (a..=b).rev() {
                points.push(vp.map(t as f64 + 0.5, qh[t]));
                points.push(vp.map(t as f64 - 0.5, qh[t]));
            }
            scene.push(Shape::Fill { points, color, class: BAND_CLASS });
        }
    }
    scene.push(Shape::Line {
        points: truth.iter().enumerate().map(|(t, &v)| vp.map(t as f64, v)).collect(),
        color: GREEN,
    });
    for t in 0..len {
        if missing(t) {
            scene.push(Shape::Dot { at: vp.map(t as f64, summary.mean[t]), radius: 3.0, color: BLUE });
        } else {
            scene.push(Shape::Dot { at: vp.map(t as f64, observed[t]), radius: 2.5, color: BLACK });
        }
    }
    legend(&mut scene, &[("observed", BLACK), ("truth", GREEN), ("imputed mean", BLUE)]);
    let bands = scene.count(BAND_CLASS);

    let cols = header(&["step", "observed", "mask", "truth", "mean"], &summary.quantiles);
    let rows: Vec<Vec<String>> = (0..len)
        .map(|t| {
            let m = missing(t);
            let mut r = vec![
                t.to_string(),
                cell((!m).then_some(observed[t])),
                mask[t].to_string(),
                cell(Some(truth[t])),
                cell(m.then_some(summary.mean[t])),
            ];
            r.extend(summary.quantiles.iter().map(|(_, q)| cell(m.then_some(q[t]))));
            r
        })
        .collect();
    let image = write_image(&scene, spec)?;
    let sidecar = spec.sidecar_path();
    write_table(&sidecar, &cols, &rows)?;
    Ok(ChartOutput { image, sidecar, bands, mean: summary.mean, quantiles: summary.quantiles })
}
