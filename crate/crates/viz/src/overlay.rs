use std::path::PathBuf;

use tsgb_core::SeriesSet;

use crate::error::{Result, VizError};
use crate::scene::{extent, legend, Scene, Shape, Viewport, BLUE, ORANGE};
use crate::sidecar::{cell, write_table};
use crate::spec::PlotSpec;
use crate::tsne::{tsne, TsneConfig};
use crate::write_image;

#[derive(Debug, Clone)]
pub struct OverlayOutput {
    pub image: PathBuf,
    pub sidecar: PathBuf,
    /// Real points first, then fake.
    pub embedding: Vec<[f64; 2]>,
    pub n_real: usize,
}

/// Jointly embed flattened real and fake series and draw them in two colors.
pub fn tsne_overlay(real: &SeriesSet, fake: &SeriesSet, spec: &PlotSpec) -> Result<OverlayOutput> {
    spec.validate_perplexity()?;
    if (real.len_t(), real.n_features()) != (fake.len_t(), fake.n_features()) {
        return Err(VizError::Sizing(format!("real {:?} vs fake {:?}", real.dim(), fake.dim())));
    }
    let total = real.len() + fake.len();
    if (total as f64) < 3.0 * spec.perplexity {
        return Err(VizError::Parameter(format!(
            "{total} samples is fewer than 3 x perplexity {}",
            spec.perplexity
        )));
    }
    let mut rows = real.flat_rows();
    rows.extend(fake.flat_rows());
    let cfg = TsneConfig { perplexity: spec.perplexity, seed: spec.seed, ..Default::default() };
    let embedding = tsne(&rows, &cfg)?;
    let n_real = real.len();

    let mut scene = Scene::new(640, 480);
    let vp = Viewport::new(
        (scene.width, scene.height),
        40.0,
        extent(embedding.iter().map(|p| p[0])),
        extent(embedding.iter().map(|p| p[1])),
    );
    scene.push(vp.frame());
    for (i, p) in embedding.iter().enumerate() {
        let color = if i < n_real { BLUE } else { ORANGE };
        scene.push(Shape::Dot { at: vp.map(p[0], p[1]), radius: 3.0, color });
    }
    legend(&mut scene, &[("real", BLUE), ("generated", ORANGE)]);

    let header: Vec<String> = ["source", "index", "x", "y"].iter().map(|s| s.to_string()).collect();
    let table: Vec<Vec<String>> = embedding
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (source, idx) = if i < n_real { ("real", i) } else { ("fake", i - n_real) };
            vec![source.into(), idx.to_string(), cell(Some(p[0])), cell(Some(p[1]))]
        })
        .collect();
    let image = write_image(&scene, spec)?;
    let sidecar = spec.sidecar_path();
    write_table(&sidecar, &header, &table)?;
    Ok(OverlayOutput { image, sidecar, embedding, n_real })
}
