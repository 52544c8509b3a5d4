//! Static plots of real and generated series.
//!
//! Every plot writes an image (PNG or SVG) and a sidecar CSV holding the
//! exact numbers drawn, so callers can check data without reading pixels.

pub mod error;
pub mod fan;
pub mod overlay;
pub mod scene;
pub mod sidecar;
pub mod spec;
pub mod tsne;

use std::path::PathBuf;

pub use error::{Result, VizError};
pub use fan::{fan_chart, imputation_fan_chart, ChartOutput};
pub use overlay::{tsne_overlay, OverlayOutput};
pub use sidecar::Sidecar;
pub use spec::{ImageFormat, PlotSpec};
pub use tsne::{tsne, TsneConfig};

fn write_image(scene: &scene::Scene, spec: &PlotSpec) -> Result<PathBuf> {
    if let Some(parent) = spec.path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&spec.path, scene.render(spec.format)?)?;
    Ok(spec.path.clone())
}
