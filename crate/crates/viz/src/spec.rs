use std::path::{Path, PathBuf};

use crate::error::{Result, VizError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Svg,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Svg => "svg",
        }
    }

    /// Guess from a file extension, defaulting to PNG.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("svg") => ImageFormat::Svg,
            _ => ImageFormat::Png,
        }
    }
}

/// Where and how to draw a plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub path: PathBuf,
    pub format: ImageFormat,
    pub perplexity: f64,
    pub seed: u64,
    /// Quantile levels for fan-chart bands, symmetric around 0.5.
    pub levels: Vec<f64>,
}

impl PlotSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let format = ImageFormat::from_path(&path);
        Self {
            path,
            format,
            perplexity: 30.0,
            seed: 0,
            levels: vec![0.1, 0.25, 0.75, 0.9],
        }
    }

    pub fn with_format(mut self, format: ImageFormat) -> Self {
        self.format = format;
        self
    }

    pub fn with_perplexity(mut self, perplexity: f64) -> Self {
        self.perplexity = perplexity;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.levels = levels;
        self
    }

    /// The CSV written next to the image.
    pub fn sidecar_path(&self) -> PathBuf {
        self.path.with_extension("csv")
    }

    pub fn validate_levels(&self) -> Result<()> {
        tsgb_metrics::ensemble::check_levels(&self.levels).map_err(|e| VizError::Parameter(e.to_string()))?;
        let mut sorted = self.levels.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        for i in 0..n / 2 + n % 2 {
            if (sorted[i] + sorted[n - 1 - i] - 1.0).abs() > 1e-12 {
                return Err(VizError::Parameter(format!(
                    "quantile levels {:?} are not symmetric around 0.5",
                    self.levels
                )));
            }
        }
        Ok(())
    }

    /// `(lower, upper)` level pairs, outermost first.
    pub fn band_pairs(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.levels.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        (0..n / 2).map(|i| (sorted[i], sorted[n - 1 - i])).collect()
    }

    pub fn validate_perplexity(&self) -> Result<()> {
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return Err(VizError::Parameter(format!("perplexity {} must be positive", self.perplexity)));
        }
        Ok(())
    }
}
