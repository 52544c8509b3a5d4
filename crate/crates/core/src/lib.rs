//! Core data types and the data pipeline for time-series generation benchmarks.
//!
//! Everything is expressed in terms of [`SeriesSet`], a batch of multivariate
//! series shaped `[N, T, D]`, and [`Mask`], a binary observation indicator of
//! the same shape (1 = observed, 0 = missing).

pub mod corrupt;
pub mod error;
pub mod ingest;
pub mod rng;
pub mod scaler;
pub mod series;
pub mod split;
pub mod store;
pub mod synth;
pub mod window;

pub use corrupt::{assemble_imputation, simulate_irregular, simulate_missing, IrregularSet};
pub use error::{DataError, Result};
pub use ingest::{load_csv_dataset, ColumnSelection, CsvDataset, MAX_CHANNELS};
pub use scaler::{Scaler, ScalerMethod};
pub use series::{LabeledSeriesSet, Mask, SeriesSet};
pub use split::{split_dataset, split_indices, SplitMode, SplitSpec, Splits};
pub use synth::{gen_sine_nd, gen_spiral2d, spiral_chirality, SineNDParams, Spiral2DParams};
pub use window::{make_forecast_pairs, make_windows, ForecastPair};
