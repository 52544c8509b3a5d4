use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Every metric the harness can compute. All are lower-is-better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Mse,
    Crps,
    Wasserstein,
    SlicedWasserstein,
    DiscriminativeScore,
    PredictiveScore,
    ContextFid,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        Self::Mse,
        Self::Crps,
        Self::Wasserstein,
        Self::SlicedWasserstein,
        Self::DiscriminativeScore,
        Self::PredictiveScore,
        Self::ContextFid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mse => "mse",
            Self::Crps => "crps",
            Self::Wasserstein => "wasserstein",
            Self::SlicedWasserstein => "sliced_wasserstein",
            Self::DiscriminativeScore => "discriminative_score",
            Self::PredictiveScore => "predictive_score",
            Self::ContextFid => "context_fid",
        }
    }

    pub fn lower_is_better(&self) -> bool {
        true
    }

    /// Checks the range invariant for a value of this metric.
    pub fn in_range(&self, value: f64) -> bool {
        match self {
            Self::DiscriminativeScore => (0.0..=0.5).contains(&value),
            _ => value >= 0.0 && value.is_finite(),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named scalar results of one evaluation, serialized as a flat JSON object
/// (`{"mse": ..., "crps": ..., "metadata": {...}}`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub values: BTreeMap<MetricKind, f64>,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl MetricReport {
    pub fn insert(&mut self, kind: MetricKind, value: f64) {
        self.values.insert(kind, value);
    }

    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        self.values.get(&kind).copied()
    }

    pub fn with_metadata(mut self, key: &str, value: serde_json::Value) -> Self {
        self.metadata.insert(key.to_owned(), value);
        self
    }

    /// Metrics whose values violate their range invariant.
    pub fn out_of_range(&self) -> Vec<MetricKind> {
        self.values
            .iter()
            .filter(|(k, v)| !k.in_range(**v))
            .map(|(k, _)| *k)
            .collect()
    }
}
