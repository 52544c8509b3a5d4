use ndarray::{s, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

/// A batch of multivariate time series, `values[[n, t, d]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSet {
    values: Array3<f64>,
    timestamps: Option<Vec<f64>>,
}

impl SeriesSet {
    /// Builds a set and checks that every value is finite and that `N, T, D >= 1`.
    pub fn new(values: Array3<f64>) -> Result<Self> {
        let set = Self {
            values,
            timestamps: None,
        };
        set.validate()?;
        Ok(set)
    }

    /// Like [`SeriesSet::new`] but allows an empty batch (N = 0), which is what
    /// a sampler returns for an empty request.
    pub fn new_allow_empty(values: Array3<f64>) -> Result<Self> {
        let (_, t, d) = values.dim();
        if t == 0 || d == 0 {
            return Err(DataError::Invalid(format!("empty geometry T={t}, D={d}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite value".into()));
        }
        Ok(Self {
            values,
            timestamps: None,
        })
    }

    pub fn from_vec(n: usize, t: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        let values = Array3::from_shape_vec((n, t, d), data)
            .map_err(|e| DataError::sizing(e.to_string()))?;
        Self::new(values)
    }

    pub fn zeros(n: usize, t: usize, d: usize) -> Self {
        Self {
            values: Array3::zeros((n, t, d)),
            timestamps: None,
        }
    }

    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.len() != self.len_t() {
            return Err(DataError::sizing(format!(
                "{} timestamps for series of length {}",
                timestamps.len(),
                self.len_t()
            )));
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DataError::Invalid(
                "timestamps must be strictly increasing".into(),
            ));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let (n, t, d) = self.values.dim();
        if n == 0 || t == 0 || d == 0 {
            return Err(DataError::Invalid(format!(
                "empty geometry N={n}, T={t}, D={d}"
            )));
        }
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn len(&self) -> usize {
        self.values.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len_t(&self) -> usize {
        self.values.dim().1
    }

    pub fn n_features(&self) -> usize {
        self.values.dim().2
    }

    pub fn sample(&self, i: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), i)
    }

    /// Row-major flattened copy of the values (`N * T * D` entries).
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    /// Per-sample flattened rows, each `T * D` long.
    pub fn flat_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .outer_iter()
            .map(|s| s.iter().copied().collect())
            .collect()
    }

    /// Gathers the given samples in order. Indices may repeat.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), indices),
            timestamps: self.timestamps.clone(),
        }
    }

    /// Slices time steps `[start, end)` of every sample.
    pub fn slice_time(&self, start: usize, end: usize) -> Self {
        let timestamps = self.timestamps.as_ref().map(|ts| ts[start..end].to_vec());
        Self {
            values: self.values.slice(s![.., start..end, ..]).to_owned(),
            timestamps,
        }
    }

    /// Keeps only the first `k` features.
    pub fn take_features(&self, k: usize) -> Self {
        let k = k.min(self.n_features());
        Self {
            values: self.values.slice(s![.., .., 0..k]).to_owned(),
            timestamps: self.timestamps.clone(),
        }
    }

    /// Concatenates sets along the sample axis.
    pub fn concat(sets: &[&SeriesSet]) -> Result<Self> {
        let views: Vec<_> = sets.iter().map(|s| s.values.view()).collect();
        let values = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| DataError::sizing(e.to_string()))?;
        Ok(Self {
            values,
            timestamps: None,
        })
    }

    /// Per-feature mean and (population) standard deviation over all samples and steps.
    pub fn feature_moments(&self) -> Vec<(f64, f64)> {
        let d = self.n_features();
        (0..d)
            .map(|j| {
                let col = self.values.slice(s![.., .., j]);
                let n = col.len() as f64;
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }
}

/// Binary observation indicator aligned with a [`SeriesSet`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    bits: Array3<u8>,
}

impl Mask {
    pub fn new(bits: Array3<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(DataError::Invalid("mask entries must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn ones(dim: (usize, usize, usize)) -> Self {
        Self {
            bits: Array3::from_elem(dim, 1),
        }
    }

    pub fn zeros(dim: (usize, usize, usize)) -> Self {
        Self {
            bits: Array3::zeros(dim),
        }
    }

    pub fn bits(&self) -> &Array3<u8> {
        &self.bits
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.bits.dim()
    }

    pub fn observed(&self, idx: (usize, usize, usize)) -> bool {
        self.bits[idx] == 1
    }

    pub fn count_observed(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn count_missing(&self) -> usize {
        self.bits.len() - self.count_observed()
    }

    pub fn as_f64(&self) -> Array3<f64> {
        self.bits.mapv(f64::from)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            bits: self.bits.select(Axis(0), indices),
        }
    }

    pub fn slice_time(&self, start: usize, end: usize) -> Self {
        Self {
            bits: self.bits.slice(s![.., start..end, ..]).to_owned(),
        }
    }

    pub fn take_features(&self, k: usize) -> Self {
        let k = k.min(self.bits.dim().2);
        Self {
            bits: self.bits.slice(s![.., .., 0..k]).to_owned(),
        }
    }
}

/// A set paired with integer class labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeriesSet {
    pub set: SeriesSet,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSeriesSet {
    pub fn new(set: SeriesSet, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if labels.len() != set.len() {
            return Err(DataError::sizing(format!(
                "{} labels for {} samples",
                labels.len(),
                set.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            set,
            labels,
            n_classes,
        })
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            set: self.set.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_values() {
        let mut v = Array3::zeros((1, 2, 1));
        v[[0, 1, 0]] = f64::NAN;
        assert!(SeriesSet::new(v).is_err());
    }

    #[test]
    fn rejects_non_increasing_timestamps() {
        let set = SeriesSet::zeros(1, 3, 1);
        assert!(set.clone().with_timestamps(vec![0.0, 1.0, 1.0]).is_err());
        assert!(set.with_timestamps(vec![0.0, 1.0, 2.5]).is_ok());
    }

    #[test]
    fn labels_must_be_bounded() {
        let set = SeriesSet::zeros(2, 3, 1);
        assert!(LabeledSeriesSet::new(set.clone(), vec![0, 2], 2).is_err());
        assert!(LabeledSeriesSet::new(set, vec![0, 1], 2).is_ok());
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(Mask::new(Array3::from_elem((1, 1, 1), 2)).is_err());
    }
}
