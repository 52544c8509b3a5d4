//! Conditioning inputs and their encoders.

use std::fmt;

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};
use tsgb_core::{Mask, Scaler, SeriesSet};
use tsgb_nn::{array3_to_tensor, Activation, Embedding, Mlp, ParamStore};

use crate::config::Geometry;
use crate::error::{ModelError, Result};

/// Which kind of condition a model was built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConditionSpec {
    None,
    Class { n_classes: usize },
    /// A preceding window of `length` steps with the same features.
    History { length: usize },
    /// Partially observed values plus their mask, same geometry as the output.
    Mask,
}

impl ConditionSpec {
    pub fn mode(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Class { .. } => "class",
            Self::History { .. } => "history",
            Self::Mask => "mask",
        }
    }

    pub fn is_conditional(&self) -> bool {
        !matches!(self, Self::None)
    }
}

impl fmt::Display for ConditionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Class { n_classes } => write!(f, "class({n_classes})"),
            Self::History { length } => write!(f, "history({length})"),
            other => f.write_str(other.mode()),
        }
    }
}

/// A batch of conditions in data units, one row per requested output series.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// Unconditional request for `n` rows.
    None(usize),
    Class(Vec<usize>),
    History(SeriesSet),
    Masked { observed: SeriesSet, mask: Mask },
}

impl Condition {
    pub fn len(&self) -> usize {
        match self {
            Self::None(n) => *n,
            Self::Class(l) => l.len(),
            Self::History(h) => h.len(),
            Self::Masked { observed, .. } => observed.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Self::None(_) => "none",
            Self::Class(_) => "class",
            Self::History(_) => "history",
            Self::Masked { .. } => "mask",
        }
    }

    /// Checks the condition against a model's spec and geometry.
    pub fn check(&self, spec: &ConditionSpec, geometry: Geometry) -> Result<()> {
        let mismatch = || ModelError::ConditionMismatch {
            expected: spec.to_string(),
            got: self.mode().to_string(),
        };
        match (spec, self) {
            (ConditionSpec::None, Self::None(_)) => Ok(()),
            (ConditionSpec::Class { n_classes }, Self::Class(labels)) => {
                if let Some(bad) = labels.iter().find(|&&l| l >= *n_classes) {
                    return Err(ModelError::config(format!("label {bad} outside 0..{n_classes}")));
                }
                Ok(())
            }
            (ConditionSpec::History { length }, Self::History(h)) => {
                if h.len() > 0 && (h.len_t() != *length || h.n_features() != geometry.features) {
                    return Err(ModelError::config(format!(
                        "history geometry [{}, {}], expected [{length}, {}]",
                        h.len_t(),
                        h.n_features(),
                        geometry.features
                    )));
                }
                Ok(())
            }
            (ConditionSpec::Mask, Self::Masked { observed, mask }) => {
                if observed.dim() != mask.dim() {
                    return Err(ModelError::config("observed values and mask differ in shape"));
                }
                if observed.len() > 0
                    && (observed.len_t() != geometry.length || observed.n_features() != geometry.features)
                {
                    return Err(ModelError::config("masked condition geometry differs from the model's"));
                }
                Ok(())
            }
            _ => Err(mismatch()),
        }
    }

    /// Row subset, preserving order.
    pub fn select(&self, rows: &[usize]) -> Self {
        match self {
            Self::None(_) => Self::None(rows.len()),
            Self::Class(l) => Self::Class(rows.iter().map(|&i| l[i]).collect()),
            Self::History(h) => Self::History(h.select(rows)),
            Self::Masked { observed, mask } => Self::Masked {
                observed: observed.select(rows),
                mask: mask.select(rows),
            },
        }
    }

    /// Tensor form in normalized units.
    pub fn to_batch(&self, scaler: &Scaler, dtype: DType, device: &Device) -> Result<CondBatch> {
        Ok(match self {
            Self::None(n) => CondBatch::None(*n),
            Self::Class(labels) => CondBatch::Class(class_ids(labels, device)?),
            Self::History(h) => CondBatch::History(array3_to_tensor(&scaler.apply_array(h.values())?, dtype, device)?),
            Self::Masked { observed, mask } => {
                let m = mask.as_f64();
                let x = scaler.apply_array(observed.values())? * &m;
                CondBatch::Masked {
                    observed: array3_to_tensor(&x, dtype, device)?,
                    mask: array3_to_tensor(&m, dtype, device)?,
                }
            }
        })
    }
}

pub(crate) fn class_ids(labels: &[usize], device: &Device) -> Result<Tensor> {
    let ids: Vec<u32> = labels.iter().map(|&l| l as u32).collect();
    Ok(Tensor::from_vec(ids, labels.len(), device)?)
}

/// Normalized tensor form of a condition batch.
#[derive(Debug, Clone)]
pub enum CondBatch {
    None(usize),
    /// u32 ids `[B]`.
    Class(Tensor),
    /// `[B, L, D]`.
    History(Tensor),
    /// Observed values (zero where missing) and mask, both `[B, T, D]`.
    Masked { observed: Tensor, mask: Tensor },
}

impl CondBatch {
    pub fn len(&self) -> Result<usize> {
        Ok(match self {
            Self::None(n) => *n,
            Self::Class(t) | Self::History(t) => t.dim(0)?,
            Self::Masked { observed, .. } => observed.dim(0)?,
        })
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }

    pub fn narrow(&self, start: usize, len: usize) -> Result<Self> {
        Ok(match self {
            Self::None(_) => Self::None(len),
            Self::Class(t) => Self::Class(t.narrow(0, start, len)?),
            Self::History(t) => Self::History(t.narrow(0, start, len)?),
            Self::Masked { observed, mask } => Self::Masked {
                observed: observed.narrow(0, start, len)?,
                mask: mask.narrow(0, start, len)?,
            },
        })
    }

    /// Rows gathered by index (u32 tensor).
    pub fn index_select(&self, ids: &Tensor) -> Result<Self> {
        Ok(match self {
            Self::None(_) => Self::None(ids.dim(0)?),
            Self::Class(t) => Self::Class(t.index_select(ids, 0)?),
            Self::History(t) => Self::History(t.index_select(ids, 0)?),
            Self::Masked { observed, mask } => Self::Masked {
                observed: observed.index_select(ids, 0)?,
                mask: mask.index_select(ids, 0)?,
            },
        })
    }

    /// The batch repeated `times` along rows: row `k·B + b` is row `b`.
    pub fn repeat(&self, times: usize) -> Result<Self> {
        let b = self.len()?;
        let ids: Vec<u32> = (0..times).flat_map(|_| 0..b as u32).collect();
        let device = match self {
            Self::None(_) => return Ok(Self::None(b * times)),
            Self::Class(t) | Self::History(t) => t.device().clone(),
            Self::Masked { observed, .. } => observed.device().clone(),
        };
        self.index_select(&Tensor::from_vec(ids, b * times, &device)?)
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Self::None(_) => "none",
            Self::Class(_) => "class",
            Self::History(_) => "history",
            Self::Masked { .. } => "mask",
        }
    }
}

enum EncoderKind {
    None,
    Class(Embedding),
    Dense(Mlp),
}

/// Maps a condition batch to a fixed-width embedding `[B, width]`.
pub struct ConditionEncoder {
    kind: EncoderKind,
    spec: ConditionSpec,
    width: usize,
}

impl ConditionEncoder {
    pub const HIDDEN: usize = 128;

    pub fn new(
        store: &mut ParamStore,
        name: &str,
        spec: &ConditionSpec,
        geometry: Geometry,
        width: usize,
    ) -> Result<Self> {
        let kind = match spec {
            ConditionSpec::None => EncoderKind::None,
            ConditionSpec::Class { n_classes } => {
                if *n_classes == 0 {
                    return Err(ModelError::config("class condition needs at least one class"));
                }
                EncoderKind::Class(Embedding::new(store, name, *n_classes, width)?)
            }
            ConditionSpec::History { length } => {
                if *length == 0 {
                    return Err(ModelError::config("history length must be positive"));
                }
                let input = length * geometry.features;
                EncoderKind::Dense(Mlp::new(store, name, &[input, Self::HIDDEN, width], Activation::Relu)?)
            }
            ConditionSpec::Mask => {
                let input = 2 * geometry.flat();
                EncoderKind::Dense(Mlp::new(store, name, &[input, Self::HIDDEN, width], Activation::Relu)?)
            }
        };
        Ok(Self {
            kind,
            spec: spec.clone(),
            width,
        })
    }

    /// Embedding width; zero for unconditional encoders.
    pub fn width(&self) -> usize {
        match self.kind {
            EncoderKind::None => 0,
            _ => self.width,
        }
    }

    pub fn spec(&self) -> &ConditionSpec {
        &self.spec
    }

    pub fn check(&self, cond: &CondBatch) -> Result<()> {
        let ok = matches!(
            (&self.spec, cond),
            (ConditionSpec::None, CondBatch::None(_))
                | (ConditionSpec::Class { .. }, CondBatch::Class(_))
                | (ConditionSpec::History { .. }, CondBatch::History(_))
                | (ConditionSpec::Mask, CondBatch::Masked { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(ModelError::ConditionMismatch {
                expected: self.spec.to_string(),
                got: cond.mode().to_string(),
            })
        }
    }

    /// `None` for unconditional models.
    pub fn encode(&self, cond: &CondBatch) -> Result<Option<Tensor>> {
        self.check(cond)?;
        Ok(match (&self.kind, cond) {
            (EncoderKind::None, _) => None,
            (EncoderKind::Class(e), CondBatch::Class(ids)) => Some(e.forward(ids)?),
            (EncoderKind::Dense(m), CondBatch::History(h)) => Some(m.forward(&h.flatten_from(1)?)?),
            (EncoderKind::Dense(m), CondBatch::Masked { observed, mask }) => {
                let input = Tensor::cat(&[observed.flatten_from(1)?, mask.flatten_from(1)?], 1)?;
                Some(m.forward(&input)?)
            }
            _ => unreachable!("checked above"),
        })
    }
}

/// Concatenates an optional condition embedding to `[B, k]` inputs.
pub(crate) fn concat_condition(x: &Tensor, emb: Option<&Tensor>) -> Result<Tensor> {
    Ok(match emb {
        Some(e) => Tensor::cat(&[x, e], 1)?,
        None => x.clone(),
    })
}
