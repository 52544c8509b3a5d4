//! On-disk tensor store: a directory of flat little-endian binary arrays and
//! a `manifest.json` describing shape, dtype, seed and provenance.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/values.f64     [N, T, D] f64
//! <dir>/mask.u8        [N, T, D] u8   (optional)
//! <dir>/labels.u32     [N]       u32  (optional)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::series::{Mask, SeriesSet};

pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    U8,
    U32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub file: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub arrays: BTreeMap<String, ArrayEntry>,
    pub seed: Option<u64>,
    pub provenance: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
}

/// Everything a stored dataset can hold.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSet {
    pub series: SeriesSet,
    pub mask: Option<Mask>,
    pub labels: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub provenance: serde_json::Value,
}

pub fn save_set(dir: impl AsRef<Path>, stored: &StoredSet) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (n, t, d) = stored.series.dim();
    let mut arrays = BTreeMap::new();

    let bytes: Vec<u8> = stored.series.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join("values.f64"), bytes)?;
    arrays.insert(
        "values".to_owned(),
        ArrayEntry {
            file: "values.f64".into(),
            dtype: Dtype::F64,
            shape: vec![n, t, d],
        },
    );
    if let Some(mask) = &stored.mask {
        if mask.dim() != (n, t, d) {
            return Err(DataError::sizing("mask shape differs from values"));
        }
        fs::write(dir.join("mask.u8"), mask.bits().iter().copied().collect::<Vec<u8>>())?;
        arrays.insert(
            "mask".to_owned(),
            ArrayEntry {
                file: "mask.u8".into(),
                dtype: Dtype::U8,
                shape: vec![n, t, d],
            },
        );
    }
    if let Some(labels) = &stored.labels {
        let bytes: Vec<u8> = labels
            .iter()
            .flat_map(|&l| (l as u32).to_le_bytes())
            .collect();
        fs::write(dir.join("labels.u32"), bytes)?;
        arrays.insert(
            "labels".to_owned(),
            ArrayEntry {
                file: "labels.u32".into(),
                dtype: Dtype::U32,
                shape: vec![labels.len()],
            },
        );
    }
    let manifest = Manifest {
        version: STORE_VERSION,
        arrays,
        seed: stored.seed,
        provenance: stored.provenance.clone(),
        timestamps: stored.series.timestamps().map(<[f64]>::to_vec),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_set(dir: impl AsRef<Path>) -> Result<StoredSet> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.version != STORE_VERSION {
        return Err(DataError::Ingestion {
            path: dir.to_path_buf(),
            reason: format!("unsupported store version {}", manifest.version),
        });
    }
    let entry = |name: &str| manifest.arrays.get(name);
    let values_entry = entry("values").ok_or_else(|| DataError::Ingestion {
        path: dir.to_path_buf(),
        reason: "manifest has no 'values' array".into(),
    })?;
    let dim = shape3(&values_entry.shape)?;
    let raw = read_exact(dir, values_entry, 8)?;
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut series = SeriesSet::new(Array3::from_shape_vec(dim, data).expect("checked length"))?;
    if let Some(ts) = manifest.timestamps.clone() {
        series = series.with_timestamps(ts)?;
    }
    let mask = entry("mask")
        .map(|e| {
            let raw = read_exact(dir, e, 1)?;
            Mask::new(Array3::from_shape_vec(shape3(&e.shape)?, raw).expect("checked length"))
        })
        .transpose()?;
    let labels = entry("labels")
        .map(|e| {
            let raw = read_exact(dir, e, 4)?;
            Ok::<_, DataError>(
                raw.chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
                    .collect(),
            )
        })
        .transpose()?;
    Ok(StoredSet {
        series,
        mask,
        labels,
        seed: manifest.seed,
        provenance: manifest.provenance,
    })
}

fn shape3(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match shape {
        [n, t, d] => Ok((*n, *t, *d)),
        _ => Err(DataError::sizing(format!("expected a rank-3 shape, got {shape:?}"))),
    }
}

fn read_exact(dir: &Path, entry: &ArrayEntry, width: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(dir.join(&entry.file))?;
    let expect = entry.shape.iter().product::<usize>() * width;
    if bytes.len() != expect {
        return Err(DataError::Ingestion {
            path: dir.join(&entry.file),
            reason: format!("expected {expect} bytes, found {}", bytes.len()),
        });
    }
    Ok(bytes)
}
