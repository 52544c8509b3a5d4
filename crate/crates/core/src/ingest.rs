//! CSV ingestion into a single long multivariate record (`N = 1`).
//!
//! A header row is required. Empty cells are recorded as missing in the
//! accompanying mask and stored as 0.0.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use ndarray::Array3;

use crate::error::{DataError, Result};
use crate::series::{Mask, SeriesSet};

/// Channel cap applied when columns are selected automatically.
pub const MAX_CHANNELS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSelection {
    /// Exactly these columns, in this order.
    Named(Vec<String>),
    /// Every non-timestamp column in file order, keeping at most the first `MAX_CHANNELS`.
    Auto,
}

#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub series: SeriesSet,
    pub mask: Mask,
    pub columns: Vec<String>,
}

pub fn load_csv_dataset(
    path: impl AsRef<Path>,
    columns: &ColumnSelection,
    timestamp_column: Option<&str>,
) -> Result<CsvDataset> {
    let path = path.as_ref();
    let ingestion = |reason: String| DataError::Ingestion {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingestion(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ingestion(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ingestion(format!("column '{name}' not found")))
    };
    let ts_idx = timestamp_column.map(find).transpose()?;
    let names: Vec<String> = match columns {
        ColumnSelection::Named(names) => names.clone(),
        ColumnSelection::Auto => header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != ts_idx)
            .map(|(_, h)| h.clone())
            .take(MAX_CHANNELS)
            .collect(),
    };
    if names.is_empty() {
        return Err(ingestion("no value columns selected".into()));
    }
    let idx: Vec<usize> = names.iter().map(|n| find(n)).collect::<Result<_>>()?;

    let mut data = Vec::new();
    let mut bits = Vec::new();
    let mut stamps = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| ingestion(format!("row {row}: {e}")))?;
        for (&c, name) in idx.iter().zip(&names) {
            let cell = record.get(c).unwrap_or("");
            if cell.is_empty() {
                data.push(0.0);
                bits.push(0u8);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DataError::Cell {
                row,
                column: name.clone(),
                reason: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Cell {
                    row,
                    column: name.clone(),
                    reason: format!("'{cell}' is not finite"),
                });
            }
            data.push(v);
            bits.push(1u8);
        }
        if let Some(c) = ts_idx {
            let cell = record.get(c).unwrap_or("");
            let ts = parse_timestamp(cell).ok_or_else(|| DataError::Cell {
                row,
                column: header[c].clone(),
                reason: format!("'{cell}' is not an ISO-8601 or numeric timestamp"),
            })?;
            stamps.push(ts);
        }
    }
    let t = data.len() / names.len();
    if t == 0 {
        return Err(ingestion("file has no data rows".into()));
    }
    let d = names.len();
    let values = Array3::from_shape_vec((1, t, d), data).expect("row-major fill");
    let mut series = SeriesSet::new(values)?;
    if ts_idx.is_some() {
        series = series.with_timestamps(stamps)?;
    }
    let mask = Mask::new(Array3::from_shape_vec((1, t, d), bits).expect("row-major fill"))?;
    Ok(CsvDataset {
        series,
        mask,
        columns: names,
    })
}

/// Seconds since the Unix epoch. Accepts RFC 3339, naive date-times, plain
/// dates, or a bare number.
fn parse_timestamp(cell: &str) -> Option<f64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(cell) {
        return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(cell, fmt) {
            return Some(dt.and_utc().timestamp() as f64);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(cell, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp() as f64);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn named(cols: &[&str]) -> ColumnSelection {
        ColumnSelection::Named(cols.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn parses_values_in_file_order() {
        let f = write("a,b\n1,2\n3,4\n5,6\n");
        let ds = load_csv_dataset(f.path(), &named(&["a", "b"]), None).unwrap();
        assert_eq!(ds.series.dim(), (1, 3, 2));
        assert_eq!(ds.series.to_flat(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(ds.mask.count_missing(), 0);
    }

    #[test]
    fn empty_cell_is_masked() {
        let f = write("a,b\n1,2\n3,\n5,6\n");
        let ds = load_csv_dataset(f.path(), &named(&["a", "b"]), None).unwrap();
        assert_eq!(ds.mask.count_missing(), 1);
        assert!(!ds.mask.observed((0, 1, 1)));
        assert!(ds.mask.observed((0, 1, 0)));
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write("date,load\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n2020-01-04,4\n2020-01-05,oops\n");
        let err = load_csv_dataset(f.path(), &named(&["load"]), Some("date")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 5, column 'load'"), "{msg}");
    }

    #[test]
    fn missing_column_and_file_are_errors() {
        let f = write("a,b\n1,2\n");
        assert!(load_csv_dataset(f.path(), &named(&["c"]), None).is_err());
        assert!(load_csv_dataset("/nonexistent/file.csv", &named(&["a"]), None).is_err());
    }

    #[test]
    fn timestamps_are_parsed() {
        let f = write("ts,x\n2021-03-01T00:00:00Z,1\n2021-03-01T01:00:00Z,2\n");
        let ds = load_csv_dataset(f.path(), &named(&["x"]), Some("ts")).unwrap();
        let ts = ds.series.timestamps().unwrap();
        assert_eq!(ts[1] - ts[0], 3600.0);
    }

    #[test]
    fn auto_selection_caps_channels() {
        let cols: Vec<String> = (0..20).map(|i| format!("c{i}")).collect();
        let row: Vec<String> = (0..20).map(|i| i.to_string()).collect();
        let f = write(&format!("t,{}\n0,{}\n1,{}\n", cols.join(","), row.join(","), row.join(",")));
        let ds = load_csv_dataset(f.path(), &ColumnSelection::Auto, Some("t")).unwrap();
        assert_eq!(ds.series.n_features(), MAX_CHANNELS);
        assert_eq!(ds.columns[0], "c0");
        assert_eq!(ds.columns[15], "c15");
    }
}
