//! Cross-run tables with per-column ranks and a top-3 count.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tsgb_metrics::MetricKind;

use crate::config::Task;
use crate::error::{BenchError, Result, Stage};
use crate::run::RunResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub dataset: String,
    pub metric: MetricKind,
}

impl Column {
    pub fn label(&self) -> String {
        format!("{}/{}", self.dataset, self.metric.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub model: String,
    /// Mean over the runs that share this model and column.
    pub values: Vec<Option<f64>>,
    /// Competition ranks (ties share the better rank), 1 = best.
    pub ranks: Vec<Option<usize>>,
    pub top3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub task: Task,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

/// Ranks of `values` in ascending order; non-finite and missing cells get none.
pub fn column_ranks(values: &[Option<f64>]) -> Vec<Option<usize>> {
    values
        .iter()
        .map(|v| {
            let v = (*v).filter(|x| x.is_finite())?;
            Some(1 + values.iter().flatten().filter(|o| o.is_finite() && **o < v).count())
        })
        .collect()
}

pub fn aggregate_results(results: &[RunResult]) -> Result<ReportTable> {
    let first = results
        .first()
        .ok_or_else(|| BenchError::new(Stage::Report, "no results to aggregate"))?;
    let task = first.config.task;
    if let Some(other) = results.iter().find(|r| r.config.task != task) {
        return Err(BenchError::new(
            Stage::Report,
            format!("mixed tasks: {} and {}", task.name(), other.config.task.name()),
        ));
    }

    let mut columns: Vec<Column> = Vec::new();
    let mut models: Vec<String> = Vec::new();
    for r in results {
        let model = r.config.model.kind().name().to_string();
        if !models.contains(&model) {
            models.push(model);
        }
        for metric in r.report.values.keys() {
            let c = Column { dataset: r.config.dataset.name(), metric: *metric };
            if !columns.contains(&c) {
                columns.push(c);
            }
        }
    }

    let mut sums = vec![vec![(0.0, 0usize); columns.len()]; models.len()];
    for r in results {
        let i = models.iter().position(|m| m == r.config.model.kind().name()).expect("model listed");
        for (metric, value) in &r.report.values {
            let c = Column { dataset: r.config.dataset.name(), metric: *metric };
            let j = columns.iter().position(|x| *x == c).expect("column listed");
            sums[i][j].0 += value;
            sums[i][j].1 += 1;
        }
    }
    let values: Vec<Vec<Option<f64>>> = sums
        .iter()
        .map(|row| row.iter().map(|&(s, n)| (n > 0).then(|| s / n as f64)).collect())
        .collect();

    let mut ranks = vec![vec![None; columns.len()]; models.len()];
    for j in 0..columns.len() {
        let col: Vec<Option<f64>> = values.iter().map(|row| row[j]).collect();
        for (i, r) in column_ranks(&col).into_iter().enumerate() {
            ranks[i][j] = r;
        }
    }
    let rows = models
        .into_iter()
        .zip(values)
        .zip(ranks)
        .map(|((model, values), ranks)| {
            let top3 = ranks.iter().flatten().filter(|&&r| r <= 3).count();
            Row { model, values, ranks, top3 }
        })
        .collect();
    Ok(ReportTable { task, columns, rows })
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

impl ReportTable {
    /// Header, one line of directions, model rows and a top-3 count row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string()];
        header.extend(self.columns.iter().map(Column::label));
        header.push("top3_count".into());
        let _ = w.write_record(&header);
        let mut dir = vec!["direction".to_string()];
        dir.extend(self.columns.iter().map(|c| if c.metric.lower_is_better() { "lower" } else { "higher" }.to_string()));
        dir.push(String::new());
        let _ = w.write_record(&dir);
        for row in &self.rows {
            let mut rec = vec![row.model.clone()];
            rec.extend(row.values.iter().map(|v| v.map(|x| format!("{x}")).unwrap_or_default()));
            rec.push(row.top3.to_string());
            let _ = w.write_record(&rec);
        }
        let mut rec = vec!["Top3 Count".to_string()];
        rec.extend(self.columns.iter().map(|_| String::new()));
        rec.push(self.rows.iter().map(|r| format!("{}={}", r.model, r.top3)).collect::<Vec<_>>().join(";"));
        let _ = w.write_record(&rec);
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }

    /// Aligned plain-text rendering; ranks 1 to 3 are suffixed `[n]`.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["model".to_string()];
        header.extend(self.columns.iter().map(|c| format!("{} (lower)", c.label())));
        cells.push(header);
        for row in &self.rows {
            let mut line = vec![row.model.clone()];
            for (v, r) in row.values.iter().zip(&row.ranks) {
                let mark = match r {
                    Some(k) if *k <= 3 => format!(" [{k}]"),
                    _ => String::new(),
                };
                line.push(format!("{}{mark}", fmt_value(*v)));
            }
            cells.push(line);
        }
        let mut count = vec!["Top3 Count".to_string()];
        count.extend(self.columns.iter().map(|_| String::new()));
        cells.push(count);

        let width: Vec<usize> = (0..=self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("task: {}\n", self.task.name());
        for (i, line) in cells.iter().enumerate() {
            let last = i + 1 == cells.len();
            let body: Vec<String> = line.iter().enumerate().map(|(j, c)| format!("{c:<w$}", w = width[j])).collect();
            let mut text = body.join("  ");
            if last {
                let counts: Vec<String> = self.rows.iter().map(|r| format!("{}={}", r.model, r.top3)).collect();
                text = format!("{:<w$}  {}", line[0], counts.join("  "), w = width[0]);
            }
            let _ = writeln!(out, "{}", text.trim_end());
        }
        out
    }
}
