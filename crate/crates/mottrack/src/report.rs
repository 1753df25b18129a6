//! Result tables. The human table, CSV and JSON all render the same cells.

use mottrack_core::metrics::{aggregate, MetricsCounts, MetricsReport};
use serde::Serialize;

use crate::error::Result;

pub const COLUMNS: [&str; 11] = [
    "Sequence", "MOTA", "IDF1", "Rcll", "Prcn", "MT", "ML", "FP", "FN", "ID Sw.", "Time",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sequence: String,
    pub counts: MetricsCounts,
    /// Tracker wall time, when known.
    pub time_s: Option<f64>,
}

impl Row {
    pub fn report(&self) -> MetricsReport {
        self.counts.report()
    }

    pub fn cells(&self) -> [String; 11] {
        let r = self.report();
        [
            self.sequence.clone(),
            format!("{:.2}", r.mota),
            format!("{:.2}", r.idf1),
            format!("{:.2}", r.rcll),
            format!("{:.2}", r.prcn),
            r.mt.to_string(),
            r.ml.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.idsw.to_string(),
            self.time_s
                .map_or_else(|| "-".to_string(), |t| format!("{t:.3}")),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub title: Option<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(title: Option<String>) -> Self {
        Self {
            title,
            rows: Vec::new(),
        }
    }

    /// Appends an `OVERALL` row pooling the raw counts of all current rows.
    pub fn push_overall(&mut self) -> Result<()> {
        let counts: Vec<MetricsCounts> = self.rows.iter().map(|r| r.counts).collect();
        let (total, _) = aggregate(&counts)?;
        let time_s = self.rows.iter().map(|r| r.time_s).sum::<Option<f64>>();
        self.rows.push(Row {
            sequence: "OVERALL".into(),
            counts: total,
            time_s,
        });
        Ok(())
    }

    pub fn cells(&self) -> Vec<[String; 11]> {
        self.rows.iter().map(Row::cells).collect()
    }

    /// Space-aligned text; the sequence column is left-aligned, numbers right-aligned.
    pub fn render_human(&self) -> String {
        let cells = self.cells();
        let mut widths = COLUMNS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        if let Some(t) = &self.title {
            out.push_str(t);
            out.push('\n');
        }
        let header: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
        out.push_str(&line(&header));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for row in self.cells() {
            let quoted: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&quoted.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct JsonRow<'a> {
            cells: serde_json::Map<String, serde_json::Value>,
            metrics: MetricsReport,
            counts: &'a MetricsCounts,
        }
        let rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|r| JsonRow {
                cells: COLUMNS
                    .iter()
                    .zip(r.cells())
                    .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                    .collect(),
                metrics: r.report(),
                counts: &r.counts,
            })
            .collect();
        serde_json::json!({ "title": self.title, "columns": COLUMNS, "rows": rows })
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}
