//! CSV emission and parsing for result records.
//!
//! Fixed header, one row per record, 9-significant-digit decimals, `\n`
//! newlines, empty empirical field when no Monte-Carlo trials ran. Records
//! are written in canonical (scheme, sweep, value, placement) order, so the
//! output is stable under input reordering.

use std::path::Path;

use cfran_core::optimizer::Scheme;

use crate::error::{HarnessError, Result};
use crate::ResultRecord;

pub const CSV_HEADER: &str =
    "scheme,sweep_name,sweep_value,placement,seed,sum_mse_analytic,sum_mse_empirical,iterations,wall_time_ms";

fn sig9(x: f64) -> String {
    format!("{:.8e}", x)
}

fn canonical_order(a: &ResultRecord, b: &ResultRecord) -> std::cmp::Ordering {
    a.scheme
        .name()
        .cmp(b.scheme.name())
        .then(a.sweep_name.cmp(&b.sweep_name))
        .then(a.sweep_value.total_cmp(&b.sweep_value))
        .then(a.placement.cmp(&b.placement))
}

/// Render records as CSV text in canonical order.
pub fn render_csv(records: &[ResultRecord]) -> String {
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let empirical = r.sum_mse_empirical.map(sig9).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.sweep_name,
            sig9(r.sweep_value),
            r.placement,
            r.seed,
            sig9(r.sum_mse_analytic),
            empirical,
            r.iterations,
            sig9(r.wall_time_ms),
        ));
    }
    out
}

/// Write records to a CSV file.
pub fn emit_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(records))?;
    Ok(())
}

/// One parsed CSV row; `per_ue_mse` is not serialized, so this is a
/// flat mirror of the file columns rather than a full [`ResultRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub placement: usize,
    pub seed: u64,
    pub sum_mse_analytic: f64,
    pub sum_mse_empirical: Option<f64>,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

/// Parse CSV text produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Config(format!(
                "bad CSV header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(HarnessError::Config(format!(
                "row {}: expected 9 fields, found {}",
                idx + 1,
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("row {}: bad {what} '{s}'", idx + 1)))
        };
        rows.push(CsvRow {
            scheme: fields[0]
                .parse::<Scheme>()
                .map_err(|e| HarnessError::Config(format!("row {}: {e}", idx + 1)))?,
            sweep_name: fields[1].to_string(),
            sweep_value: parse_f64(fields[2], "sweep_value")?,
            placement: fields[3]
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("row {}: bad placement", idx + 1)))?,
            seed: fields[4]
                .parse::<u64>()
                .map_err(|_| HarnessError::Config(format!("row {}: bad seed", idx + 1)))?,
            sum_mse_analytic: parse_f64(fields[5], "sum_mse_analytic")?,
            sum_mse_empirical: if fields[6].is_empty() {
                None
            } else {
                Some(parse_f64(fields[6], "sum_mse_empirical")?)
            },
            iterations: fields[7]
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("row {}: bad iterations", idx + 1)))?,
            wall_time_ms: parse_f64(fields[8], "wall_time_ms")?,
        });
    }
    Ok(rows)
}
