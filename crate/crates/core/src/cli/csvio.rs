//! Exposure CSV ingestion.
//!
//! Expected layout: a header row naming the exposure components, one row of
//! finite decimals per individual, an optional `weight` column, `#` comment
//! lines and blank lines ignored. Parsing is locale-independent (decimal
//! point only).

use super::CliError;
use crate::estimators::ExposureSample;
use std::path::Path;

pub fn read_exposure_csv(path: &Path) -> Result<ExposureSample, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let filtered: String = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(filtered.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("bad CSV header: {e}")))?
        .clone();
    let weight_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("weight"));
    let value_cols: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != weight_col)
        .collect();
    if value_cols.is_empty() {
        return Err(CliError::Usage("CSV has no exposure columns".into()));
    }

    let mut data = Vec::new();
    let mut weights = Vec::new();
    let mut n = 0usize;
    for (rowno, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Usage(format!("CSV row {}: {e}", rowno + 2)))?;
        if record.len() != headers.len() {
            return Err(CliError::Usage(format!(
                "CSV row {} has {} fields, expected {}",
                rowno + 2,
                record.len(),
                headers.len()
            )));
        }
        for &c in &value_cols {
            let cell = &record[c];
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Usage(format!(
                    "CSV row {}, column '{}': '{}' is not a number",
                    rowno + 2,
                    &headers[c],
                    cell
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Usage(format!(
                    "CSV row {} contains a non-finite value",
                    rowno + 2
                )));
            }
            data.push(v);
        }
        if let Some(wc) = weight_col {
            let w: f64 = record[wc].parse().map_err(|_| {
                CliError::Usage(format!("CSV row {}: bad weight '{}'", rowno + 2, &record[wc]))
            })?;
            weights.push(w);
        }
        n += 1;
    }

    let sample = ExposureSample::from_flat(data, n, value_cols.len())
        .map_err(CliError::Numeric)?;
    if weight_col.is_some() {
        sample.with_weights(weights).map_err(CliError::Numeric)
    } else {
        Ok(sample)
    }
}
