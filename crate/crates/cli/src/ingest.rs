//! CSV ingestion: turn a price or return file into a [`ReturnSeries`].
//!
//! Lines starting with `#` are skipped, so artifacts written by the
//! `simulate` command (whose first line is the `# meta:` header) feed
//! straight back into `fit` and friends.

use std::path::Path;

use latvol::ReturnSeries;

use crate::{CliError, IngestConfig, IngestMode};

/// Load a series from `path`. Returns the series and the number of rows
/// skipped because the value (or label) field was empty.
pub fn load(path: &Path, config: &IngestConfig) -> Result<(ReturnSeries, usize), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(CliError::Ingest {
            row: 0,
            message: "input has no header row".to_string(),
        });
    }
    let value_idx = match &config.column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Ingest {
                row: 0,
                message: format!("no column named {name:?} in the header"),
            }
        })?,
        None => headers.len() - 1,
    };
    let label_idx = match &config.date_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Ingest {
                row: 0,
                message: format!("no column named {name:?} in the header"),
            }
        })?),
        None => None,
    };

    let mut values = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut skipped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1; // 1-based data row, headers excluded
        let record = record?;
        let raw = record.get(value_idx).ok_or_else(|| CliError::Ingest {
            row,
            message: format!("row has no field {value_idx}"),
        })?;
        let label = match label_idx {
            Some(idx) => Some(record.get(idx).ok_or_else(|| CliError::Ingest {
                row,
                message: format!("row has no field {idx}"),
            })?),
            None => None,
        };
        if raw.is_empty() || label.is_some_and(str::is_empty) {
            skipped += 1;
            continue;
        }
        let value: f64 = raw.parse().map_err(|_| CliError::Ingest {
            row,
            message: format!("could not parse {raw:?} as a number"),
        })?;
        if !value.is_finite() {
            return Err(CliError::Ingest {
                row,
                message: format!("non-finite value {value}"),
            });
        }
        if config.mode == IngestMode::Prices && value <= 0.0 {
            return Err(CliError::Ingest {
                row,
                message: format!("price {value} is not positive"),
            });
        }
        values.push(value);
        if let (Some(labels), Some(label)) = (&mut labels, label) {
            labels.push(label.to_string());
        }
    }

    let (returns, labels) = match config.mode {
        IngestMode::Returns => (values, labels),
        IngestMode::Prices => {
            if values.len() < 2 {
                return Err(CliError::Ingest {
                    row: values.len(),
                    message: format!(
                        "prices mode needs at least 2 usable rows, got {}",
                        values.len()
                    ),
                });
            }
            let returns = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
            // a return spans two prices; label it with the later one
            (returns, labels.map(|l| l[1..].to_vec()))
        }
    };

    let series = match labels {
        Some(labels) => ReturnSeries::with_labels(returns, labels)?,
        None => ReturnSeries::new(returns)?,
    };
    Ok((series, skipped))
}
