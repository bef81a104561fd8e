//! Reading wide CSV files, assembling the regression dataset and loading
//! configuration files.

use std::path::Path;

use chrono::NaiveDate;
use ehmm_core::data::{align_and_assemble, to_returns, PriceSeries};
use ehmm_core::{FitConfig, TimeSeriesDataset};
use nalgebra::DMatrix;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Raw contents of a wide CSV: row labels and one column of optional values
/// per header entry after the first.
#[derive(Debug, Clone)]
pub struct WideTable {
    pub names: Vec<String>,
    pub labels: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
}

impl WideTable {
    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| {
            CliError::Data(format!(
                "column '{name}' not found (available: {})",
                self.names.join(", ")
            ))
        })
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "null" | ".")
}

pub fn parse_wide(bytes: &[u8], source: &str) -> Result<WideTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{source}: bad header: {e}")))?
        .clone();
    if header.len() < 2 {
        return Err(CliError::Data(format!(
            "{source}: need a label column and at least one data column"
        )));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() {
            return Err(CliError::Data(format!("{source}: column {} has an empty name", i + 2)));
        }
        if names[..i].contains(n) {
            return Err(CliError::Data(format!("{source}: duplicate column '{n}'")));
        }
    }
    let mut labels = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| CliError::Data(format!("{source}: line {line}: {e}")))?;
        labels.push(record[0].to_string());
        for (j, name) in names.iter().enumerate() {
            let cell = &record[j + 1];
            let value = if is_missing(cell) {
                None
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    CliError::Data(format!(
                        "{source}: line {line}, column '{name}': '{cell}' is not a number"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "{source}: line {line}, column '{name}': value must be finite"
                    )));
                }
                Some(v)
            };
            columns[j].push(value);
        }
    }
    if labels.is_empty() {
        return Err(CliError::Data(format!("{source}: no data rows")));
    }
    Ok(WideTable {
        names,
        labels,
        columns,
    })
}

/// The regression dataset plus what is needed to describe it.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: TimeSeriesDataset,
    pub response: String,
    pub covariates: Vec<String>,
    /// Observations each selected series lost to alignment.
    pub dropped: Vec<(String, usize)>,
    pub digest: String,
}

fn parse_dates(table: &WideTable, source: &str) -> Result<Vec<NaiveDate>, CliError> {
    table
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            NaiveDate::parse_from_str(l, "%Y-%m-%d").map_err(|_| {
                CliError::Data(format!(
                    "{source}: line {}: '{l}' is not an ISO-8601 date (YYYY-MM-DD)",
                    i + 2
                ))
            })
        })
        .collect()
}

/// Price series of one column, skipping missing cells.
pub fn price_series(
    table: &WideTable,
    dates: &[NaiveDate],
    column: usize,
) -> Result<PriceSeries, CliError> {
    let name = &table.names[column];
    let points = dates
        .iter()
        .zip(&table.columns[column])
        .filter_map(|(d, v)| v.map(|v| (*d, v)))
        .collect();
    PriceSeries::new(name.clone(), points).map_err(|e| CliError::Data(format!("column '{name}': {e}")))
}

pub fn load_dataset(
    path: &Path,
    response: &str,
    covariates: &[String],
    returns: bool,
) -> Result<LoadedData, CliError> {
    let bytes = read_bytes(path)?;
    let source = path.display().to_string();
    let table = parse_wide(&bytes, &source)?;
    let ri = table.column(response)?;
    let covariates: Vec<String> = if covariates.is_empty() {
        table.names.iter().filter(|n| *n != response).cloned().collect()
    } else {
        covariates.to_vec()
    };
    if covariates.is_empty() {
        return Err(CliError::Usage("need at least one covariate column".into()));
    }
    if covariates.iter().any(|c| c == response) {
        return Err(CliError::Usage(format!("'{response}' is both response and covariate")));
    }
    let ci: Vec<usize> = covariates
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<_, _>>()?;

    let (dataset, dropped) = if returns {
        let mut seen = std::collections::HashSet::new();
        if let Some(l) = table.labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(CliError::Data(format!("{source}: duplicate row label '{l}'")));
        }
        let cols: Vec<usize> = std::iter::once(ri).chain(ci.iter().copied()).collect();
        let keep: Vec<usize> = (0..table.labels.len())
            .filter(|&t| cols.iter().all(|&c| table.columns[c][t].is_some()))
            .collect();
        if keep.is_empty() {
            return Err(CliError::Data(format!("{source}: no row has all selected columns")));
        }
        let y = keep.iter().map(|&t| table.columns[ri][t].unwrap_or_default()).collect();
        let cov = DMatrix::from_fn(keep.len(), ci.len(), |t, j| {
            table.columns[ci[j]][keep[t]].unwrap_or_default()
        });
        let labels = keep.iter().map(|&t| table.labels[t].clone()).collect();
        let dropped = cols
            .iter()
            .map(|&c| {
                let present = table.columns[c].iter().filter(|v| v.is_some()).count();
                (table.names[c].clone(), present - keep.len())
            })
            .collect();
        (TimeSeriesDataset::with_intercept(y, &cov, Some(labels))?, dropped)
    } else {
        let dates = parse_dates(&table, &source)?;
        let resp = price_series(&table, &dates, ri)?;
        let covs: Vec<PriceSeries> = ci
            .iter()
            .map(|&c| price_series(&table, &dates, c))
            .collect::<Result<_, _>>()?;
        let (dataset, report) = align_and_assemble(&resp, &covs)?;
        (dataset, report.dropped)
    };
    if dataset.len() <= dataset.n_regressors() {
        return Err(CliError::Data(format!(
            "{source}: only {} complete observations for {} regressors",
            dataset.len(),
            dataset.n_regressors()
        )));
    }
    Ok(LoadedData {
        dataset,
        response: response.to_string(),
        covariates,
        dropped,
        digest: sha256_hex(&bytes),
    })
}

/// Return series of every column, for summary statistics.
pub fn load_all_returns(path: &Path, returns: bool) -> Result<(Vec<(String, Vec<f64>)>, String), CliError> {
    let bytes = read_bytes(path)?;
    let source = path.display().to_string();
    let table = parse_wide(&bytes, &source)?;
    let series = if returns {
        table
            .names
            .iter()
            .zip(&table.columns)
            .map(|(n, c)| (n.clone(), c.iter().flatten().copied().collect()))
            .collect()
    } else {
        let dates = parse_dates(&table, &source)?;
        (0..table.names.len())
            .map(|c| {
                let r = to_returns(&price_series(&table, &dates, c)?)?;
                Ok((table.names[c].clone(), r.values()))
            })
            .collect::<Result<_, CliError>>()?
    };
    Ok((series, sha256_hex(&bytes)))
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub fit: Option<FitConfig>,
}

pub fn load_config(path: &Path) -> Result<(ConfigFile, String), CliError> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))?;
    let cfg: ConfigFile = toml::from_str(text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((cfg, sha256_hex(&bytes)))
}
