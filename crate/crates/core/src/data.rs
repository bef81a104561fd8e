//! Price series, log returns, calendar alignment across assets and summary
//! statistics.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::em::TimeSeriesDataset;
use crate::error::{Error, Result};

/// Daily closing prices of one asset with strictly increasing dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub name: String,
    pub points: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(name: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let s = PriceSeries {
            name: name.into(),
            points,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &(d, p)) in self.points.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Data(format!(
                    "{}: price on {d} must be positive, got {p}",
                    self.name
                )));
            }
            if i > 0 && self.points[i - 1].0 >= d {
                return Err(Error::Data(format!(
                    "{}: dates must be strictly increasing ({} then {d})",
                    self.name,
                    self.points[i - 1].0
                )));
            }
        }
        Ok(())
    }
}

/// `100·ln(P_t / P_{t-1})` stamped with date `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub name: String,
    pub points: Vec<(NaiveDate, f64)>,
}

impl ReturnSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

pub fn to_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    series.validate()?;
    if series.points.len() < 2 {
        return Err(Error::Data(format!(
            "{}: need at least two prices for a return",
            series.name
        )));
    }
    let points = series
        .points
        .windows(2)
        .map(|w| (w[1].0, 100.0 * (w[1].1 / w[0].1).ln()))
        .collect();
    Ok(ReturnSeries {
        name: series.name.clone(),
        points,
    })
}

/// Dates present in each series' returns but absent from the common set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub dropped: Vec<(String, usize)>,
    pub n_obs: usize,
}

/// Returns per series, then dates intersected across all series, then the
/// design assembled with an intercept column. A missing day in one asset
/// removes that date; no return spans a gap.
pub fn align_and_assemble(
    response: &PriceSeries,
    covariates: &[PriceSeries],
) -> Result<(TimeSeriesDataset, AlignmentReport)> {
    if covariates.is_empty() {
        return Err(Error::Data("need at least one covariate series".into()));
    }
    let all: Vec<ReturnSeries> = std::iter::once(response)
        .chain(covariates)
        .map(to_returns)
        .collect::<Result<_>>()?;
    let maps: Vec<BTreeMap<NaiveDate, f64>> = all
        .iter()
        .map(|r| r.points.iter().copied().collect())
        .collect();
    let mut common: BTreeSet<NaiveDate> = maps[0].keys().copied().collect();
    for m in &maps[1..] {
        common.retain(|d| m.contains_key(d));
    }
    if common.is_empty() {
        return Err(Error::Data("series share no return dates".into()));
    }
    let n = common.len();
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let y: Vec<f64> = dates.iter().map(|d| maps[0][d]).collect();
    let cov = DMatrix::from_fn(n, covariates.len(), |t, j| maps[j + 1][&dates[t]]);
    let labels = dates.iter().map(|d| d.to_string()).collect();
    let report = AlignmentReport {
        dropped: all
            .iter()
            .map(|r| (r.name.clone(), r.points.len() - n))
            .collect(),
        n_obs: n,
    };
    Ok((TimeSeriesDataset::with_intercept(y, &cov, Some(labels))?, report))
}

/// Summary row. Skewness is `m3/m2^{3/2}` and kurtosis `m4/m2²` (not excess),
/// both from population central moments; `None` when the series is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub std: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats> {
    if values.len() < 4 {
        return Err(Error::Data(format!(
            "descriptive statistics need at least 4 values, got {}",
            values.len()
        )));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "series",
            index,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let moment = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let shape = m2 > 0.0 && m2 > f64::EPSILON * mean * mean;
    Ok(DescriptiveStats {
        n: values.len(),
        min,
        mean,
        max,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness: shape.then(|| m3 / m2.powf(1.5)),
        kurtosis: shape.then(|| m4 / (m2 * m2)),
    })
}
