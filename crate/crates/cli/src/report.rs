//! JSON report documents. Field order here is the order in the files.
//!
//! State numbers in reports and CSV files are 1-based; arrays are ordered by
//! state in ascending-σ order.

use ehmm_core::em::Diagnostics;
use ehmm_core::eval::{CriteriaRow, SelectionFailure};
use ehmm_core::{ChainParams, EhmmParams, ExpectileLevel, FitConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything needed to re-run a command. Wall-clock timestamps are left out
/// so that a re-run reproduces the report exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    /// Resolved estimation settings.
    pub config: Option<FitConfig>,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(what: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Data(format!("{what}: every row needs {ncols} entries")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Model parameters with row-per-state matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub tau: ExpectileLevel,
    pub coefficient_names: Vec<String>,
    pub beta: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl ParamsDoc {
    pub fn new(p: &EhmmParams, names: Vec<String>) -> Self {
        ParamsDoc {
            tau: p.tau,
            coefficient_names: names,
            beta: rows(&p.beta),
            sigma: p.sigma.clone(),
            initial: p.chain.initial.clone(),
            transition: rows(&p.chain.transition),
        }
    }

    pub fn to_params(&self) -> Result<EhmmParams, CliError> {
        let k = self.sigma.len();
        let p = self.coefficient_names.len();
        let chain = ChainParams::new(
            self.initial.clone(),
            matrix("params.transition", &self.transition, k)?,
        )?;
        let params = EhmmParams {
            beta: matrix("params.beta", &self.beta, p)?,
            sigma: self.sigma.clone(),
            chain,
            tau: self.tau,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroppedCount {
    pub series: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSummary {
    pub response: String,
    pub covariates: Vec<String>,
    pub returns_input: bool,
    pub n_obs: usize,
    pub first_label: String,
    pub last_label: String,
    pub dropped: Vec<DroppedCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSummary {
    pub n_states: usize,
    pub tau: ExpectileLevel,
    pub loglik: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub start_index: usize,
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub icl: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub manifest: RunManifest,
    pub data: DataSummary,
    pub model: ModelSummary,
    pub params: ParamsDoc,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeReport {
    pub manifest: RunManifest,
    pub n_obs: usize,
    pub n_states: usize,
    pub loglik: f64,
    /// Observations assigned to each state.
    pub state_counts: Vec<usize>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub state: usize,
    pub parameter: String,
    pub estimate: f64,
    pub se: f64,
    /// `|estimate| > 2·se`
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardErrorsDoc {
    pub beta: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl StandardErrorsDoc {
    pub fn new(se: &ehmm_core::eval::ParamErrors) -> Self {
        StandardErrorsDoc {
            beta: rows(&se.beta),
            sigma: se.sigma.clone(),
            initial: se.initial.clone(),
            transition: rows(&se.transition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapDoc {
    pub manifest: RunManifest,
    pub replicates: usize,
    pub n_converged: usize,
    pub alignment: ehmm_core::eval::Alignment,
    pub coefficients: Vec<CoefficientDoc>,
    pub standard_errors: StandardErrorsDoc,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestStates {
    pub tau: ExpectileLevel,
    pub aic: Option<usize>,
    pub bic: Option<usize>,
    pub icl: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectDoc {
    pub manifest: RunManifest,
    pub rows: Vec<CriteriaRow>,
    pub failures: Vec<SelectionFailure>,
    pub best: Vec<BestStates>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesStats {
    pub series: String,
    pub stats: ehmm_core::data::DescriptiveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescribeDoc {
    pub manifest: RunManifest,
    pub series: Vec<SeriesStats>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub error: ehmm_core::sim::ErrorLaw,
    pub n_obs: usize,
    pub beta: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl ScenarioDoc {
    pub fn new(name: &str, spec: &ehmm_core::sim::DgpSpec) -> Self {
        ScenarioDoc {
            name: name.to_string(),
            error: spec.error.clone(),
            n_obs: spec.n_obs,
            beta: rows(&spec.beta),
            initial: spec.chain.initial.clone(),
            transition: rows(&spec.chain.transition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateDoc {
    pub manifest: RunManifest,
    pub scenario: ScenarioDoc,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCellDoc {
    pub tau: ExpectileLevel,
    pub state: usize,
    pub parameter: String,
    pub truth: f64,
    pub bias: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McLevelDoc {
    pub tau: ExpectileLevel,
    pub n_fitted: usize,
    pub n_failed: usize,
    pub n_unconverged: usize,
    pub median_ari: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McStudyDoc {
    pub manifest: RunManifest,
    pub scenario: ScenarioDoc,
    pub replications: usize,
    pub cells: Vec<McCellDoc>,
    pub levels: Vec<McLevelDoc>,
    pub tables: Vec<String>,
}
