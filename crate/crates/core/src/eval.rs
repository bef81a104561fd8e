//! Post-fit analytics: posterior decoding, information criteria, the adjusted
//! Rand index and parametric-bootstrap standard errors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::an::{an_sample, AnParams, ExpectileLevel};
use crate::chain::Posteriors;
use crate::em::{fit, fit_with_warm_start, EhmmParams, FitConfig, FitResult, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

/// Per-time argmax of the smoothed probabilities; ties go to the lower state.
pub fn decode(posteriors: &Posteriors) -> Vec<usize> {
    let g = &posteriors.gamma;
    (0..g.nrows())
        .map(|t| {
            let mut best = 0;
            for k in 1..g.ncols() {
                if g[(t, k)] > g[(t, best)] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Free parameters of a K-state model with P regressors: coefficients,
/// scales, initial law and transition rows.
pub fn n_params(n_states: usize, n_regressors: usize) -> usize {
    let k = n_states;
    k * n_regressors + k + (k - 1) + k * (k - 1)
}

/// `-Σ_t Σ_k γ_t(k) ln γ_t(k)`, with `0 ln 0 = 0`.
pub fn posterior_entropy(posteriors: &Posteriors) -> f64 {
    -posteriors
        .gamma
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| g * g.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRow {
    pub n_states: usize,
    pub tau: ExpectileLevel,
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    pub icl: f64,
    pub entropy: f64,
}

/// AIC, BIC and the entropy form of ICL (`BIC + 2H`) for a fitted model.
pub fn information_criteria(fit: &FitResult, n_obs: usize) -> CriteriaRow {
    let p = n_params(fit.n_states(), fit.params.n_regressors());
    let entropy = posterior_entropy(&fit.posteriors);
    let aic = -2.0 * fit.loglik + 2.0 * p as f64;
    let bic = -2.0 * fit.loglik + p as f64 * (n_obs as f64).ln();
    CriteriaRow {
        n_states: fit.n_states(),
        tau: fit.params.tau,
        loglik: fit.loglik,
        n_params: p,
        aic,
        bic,
        icl: bic + 2.0 * entropy,
        entropy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    Icl,
}

impl CriteriaRow {
    pub fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
            Criterion::Icl => self.icl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFailure {
    pub n_states: usize,
    pub tau: ExpectileLevel,
    pub reason: String,
}

/// Criteria over a grid of state counts and expectile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub rows: Vec<CriteriaRow>,
    pub failures: Vec<SelectionFailure>,
}

impl CriteriaReport {
    /// State count minimising the criterion at level `tau`.
    pub fn best(&self, criterion: Criterion, tau: ExpectileLevel) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| r.tau == tau)
            .min_by(|a, b| a.value(criterion).total_cmp(&b.value(criterion)))
            .map(|r| r.n_states)
    }
}

/// Fit every `(K, τ)` on the grid with the base configuration and tabulate
/// the criteria. Fits that fail are listed instead of aborting the sweep.
pub fn select_states(
    data: &TimeSeriesDataset,
    states: std::ops::RangeInclusive<usize>,
    taus: &[ExpectileLevel],
    base: &FitConfig,
) -> Result<CriteriaReport> {
    if states.is_empty() || *states.start() == 0 {
        return Err(Error::Config("state range must be non-empty and start at 1 or more".into()));
    }
    if taus.is_empty() {
        return Err(Error::Config("need at least one expectile level".into()));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &tau in taus {
        for k in states.clone() {
            let config = FitConfig {
                n_states: k,
                tau,
                ..base.clone()
            };
            match fit(data, &config) {
                Ok(f) => rows.push(information_criteria(&f, data.len())),
                Err(e) if e.is_numerical() => failures.push(SelectionFailure {
                    n_states: k,
                    tau,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(CriteriaReport { rows, failures })
}

fn choose2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "ARI labelings",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Data("ARI needs at least two items".into()));
    }
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&i, &j) in a.iter().zip(b) {
        *table.entry((i, j)).or_default() += 1.0;
        *rows.entry(i).or_default() += 1.0;
        *cols.entry(j).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| choose2(n)).sum();
    let total = choose2(a.len() as f64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        // both labelings are all-one-cluster or all-singletons
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Enumerate the permutation of `0..k` minimising `cost(order)`, where
/// `order[i]` is the source state placed at position `i`.
pub fn best_permutation<F: Fn(&[usize]) -> f64>(k: usize, cost: F) -> Vec<usize> {
    fn rec<F: Fn(&[usize]) -> f64>(
        current: &mut Vec<usize>,
        used: &mut [bool],
        cost: &F,
        best: &mut (f64, Vec<usize>),
    ) {
        if current.len() == used.len() {
            let c = cost(current);
            if c < best.0 {
                *best = (c, current.clone());
            }
            return;
        }
        for s in 0..used.len() {
            if !used[s] {
                used[s] = true;
                current.push(s);
                rec(current, used, cost, best);
                current.pop();
                used[s] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, (0..k).collect::<Vec<_>>());
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &cost, &mut best);
    best.1
}

/// How bootstrap replicate states are matched to the original fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Keep the ascending-σ labels of each refit.
    ScaleOrder,
    /// Permute each refit to minimise the squared distance of (β, σ) to the
    /// original estimate.
    #[default]
    NearestToReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub alignment: Alignment,
    /// Random starts per refit; `None` uses the fit configuration's count.
    pub n_starts: Option<usize>,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        BootstrapConfig {
            replicates,
            seed,
            alignment: Alignment::default(),
            n_starts: None,
        }
    }
}

/// Standard errors laid out like [`EhmmParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub beta: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub initial: Vec<f64>,
    pub transition: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub replicates: usize,
    pub n_converged: usize,
    pub alignment: Alignment,
    pub se: ParamErrors,
    pub converged: Vec<bool>,
    /// Aligned replicate estimates (`None` for failed or unconverged refits).
    pub estimates: Vec<Option<EhmmParams>>,
}

fn align(reference: &EhmmParams, replicate: &EhmmParams, how: Alignment) -> EhmmParams {
    match how {
        Alignment::ScaleOrder => replicate.permuted(&replicate.scale_order()),
        Alignment::NearestToReference => {
            let order = best_permutation(reference.n_states(), |order| {
                order
                    .iter()
                    .enumerate()
                    .map(|(i, &o)| {
                        let db: f64 = (0..reference.n_regressors())
                            .map(|j| (replicate.beta[(o, j)] - reference.beta[(i, j)]).powi(2))
                            .sum();
                        db + (replicate.sigma[o] - reference.sigma[i]).powi(2)
                    })
                    .sum()
            });
            replicate.permuted(&order)
        }
    }
}

/// Draw a dataset from fitted parameters, holding the design fixed.
pub fn simulate_from_params<R: rand::Rng + ?Sized>(
    params: &EhmmParams,
    data: &TimeSeriesDataset,
    rng: &mut R,
) -> Result<(TimeSeriesDataset, Vec<usize>)> {
    let path = params.chain.sample_path(data.len(), rng);
    let rows: Vec<Vec<f64>> = (0..params.n_states()).map(|k| params.beta_row(k)).collect();
    let mut y = Vec::with_capacity(data.len());
    for (t, &s) in path.iter().enumerate() {
        let an = AnParams::new(data.fitted(t, &rows[s]), params.sigma[s], params.tau)?;
        y.push(an_sample(&an, rng));
    }
    Ok((
        TimeSeriesDataset::new(y, data.x.clone(), data.labels.clone())?,
        path,
    ))
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Parametric bootstrap: simulate from the fitted model, refit (warm start
/// from the estimate plus the usual random starts), align states and take the
/// standard deviation of each parameter over converged replicates.
pub fn parametric_bootstrap(
    fitted: &FitResult,
    data: &TimeSeriesDataset,
    config: &FitConfig,
    boot: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if boot.replicates < 2 {
        return Err(Error::Config("bootstrap needs at least 2 replicates".into()));
    }
    let reference = &fitted.params;
    let refit_config = FitConfig {
        n_states: reference.n_states(),
        tau: reference.tau,
        n_starts: boot.n_starts.unwrap_or(config.n_starts),
        ..config.clone()
    };
    refit_config.validate()?;

    let replicate = |r: usize| -> Option<EhmmParams> {
        let mut rng = stream(boot.seed, r as u64);
        let (sim, _) = simulate_from_params(reference, data, &mut rng).ok()?;
        let cfg = FitConfig {
            seed: derive_seed(boot.seed, &[r as u64]),
            ..refit_config.clone()
        };
        let refit = fit_with_warm_start(&sim, &cfg, Some(reference)).ok()?;
        refit
            .converged
            .then(|| align(reference, &refit.params, boot.alignment))
    };

    #[cfg(feature = "parallel")]
    let estimates: Vec<Option<EhmmParams>> = {
        use rayon::prelude::*;
        (0..boot.replicates).into_par_iter().map(replicate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let estimates: Vec<Option<EhmmParams>> = (0..boot.replicates).map(replicate).collect();

    let ok: Vec<&EhmmParams> = estimates.iter().flatten().collect();
    let needed = boot.replicates.div_ceil(2).max(2);
    if ok.len() < needed {
        return Err(Error::Bootstrap {
            converged: ok.len(),
            requested: boot.replicates,
        });
    }
    let k = reference.n_states();
    let p = reference.n_regressors();
    let sd_of = |f: &dyn Fn(&EhmmParams) -> f64| -> f64 {
        sample_sd(&ok.iter().map(|e| f(e)).collect::<Vec<_>>())
    };
    let se = ParamErrors {
        beta: DMatrix::from_fn(k, p, |i, j| sd_of(&|e| e.beta[(i, j)])),
        sigma: (0..k).map(|i| sd_of(&|e| e.sigma[i])).collect(),
        initial: (0..k).map(|i| sd_of(&|e| e.chain.initial[i])).collect(),
        transition: DMatrix::from_fn(k, k, |i, j| sd_of(&|e| e.chain.transition[(i, j)])),
    };
    Ok(BootstrapReport {
        replicates: boot.replicates,
        n_converged: ok.len(),
        alignment: boot.alignment,
        se,
        converged: estimates.iter().map(Option::is_some).collect(),
        estimates,
    })
}

/// One estimate with its bootstrap standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub state: usize,
    pub parameter: String,
    pub estimate: f64,
    pub se: f64,
    /// `|estimate| > 2·SE`
    pub significant: bool,
}

/// Coefficients and scales per state with SEs and the two-SE flag.
pub fn coefficient_table(
    params: &EhmmParams,
    report: &BootstrapReport,
    names: &[String],
) -> Vec<CoefficientRow> {
    let mut out = Vec::new();
    let row = |state: usize, parameter: String, estimate: f64, se: f64| CoefficientRow {
        state,
        parameter,
        estimate,
        se,
        significant: estimate.abs() > 2.0 * se,
    };
    for k in 0..params.n_states() {
        for j in 0..params.n_regressors() {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("beta{j}"));
            out.push(row(k, name, params.beta[(k, j)], report.se.beta[(k, j)]));
        }
        out.push(row(k, "sigma".into(), params.sigma[k], report.se.sigma[k]));
    }
    out
}
