//! EM estimation of the expectile hidden Markov regression.
//!
//! Each state `k` carries a linear expectile model `μ_tk = x_t'β_k` with an
//! AN(μ_tk, σ_k, τ) working likelihood. The E-step is a forward-backward pass
//! over the AN log-emissions; the M-step updates the chain in closed form, β_k
//! by iteratively reweighted least squares on the posterior-weighted
//! asymmetric loss, and σ_k in closed form given the new β_k.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::an::{an_logpdf_raw, asymmetric_loss, log_normalizer, ExpectileLevel};
use crate::chain::{forward_backward, ChainParams, Posteriors};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Response vector and design matrix (first column identically one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
}

impl TimeSeriesDataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let data = TimeSeriesDataset { y, x, labels };
        data.validate()?;
        Ok(data)
    }

    /// Build a dataset from covariates without the intercept column, which is
    /// prepended here.
    pub fn with_intercept(
        y: Vec<f64>,
        covariates: &DMatrix<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = covariates.nrows();
        let p = covariates.ncols() + 1;
        let x = DMatrix::from_fn(n, p, |t, j| if j == 0 { 1.0 } else { covariates[(t, j - 1)] });
        TimeSeriesDataset::new(y, x, labels)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.x.nrows() != n {
            return Err(Error::Dimension {
                what: "design rows",
                expected: n,
                actual: self.x.nrows(),
            });
        }
        if self.x.ncols() == 0 {
            return Err(Error::Data("design matrix has no columns".into()));
        }
        if n <= self.x.ncols() {
            return Err(Error::Data(format!(
                "need more observations ({n}) than regressors ({})",
                self.x.ncols()
            )));
        }
        if let Some(index) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "response",
                index,
            });
        }
        for t in 0..n {
            if self.x.row(t).iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "design row",
                    index: t,
                });
            }
            if self.x[(t, 0)] != 1.0 {
                return Err(Error::Data(format!(
                    "first design column must be the intercept (row {t} has {})",
                    self.x[(t, 0)]
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Dimension {
                    what: "labels",
                    expected: n,
                    actual: labels.len(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_regressors(&self) -> usize {
        self.x.ncols()
    }

    #[inline]
    pub(crate) fn fitted(&self, t: usize, beta: &[f64]) -> f64 {
        beta.iter().enumerate().map(|(j, b)| self.x[(t, j)] * b).sum()
    }
}

/// State-specific regression coefficients and scales plus the chain.
/// `beta` is K×P (row k is state k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhmmParams {
    pub beta: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub chain: ChainParams,
    pub tau: ExpectileLevel,
}

impl EhmmParams {
    pub fn n_states(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.beta.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.sigma.len();
        if self.beta.nrows() != k {
            return Err(Error::Dimension {
                what: "coefficient rows",
                expected: k,
                actual: self.beta.nrows(),
            });
        }
        if let Some(&s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidScale(s));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite {
                what: "coefficients",
                index: 0,
            });
        }
        if self.chain.n_states() != k {
            return Err(Error::Dimension {
                what: "chain states",
                expected: k,
                actual: self.chain.n_states(),
            });
        }
        self.chain.validate()
    }

    pub fn beta_row(&self, k: usize) -> Vec<f64> {
        self.beta.row(k).iter().copied().collect()
    }

    /// Relabel states so that new state `i` is old state `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> EhmmParams {
        let p = self.beta.ncols();
        EhmmParams {
            beta: DMatrix::from_fn(order.len(), p, |i, j| self.beta[(order[i], j)]),
            sigma: order.iter().map(|&o| self.sigma[o]).collect(),
            chain: self.chain.permuted(order),
            tau: self.tau,
        }
    }

    /// State order that sorts σ ascending (stable, so ties keep their index order).
    pub fn scale_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.sigma.len()).collect();
        order.sort_by(|&a, &b| self.sigma[a].total_cmp(&self.sigma[b]));
        order
    }
}

/// Estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub n_states: usize,
    pub tau: ExpectileLevel,
    pub em_tolerance: f64,
    pub max_em_iterations: usize,
    pub irls_tolerance: f64,
    pub max_irls_iterations: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub scale_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_states: 2,
            tau: ExpectileLevel::MEAN,
            em_tolerance: 1e-4,
            max_em_iterations: 1000,
            irls_tolerance: 1e-8,
            max_irls_iterations: 50,
            n_starts: 20,
            seed: 0,
            scale_floor: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn new(n_states: usize, tau: ExpectileLevel) -> Self {
        FitConfig {
            n_states,
            tau,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::Config("number of states must be at least 1".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::Config("need at least one random start".into()));
        }
        for (name, v) in [
            ("em_tolerance", self.em_tolerance),
            ("irls_tolerance", self.irls_tolerance),
            ("scale_floor", self.scale_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_em_iterations == 0 || self.max_irls_iterations == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Max-norm of the β first-order condition per state, evaluated with the
    /// posteriors of the final M-step.
    pub beta_score: Vec<f64>,
    /// Some σ_k was clamped to the scale floor during the run.
    pub scale_floor_hit: bool,
    /// Transition rows that had no posterior mass at the final M-step and were
    /// reset to uniform.
    pub uniform_rows: Vec<usize>,
    /// Final log-likelihood of each start (`None` where the start failed).
    pub start_logliks: Vec<Option<f64>>,
    /// Failure reasons of abandoned starts.
    pub start_failures: Vec<String>,
}

/// Outcome of an EM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: EhmmParams,
    pub posteriors: Posteriors,
    pub loglik: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub start_index: usize,
    pub loglik_trace: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn n_states(&self) -> usize {
        self.params.n_states()
    }
}

const MAX_PARTITION_ATTEMPTS: usize = 100;
const RANK_TOL: f64 = 1e-12;

/// Random-partition initialisation: uniform labels, empirical chain
/// frequencies, per-state OLS and residual scale.
pub fn init_random<R: Rng + ?Sized>(
    data: &TimeSeriesDataset,
    config: &FitConfig,
    rng: &mut R,
) -> Result<EhmmParams> {
    config.validate()?;
    let k = config.n_states;
    let p = data.n_regressors();
    for _ in 0..MAX_PARTITION_ATTEMPTS {
        let labels: Vec<usize> = (0..data.len()).map(|_| rng.random_range(0..k)).collect();
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        if counts.iter().any(|&c| c < p) {
            continue;
        }
        match params_from_partition(data, &labels, config) {
            Ok(params) => return Ok(params),
            Err(Error::Singular { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Initialization {
        needed: p,
        attempts: MAX_PARTITION_ATTEMPTS,
    })
}

/// Parameters implied by a hard partition of the time points.
pub fn params_from_partition(
    data: &TimeSeriesDataset,
    labels: &[usize],
    config: &FitConfig,
) -> Result<EhmmParams> {
    let k = config.n_states;
    let n = data.len();
    let p = data.n_regressors();
    if labels.len() != n {
        return Err(Error::Dimension {
            what: "partition",
            expected: n,
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Config(format!("label {bad} outside 0..{k}")));
    }

    let mut freq = vec![0.0; k];
    for &l in labels {
        freq[l] += 1.0;
    }
    let initial: Vec<f64> = freq.iter().map(|c| c / n as f64).collect();

    let mut counts = DMatrix::<f64>::zeros(k, k);
    for w in labels.windows(2) {
        counts[(w[0], w[1])] += 1.0;
    }
    let mut transition = DMatrix::zeros(k, k);
    for j in 0..k {
        let total: f64 = counts.row(j).sum();
        for i in 0..k {
            transition[(j, i)] = if total > 0.0 {
                counts[(j, i)] / total
            } else {
                1.0 / k as f64
            };
        }
    }

    let mut beta = DMatrix::zeros(k, p);
    let mut sigma = vec![0.0; k];
    for state in 0..k {
        let w: Vec<f64> = labels
            .iter()
            .map(|&l| if l == state { 1.0 } else { 0.0 })
            .collect();
        let b = weighted_least_squares(data, &w, state, 0)?;
        let mut ssr = 0.0;
        for t in 0..n {
            if labels[t] == state {
                let r = data.y[t] - data.fitted(t, b.as_slice());
                ssr += r * r;
            }
        }
        sigma[state] = (ssr / freq[state]).sqrt().max(config.scale_floor);
        beta.set_row(state, &b.transpose());
    }

    Ok(EhmmParams {
        beta,
        sigma,
        chain: ChainParams::new(initial, transition)?,
        tau: config.tau,
    })
}

/// Solve `(Σ w_t x_t x_t') b = Σ w_t x_t y_t`.
fn weighted_least_squares(
    data: &TimeSeriesDataset,
    w: &[f64],
    state: usize,
    iteration: usize,
) -> Result<DVector<f64>> {
    let p = data.n_regressors();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for (t, &wt) in w.iter().enumerate() {
        if wt == 0.0 {
            continue;
        }
        for a in 0..p {
            let xa = data.x[(t, a)] * wt;
            rhs[a] += xa * data.y[t];
            for b in 0..=a {
                gram[(a, b)] += xa * data.x[(t, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let diag: Vec<f64> = (0..p).map(|a| gram[(a, a)]).collect();
    let chol = gram.cholesky().ok_or(Error::Singular { state, iteration })?;
    // a pivot that lost almost all of its diagonal means a (near) rank deficiency
    let l = chol.l_dirty();
    if (0..p).any(|a| !(l[(a, a)] * l[(a, a)] > RANK_TOL * diag[a])) {
        return Err(Error::Singular { state, iteration });
    }
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { state, iteration });
    }
    Ok(sol)
}

/// AN log-emission matrix, `T×K`.
pub fn emission_matrix(data: &TimeSeriesDataset, params: &EhmmParams) -> DMatrix<f64> {
    let log_c = log_normalizer(params.tau);
    let k = params.n_states();
    let rows: Vec<Vec<f64>> = (0..k).map(|s| params.beta_row(s)).collect();
    DMatrix::from_fn(data.len(), k, |t, s| {
        an_logpdf_raw(
            data.y[t],
            data.fitted(t, &rows[s]),
            params.sigma[s],
            params.tau,
            log_c,
        )
    })
}

/// E-step: smoothed posteriors and the working log-likelihood.
pub fn e_step(data: &TimeSeriesDataset, params: &EhmmParams) -> Result<Posteriors> {
    forward_backward(&emission_matrix(data, params), &params.chain)
}

/// Chain update from the posteriors. Returns the new chain and the indices of
/// rows that had no transition mass (reset to uniform).
pub fn m_step_chain(posteriors: &Posteriors) -> Result<(ChainParams, Vec<usize>)> {
    let k = posteriors.n_states();
    if posteriors.is_empty() {
        return Err(Error::Empty("posteriors"));
    }
    let g0 = posteriors.gamma.row(0);
    let g0_sum: f64 = g0.sum();
    let initial: Vec<f64> = g0.iter().map(|g| g / g0_sum).collect();

    let mut counts = DMatrix::<f64>::zeros(k, k);
    for x in &posteriors.xi {
        counts += x;
    }
    let mut transition = DMatrix::zeros(k, k);
    let mut uniform_rows = Vec::new();
    for j in 0..k {
        let total: f64 = counts.row(j).sum();
        if total > 0.0 {
            for i in 0..k {
                transition[(j, i)] = counts[(j, i)] / total;
            }
        } else {
            uniform_rows.push(j);
            for i in 0..k {
                transition[(j, i)] = 1.0 / k as f64;
            }
        }
    }
    Ok((ChainParams::new(initial, transition)?, uniform_rows))
}

/// Posterior-weighted asymmetric loss `Σ γ_t ω_τ(y_t - x_t'β)`.
pub fn weighted_expectile_loss(
    data: &TimeSeriesDataset,
    weights: &[f64],
    beta: &[f64],
    tau: ExpectileLevel,
) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(t, &w)| w * asymmetric_loss(data.y[t] - data.fitted(t, beta), tau))
        .sum()
}

/// The β first-order condition `Σ γ_t |τ - 1(y_t < x_t'β)| x_t (y_t - x_t'β)`.
pub fn beta_score(
    data: &TimeSeriesDataset,
    weights: &[f64],
    beta: &[f64],
    tau: ExpectileLevel,
) -> DVector<f64> {
    let p = data.n_regressors();
    let mut score = DVector::zeros(p);
    for (t, &g) in weights.iter().enumerate() {
        let r = data.y[t] - data.fitted(t, beta);
        let c = g * tau.weight(r) * r;
        for j in 0..p {
            score[j] += c * data.x[(t, j)];
        }
    }
    score
}

/// β update for one state: IRLS on the posterior-weighted asymmetric loss,
/// started from `beta_init`. Each reweighted solve is a Newton step on the
/// piecewise-quadratic objective; a step that fails to decrease it is halved.
pub fn m_step_beta(
    data: &TimeSeriesDataset,
    weights: &[f64],
    beta_init: &[f64],
    tau: ExpectileLevel,
    config: &FitConfig,
    state: usize,
) -> Result<DVector<f64>> {
    let n = data.len();
    let p = data.n_regressors();
    if weights.len() != n || beta_init.len() != p {
        return Err(Error::Dimension {
            what: "IRLS inputs",
            expected: n,
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(format!(
            "state {state}: posterior weights must be nonnegative with positive total"
        )));
    }

    if tau == ExpectileLevel::MEAN {
        // constant weights γ_t/2: one weighted least-squares solve
        return weighted_least_squares(data, weights, state, 0);
    }

    let mut beta = DVector::from_column_slice(beta_init);
    let mut loss = weighted_expectile_loss(data, weights, beta.as_slice(), tau);
    let mut w = vec![0.0; n];
    for iteration in 0..config.max_irls_iterations {
        for t in 0..n {
            w[t] = weights[t] * tau.weight(data.y[t] - data.fitted(t, beta.as_slice()));
        }
        let target = weighted_least_squares(data, &w, state, iteration)?;
        let direction = &target - &beta;
        let mut step = 1.0;
        let mut candidate = target;
        let mut cand_loss = weighted_expectile_loss(data, weights, candidate.as_slice(), tau);
        while cand_loss > loss * (1.0 + 1e-14) && step > 1e-10 {
            step *= 0.5;
            candidate = &beta + &direction * step;
            cand_loss = weighted_expectile_loss(data, weights, candidate.as_slice(), tau);
        }
        if cand_loss > loss * (1.0 + 1e-14) {
            // no descent along the Newton direction: already at the minimum
            break;
        }
        let change = (&candidate - &beta).amax();
        beta = candidate;
        loss = cand_loss;
        if change < config.irls_tolerance {
            break;
        }
    }
    Ok(beta)
}

/// σ update: `σ² = 2 Σ γ_t |τ - 1(r_t<0)| r_t² / Σ γ_t`, floored at `scale_floor`.
pub fn m_step_sigma(
    data: &TimeSeriesDataset,
    weights: &[f64],
    beta: &[f64],
    tau: ExpectileLevel,
    scale_floor: f64,
) -> f64 {
    let mass: f64 = weights.iter().sum();
    let var = 2.0 * weighted_expectile_loss(data, weights, beta, tau) / mass;
    var.sqrt().max(scale_floor)
}

struct MStep {
    params: EhmmParams,
    beta_score: Vec<f64>,
    floor_hit: bool,
    uniform_rows: Vec<usize>,
}

fn m_step(
    data: &TimeSeriesDataset,
    current: &EhmmParams,
    posteriors: &Posteriors,
    config: &FitConfig,
) -> Result<MStep> {
    let k = current.n_states();
    let p = data.n_regressors();
    let (chain, uniform_rows) = m_step_chain(posteriors)?;
    let mut beta = DMatrix::zeros(k, p);
    let mut sigma = vec![0.0; k];
    let mut scores = vec![0.0; k];
    let mut floor_hit = false;
    for s in 0..k {
        let weights: Vec<f64> = posteriors.gamma.column(s).iter().copied().collect();
        let mass: f64 = weights.iter().sum();
        if mass < (p + 1) as f64 {
            return Err(Error::StateCollapse {
                state: s,
                mass,
                needed: p + 1,
            });
        }
        let b = m_step_beta(data, &weights, &current.beta_row(s), current.tau, config, s)?;
        scores[s] = beta_score(data, &weights, b.as_slice(), current.tau).amax();
        let sd = m_step_sigma(data, &weights, b.as_slice(), current.tau, config.scale_floor);
        floor_hit |= sd <= config.scale_floor;
        sigma[s] = sd;
        beta.set_row(s, &b.transpose());
    }
    Ok(MStep {
        params: EhmmParams {
            beta,
            sigma,
            chain,
            tau: current.tau,
        },
        beta_score: scores,
        floor_hit,
        uniform_rows,
    })
}

/// Run EM from the given starting values until the log-likelihood change
/// drops below `em_tolerance` or the iteration budget is spent. States are
/// returned in ascending-σ order.
pub fn run_from(
    data: &TimeSeriesDataset,
    config: &FitConfig,
    initial: EhmmParams,
) -> Result<FitResult> {
    config.validate()?;
    data.validate()?;
    initial.validate()?;
    if initial.n_regressors() != data.n_regressors() {
        return Err(Error::Dimension {
            what: "coefficient columns",
            expected: data.n_regressors(),
            actual: initial.n_regressors(),
        });
    }
    let mut params = initial;
    let mut posteriors = e_step(data, &params)?;
    let mut trace = vec![posteriors.loglik];
    let mut diagnostics = Diagnostics::default();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_em_iterations {
        let update = m_step(data, &params, &posteriors, config)?;
        let next = e_step(data, &update.params)?;
        iterations += 1;
        let change = next.loglik - posteriors.loglik;
        trace.push(next.loglik);
        diagnostics.beta_score = update.beta_score;
        diagnostics.scale_floor_hit |= update.floor_hit;
        diagnostics.uniform_rows = update.uniform_rows;
        params = update.params;
        posteriors = next;
        if change.abs() < config.em_tolerance {
            converged = true;
            break;
        }
    }

    let order = params.scale_order();
    Ok(FitResult {
        params: params.permuted(&order),
        posteriors: posteriors.permuted(&order),
        loglik: *trace.last().expect("trace is never empty"),
        n_iterations: iterations,
        converged,
        start_index: 0,
        loglik_trace: trace,
        diagnostics: Diagnostics {
            uniform_rows: diagnostics
                .uniform_rows
                .iter()
                .map(|&r| order.iter().position(|&o| o == r).expect("permutation"))
                .collect(),
            beta_score: order.iter().map(|&o| diagnostics.beta_score[o]).collect(),
            ..diagnostics
        },
    })
}

fn single_start(data: &TimeSeriesDataset, config: &FitConfig, index: usize) -> Result<FitResult> {
    let mut rng = stream(config.seed, index as u64);
    let init = init_random(data, config, &mut rng)?;
    let mut fit = run_from(data, config, init)?;
    fit.start_index = index;
    Ok(fit)
}

/// Multi-start EM: `n_starts` random partitions, best final log-likelihood wins.
pub fn fit(data: &TimeSeriesDataset, config: &FitConfig) -> Result<FitResult> {
    fit_with_warm_start(data, config, None)
}

/// As [`fit`], with an optional extra start from given parameters. The warm
/// start is reported with `start_index == n_starts`.
pub fn fit_with_warm_start(
    data: &TimeSeriesDataset,
    config: &FitConfig,
    warm: Option<&EhmmParams>,
) -> Result<FitResult> {
    config.validate()?;
    data.validate()?;
    let starts: Vec<usize> = (0..config.n_starts).collect();

    #[cfg(feature = "parallel")]
    let mut outcomes: Vec<Result<FitResult>> = {
        use rayon::prelude::*;
        starts
            .par_iter()
            .map(|&i| single_start(data, config, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut outcomes: Vec<Result<FitResult>> = starts
        .iter()
        .map(|&i| single_start(data, config, i))
        .collect();

    if let Some(w) = warm {
        outcomes.push(run_from(data, config, w.clone()).map(|mut f| {
            f.start_index = config.n_starts;
            f
        }));
    }

    let start_logliks: Vec<Option<f64>> = outcomes
        .iter()
        .map(|o| o.as_ref().ok().map(|f| f.loglik))
        .collect();
    let start_failures: Vec<String> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().err().map(|e| format!("start {i}: {e}")))
        .collect();

    let mut best: Option<FitResult> = None;
    for fit in outcomes.into_iter().flatten() {
        // strict improvement keeps the lowest index on ties
        if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
            best = Some(fit);
        }
    }
    match best {
        Some(mut fit) => {
            fit.diagnostics.start_logliks = start_logliks;
            fit.diagnostics.start_failures = start_failures;
            Ok(fit)
        }
        None => Err(Error::AllStartsFailed(start_failures)),
    }
}
