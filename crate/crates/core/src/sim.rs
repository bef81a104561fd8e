//! Synthetic data from a K-state switching regression and a Monte Carlo
//! runner reporting bias, spread and clustering agreement of EM fits.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::an::ExpectileLevel;
use crate::chain::ChainParams;
use crate::em::{fit, FitConfig, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::eval::{adjusted_rand_index, best_permutation, decode};
use crate::numeric::{bisect, integrate_lower, integrate_real_line, integrate_upper};
use crate::rng::{derive_seed, stream};

/// Error distribution added to the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorLaw {
    /// Standard normal.
    Gaussian,
    /// Azzalini skew-t with location 0 and unit scale:
    /// `2 t_ν(x) T_{ν+1}(α x √((ν+1)/(ν+x²)))`.
    SkewT { df: f64, alpha: f64 },
}

impl ErrorLaw {
    pub fn skew_t(df: f64, alpha: f64) -> Result<Self> {
        if !(df.is_finite() && df > 2.0) || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "skew-t needs df > 2 and finite shape, got df={df}, alpha={alpha}"
            )));
        }
        Ok(ErrorLaw::SkewT { df, alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorLaw::Gaussian => Ok(()),
            ErrorLaw::SkewT { df, alpha } => ErrorLaw::skew_t(df, alpha).map(|_| ()),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ErrorLaw::Gaussian => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            ErrorLaw::SkewT { df, alpha } => {
                let t = StudentsT::new(0.0, 1.0, df).expect("validated df");
                let t1 = StudentsT::new(0.0, 1.0, df + 1.0).expect("validated df");
                2.0 * t.pdf(x) * t1.cdf(alpha * x * ((df + 1.0) / (df + x * x)).sqrt())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ErrorLaw::Gaussian => rng.sample(StandardNormal),
            ErrorLaw::SkewT { df, alpha } => {
                let delta = alpha / (1.0 + alpha * alpha).sqrt();
                let u0: f64 = rng.sample(StandardNormal);
                let u1: f64 = rng.sample(StandardNormal);
                let z = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
                let v: f64 = ChiSquared::new(df).expect("validated df").sample(rng);
                z / (v / df).sqrt()
            }
        }
    }
}

/// τ-expectile of the error law: root of `E[|τ - 1(ε<m)|(ε - m)] = 0`, with
/// the expectation by adaptive quadrature.
pub fn true_expectile_shift(law: &ErrorLaw, tau: ExpectileLevel) -> f64 {
    let t = tau.value();
    let score = |m: f64| -> f64 {
        let below = integrate_lower(|y| (y - m) * law.pdf(y), m, 1e-13).value;
        let above = integrate_upper(|y| (y - m) * law.pdf(y), m, 1e-13).value;
        (1.0 - t) * below + t * above
    };
    // score is decreasing in m
    let (mut lo, mut hi) = (-1.0, 1.0);
    while score(lo) < 0.0 {
        lo *= 2.0;
    }
    while score(hi) > 0.0 {
        hi *= 2.0;
    }
    bisect(score, lo, hi, 1e-12)
}

/// Mean of the error law by quadrature.
pub fn error_mean(law: &ErrorLaw) -> f64 {
    integrate_real_line(|y| y * law.pdf(y), 0.0, 1e-13).value
}

/// Data-generating process: states from a Markov chain, covariates i.i.d.
/// standard normal, `y_t = x_t'β_{S_t} + scale·ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    /// K×P, first column the intercept.
    pub beta: DMatrix<f64>,
    pub chain: ChainParams,
    pub error: ErrorLaw,
    pub n_obs: usize,
    pub error_scale: f64,
}

impl DgpSpec {
    /// Two states, `y = -1 + 2x + ε` and `y = 1 - 2x + ε`, transitions
    /// `[[0.8, 0.2], [0.1, 0.9]]`, started from the stationary law (1/3, 2/3).
    pub fn two_state_benchmark(error: ErrorLaw, n_obs: usize) -> Self {
        let transition = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.1, 0.9]);
        DgpSpec {
            beta: DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 1.0, -2.0]),
            chain: ChainParams::new(vec![1.0 / 3.0, 2.0 / 3.0], transition).expect("valid chain"),
            error,
            n_obs,
            error_scale: 1.0,
        }
    }

    pub fn n_states(&self) -> usize {
        self.beta.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        self.error.validate()?;
        if self.chain.n_states() != self.beta.nrows() {
            return Err(Error::Dimension {
                what: "DGP states",
                expected: self.beta.nrows(),
                actual: self.chain.n_states(),
            });
        }
        if self.beta.ncols() == 0 || self.n_obs <= self.beta.ncols() {
            return Err(Error::Config("DGP needs more observations than regressors".into()));
        }
        if !(self.error_scale.is_finite() && self.error_scale >= 0.0) {
            return Err(Error::Config("error scale must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// True coefficients at level τ: the intercept moves by the scaled
    /// τ-expectile of the error.
    pub fn truth_at(&self, tau: ExpectileLevel) -> DMatrix<f64> {
        let shift = self.error_scale * true_expectile_shift(&self.error, tau);
        let mut b = self.beta.clone();
        for k in 0..b.nrows() {
            b[(k, 0)] += shift;
        }
        b
    }
}

/// Draw one dataset and its state path.
pub fn simulate_dgp<R: Rng + ?Sized>(
    spec: &DgpSpec,
    rng: &mut R,
) -> Result<(TimeSeriesDataset, Vec<usize>)> {
    spec.validate()?;
    let n = spec.n_obs;
    let p = spec.beta.ncols();
    let path = spec.chain.sample_path(n, rng);
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let y = (0..n)
        .map(|t| {
            let mean: f64 = (0..p).map(|j| x[(t, j)] * spec.beta[(path[t], j)]).sum();
            mean + spec.error_scale * spec.error.sample(rng)
        })
        .collect();
    Ok((TimeSeriesDataset::new(y, x, None)?, path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub taus: Vec<ExpectileLevel>,
    pub n_reps: usize,
    pub seed: u64,
    /// Estimation settings; `n_states` and `tau` are overridden per fit.
    pub fit: FitConfig,
}

/// Bias and spread of one coefficient at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub tau: ExpectileLevel,
    pub state: usize,
    pub coefficient: usize,
    pub truth: f64,
    pub bias: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McLevelSummary {
    pub tau: ExpectileLevel,
    pub n_fitted: usize,
    pub n_failed: usize,
    pub n_unconverged: usize,
    /// ARI of decoded vs true states per replication (`None` where the fit failed).
    pub ari: Vec<Option<f64>>,
}

impl McLevelSummary {
    pub fn median_ari(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.ari.iter().flatten().copied().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub spec: DgpSpec,
    pub n_replications: usize,
    pub seed: u64,
    pub cells: Vec<McCell>,
    pub levels: Vec<McLevelSummary>,
}

impl McReport {
    pub fn cell(&self, tau: ExpectileLevel, state: usize, coefficient: usize) -> Option<&McCell> {
        self.cells
            .iter()
            .find(|c| c.tau == tau && c.state == state && c.coefficient == coefficient)
    }

    pub fn level(&self, tau: ExpectileLevel) -> Option<&McLevelSummary> {
        self.levels.iter().find(|l| l.tau == tau)
    }
}

struct RepOutcome {
    // per level: aligned estimates, ARI, converged flag
    per_level: Vec<Option<(DMatrix<f64>, f64, bool)>>,
}

fn run_replication(
    spec: &DgpSpec,
    cfg: &McConfig,
    truths: &[DMatrix<f64>],
    rep: usize,
) -> Result<RepOutcome> {
    let mut rng = stream(cfg.seed, rep as u64);
    let (data, path) = simulate_dgp(spec, &mut rng)?;
    let k = spec.n_states();
    let p = spec.beta.ncols();
    let per_level = cfg
        .taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let config = FitConfig {
                n_states: k,
                tau,
                seed: derive_seed(cfg.seed, &[rep as u64, i as u64]),
                ..cfg.fit.clone()
            };
            let f = fit(&data, &config).ok()?;
            let truth = &truths[i];
            let order = best_permutation(k, |order| {
                order
                    .iter()
                    .enumerate()
                    .map(|(s, &o)| {
                        (0..p)
                            .map(|j| (f.params.beta[(o, j)] - truth[(s, j)]).powi(2))
                            .sum::<f64>()
                    })
                    .sum()
            });
            let aligned = DMatrix::from_fn(k, p, |s, j| f.params.beta[(order[s], j)]);
            let ari = adjusted_rand_index(&decode(&f.posteriors), &path).ok()?;
            Some((aligned, ari, f.converged))
        })
        .collect();
    Ok(RepOutcome { per_level })
}

/// Simulate `n_reps` datasets, fit each at every level, align states to the
/// truth by coefficient distance and aggregate bias, standard deviation and
/// ARI. Failed fits are counted and excluded.
pub fn run_mc_study(spec: &DgpSpec, cfg: &McConfig) -> Result<McReport> {
    spec.validate()?;
    cfg.fit.validate()?;
    if cfg.n_reps < 2 {
        return Err(Error::Config("Monte Carlo study needs at least 2 replications".into()));
    }
    if cfg.taus.is_empty() {
        return Err(Error::Config("need at least one expectile level".into()));
    }
    let truths: Vec<DMatrix<f64>> = cfg.taus.iter().map(|&t| spec.truth_at(t)).collect();

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<RepOutcome>> = {
        use rayon::prelude::*;
        (0..cfg.n_reps)
            .into_par_iter()
            .map(|r| run_replication(spec, cfg, &truths, r))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<RepOutcome>> = (0..cfg.n_reps)
        .map(|r| run_replication(spec, cfg, &truths, r))
        .collect();
    let outcomes: Vec<RepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let k = spec.n_states();
    let p = spec.beta.ncols();
    let mut cells = Vec::new();
    let mut levels = Vec::new();
    for (i, &tau) in cfg.taus.iter().enumerate() {
        let fitted: Vec<&(DMatrix<f64>, f64, bool)> =
            outcomes.iter().filter_map(|o| o.per_level[i].as_ref()).collect();
        let n = fitted.len();
        if n < 2 {
            return Err(Error::Study(format!(
                "only {n} successful fits at tau = {tau}"
            )));
        }
        for s in 0..k {
            for j in 0..p {
                let truth = truths[i][(s, j)];
                let est: Vec<f64> = fitted.iter().map(|f| f.0[(s, j)]).collect();
                let mean = est.iter().sum::<f64>() / n as f64;
                let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                cells.push(McCell {
                    tau,
                    state: s,
                    coefficient: j,
                    truth,
                    bias: mean - truth,
                    std: var.sqrt(),
                    n,
                });
            }
        }
        levels.push(McLevelSummary {
            tau,
            n_fitted: n,
            n_failed: cfg.n_reps - n,
            n_unconverged: fitted.iter().filter(|f| !f.2).count(),
            ari: outcomes
                .iter()
                .map(|o| o.per_level[i].as_ref().map(|f| f.1))
                .collect(),
        });
    }
    Ok(McReport {
        spec: spec.clone(),
        n_replications: cfg.n_reps,
        seed: cfg.seed,
        cells,
        levels,
    })
}
