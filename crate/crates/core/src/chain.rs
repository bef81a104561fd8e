//! Latent-chain machinery: log-space forward-backward smoothing and an
//! exhaustive path-sum oracle.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp};

const SIMPLEX_TOL: f64 = 1e-12;

/// Initial law and row-stochastic transition matrix of a homogeneous chain.
/// `transition[(j, k)]` is `P(S_{t+1} = k | S_t = j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub initial: Vec<f64>,
    pub transition: DMatrix<f64>,
}

impl ChainParams {
    pub fn new(initial: Vec<f64>, transition: DMatrix<f64>) -> Result<Self> {
        let chain = ChainParams {
            initial,
            transition,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.initial.len();
        if k == 0 {
            return Err(Error::Empty("initial law"));
        }
        if self.transition.nrows() != k || self.transition.ncols() != k {
            return Err(Error::Dimension {
                what: "transition matrix",
                expected: k,
                actual: self.transition.nrows().max(self.transition.ncols()),
            });
        }
        check_simplex(&self.initial, "initial law")?;
        for j in 0..k {
            let row: Vec<f64> = self.transition.row(j).iter().copied().collect();
            check_simplex(&row, "transition row")
                .map_err(|e| Error::InvalidProbability(format!("row {j}: {e}")))?;
        }
        Ok(())
    }

    /// Draw a state path of length `len`.
    pub fn sample_path<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut path = Vec::with_capacity(len);
        if len == 0 {
            return path;
        }
        let mut s = draw_categorical(&self.initial, rng);
        path.push(s);
        for _ in 1..len {
            let row: Vec<f64> = self.transition.row(s).iter().copied().collect();
            s = draw_categorical(&row, rng);
            path.push(s);
        }
        path
    }

    /// Relabel states so that new state `i` is old state `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> ChainParams {
        let k = order.len();
        ChainParams {
            initial: order.iter().map(|&o| self.initial[o]).collect(),
            transition: DMatrix::from_fn(k, k, |i, j| self.transition[(order[i], order[j])]),
        }
    }
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidProbability(format!("{what} has entry {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProbability(format!("{what} sums to {sum}")));
    }
    Ok(())
}

pub(crate) fn draw_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the cumulative sum: take the last state with mass
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// Smoothed state and pairwise probabilities plus the observed-data
/// log-likelihood.
///
/// `gamma[(t, k)] = P(S_t = k | y)`; `xi[t-1][(j, k)] = P(S_{t-1} = j, S_t = k | y)`
/// for `t = 1..T-1` (0-based), so `xi` has `T - 1` slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posteriors {
    pub gamma: DMatrix<f64>,
    pub xi: Vec<DMatrix<f64>>,
    pub loglik: f64,
}

impl Posteriors {
    pub fn len(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.nrows() == 0
    }

    pub fn n_states(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn permuted(&self, order: &[usize]) -> Posteriors {
        let k = order.len();
        Posteriors {
            gamma: DMatrix::from_fn(self.gamma.nrows(), k, |t, i| self.gamma[(t, order[i])]),
            xi: self
                .xi
                .iter()
                .map(|x| DMatrix::from_fn(k, k, |i, j| x[(order[i], order[j])]))
                .collect(),
            loglik: self.loglik,
        }
    }
}

fn validate_emissions(log_emissions: &DMatrix<f64>, chain: &ChainParams) -> Result<()> {
    if log_emissions.nrows() == 0 {
        return Err(Error::Empty("emission matrix"));
    }
    if log_emissions.ncols() != chain.n_states() {
        return Err(Error::Dimension {
            what: "emission columns",
            expected: chain.n_states(),
            actual: log_emissions.ncols(),
        });
    }
    for t in 0..log_emissions.nrows() {
        if log_emissions.row(t).iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "log-emission row",
                index: t,
            });
        }
    }
    Ok(())
}

/// Forward-backward recursions in log space.
pub fn forward_backward(log_emissions: &DMatrix<f64>, chain: &ChainParams) -> Result<Posteriors> {
    validate_emissions(log_emissions, chain)?;
    let n = log_emissions.nrows();
    let k = chain.n_states();
    let log_init: Vec<f64> = chain.initial.iter().map(|p| p.ln()).collect();
    let log_trans = chain.transition.map(f64::ln);

    // alpha[t*k + j] = ln P(y_1..y_t, S_t = j)
    let mut alpha = vec![0.0; n * k];
    let mut scratch = vec![0.0; k];
    for j in 0..k {
        alpha[j] = log_init[j] + log_emissions[(0, j)];
    }
    for t in 1..n {
        for j in 0..k {
            for (i, s) in scratch.iter_mut().enumerate() {
                *s = alpha[(t - 1) * k + i] + log_trans[(i, j)];
            }
            alpha[t * k + j] = log_emissions[(t, j)] + log_sum_exp(&scratch);
        }
    }
    let loglik = log_sum_exp(&alpha[(n - 1) * k..]);
    if !loglik.is_finite() {
        return Err(Error::InvalidProbability(
            "observations have zero probability under the chain".into(),
        ));
    }

    // beta[t*k + i] = ln P(y_{t+1}..y_T | S_t = i)
    let mut beta = vec![0.0; n * k];
    for t in (0..n.saturating_sub(1)).rev() {
        for i in 0..k {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = log_trans[(i, j)] + log_emissions[(t + 1, j)] + beta[(t + 1) * k + j];
            }
            beta[t * k + i] = log_sum_exp(&scratch);
        }
    }

    let mut gamma = DMatrix::zeros(n, k);
    for t in 0..n {
        let mut total = 0.0;
        for j in 0..k {
            let g = (alpha[t * k + j] + beta[t * k + j] - loglik).exp();
            gamma[(t, j)] = g;
            total += g;
        }
        for j in 0..k {
            gamma[(t, j)] /= total;
        }
    }

    let mut xi = Vec::with_capacity(n.saturating_sub(1));
    for t in 1..n {
        let mut slice = DMatrix::zeros(k, k);
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                let v = (alpha[(t - 1) * k + i]
                    + log_trans[(i, j)]
                    + log_emissions[(t, j)]
                    + beta[t * k + j]
                    - loglik)
                    .exp();
                slice[(i, j)] = v;
                total += v;
            }
        }
        slice /= total;
        xi.push(slice);
    }

    Ok(Posteriors { gamma, xi, loglik })
}

/// Largest path count `path_sum_loglik` will enumerate.
pub const PATH_LIMIT: u64 = 1_000_000;

/// Exact log-likelihood by summing over every state path. Test oracle for
/// the forward recursion; exponential in `T`.
pub fn path_sum_loglik(log_emissions: &DMatrix<f64>, chain: &ChainParams) -> Result<f64> {
    validate_emissions(log_emissions, chain)?;
    let n = log_emissions.nrows();
    let k = chain.n_states();
    let count = (k as u64).checked_pow(n as u32).filter(|&c| c <= PATH_LIMIT);
    let Some(count) = count else {
        return Err(Error::PathLimit {
            states: k,
            steps: n,
            limit: PATH_LIMIT,
        });
    };
    let mut total = f64::NEG_INFINITY;
    let mut path = vec![0usize; n];
    for code in 0..count {
        let mut c = code;
        for s in path.iter_mut() {
            *s = (c % k as u64) as usize;
            c /= k as u64;
        }
        let mut lp = chain.initial[path[0]].ln() + log_emissions[(0, path[0])];
        for t in 1..n {
            lp += chain.transition[(path[t - 1], path[t])].ln() + log_emissions[(t, path[t])];
        }
        total = log_add_exp(total, lp);
    }
    Ok(total)
}
