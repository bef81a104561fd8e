//! Independent reference implementations used to check the estimator. None of
//! these call into the EM, chain or IRLS code paths of the crate.
#![allow(dead_code)]

use ehmm_core::em::{EhmmParams, TimeSeriesDataset};
use nalgebra::{DMatrix, DVector};

/// Newey–Powell asymmetric least squares: iterate the sign pattern, solving
/// the full weighted normal equations by LU, until the pattern repeats.
pub fn asymmetric_least_squares(data: &TimeSeriesDataset, tau: f64) -> Vec<f64> {
    let n = data.y.len();
    let x = &data.x;
    let y = DVector::from_column_slice(&data.y);
    let mut pattern: Vec<bool> = vec![false; n];
    let mut beta = DVector::zeros(x.ncols());
    for _ in 0..500 {
        let w = DVector::from_iterator(n, pattern.iter().map(|&neg| if neg { 1.0 - tau } else { tau }));
        let xw = DMatrix::from_fn(n, x.ncols(), |t, j| x[(t, j)] * w[t]);
        let gram = xw.transpose() * x;
        let rhs = xw.transpose() * &y;
        beta = gram.lu().solve(&rhs).expect("full rank design");
        let resid = &y - x * &beta;
        let next: Vec<bool> = resid.iter().map(|r| *r < 0.0).collect();
        if next == pattern {
            break;
        }
        pattern = next;
    }
    beta.iter().copied().collect()
}

/// Outcome of the Gaussian-emission HMM regression oracle.
pub struct GaussianHmmFit {
    pub loglik: f64,
    pub trace: Vec<f64>,
    pub beta: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

fn normal_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Gaussian HMM regression by EM with the scaled (probability-space)
/// forward-backward recursions and closed-form weighted least squares.
pub fn gaussian_hmm_regression(
    data: &TimeSeriesDataset,
    start: &EhmmParams,
    tolerance: f64,
    max_iter: usize,
) -> GaussianHmmFit {
    let n = data.y.len();
    let k = start.sigma.len();
    let p = data.x.ncols();
    let mut beta = start.beta.clone();
    let mut sigma = start.sigma.clone();
    let mut init = start.chain.initial.clone();
    let mut trans = start.chain.transition.clone();
    let mut trace = Vec::new();

    loop {
        // emissions
        let dens = DMatrix::from_fn(n, k, |t, s| {
            let mean: f64 = (0..p).map(|j| data.x[(t, j)] * beta[(s, j)]).sum();
            normal_pdf(data.y[t], mean, sigma[s])
        });
        // scaled forward
        let mut alpha = DMatrix::zeros(n, k);
        let mut scale = vec![0.0; n];
        for s in 0..k {
            alpha[(0, s)] = init[s] * dens[(0, s)];
        }
        scale[0] = alpha.row(0).sum();
        for s in 0..k {
            alpha[(0, s)] /= scale[0];
        }
        for t in 1..n {
            for s in 0..k {
                let pred: f64 = (0..k).map(|r| alpha[(t - 1, r)] * trans[(r, s)]).sum();
                alpha[(t, s)] = pred * dens[(t, s)];
            }
            scale[t] = alpha.row(t).sum();
            for s in 0..k {
                alpha[(t, s)] /= scale[t];
            }
        }
        let loglik: f64 = scale.iter().map(|c| c.ln()).sum();
        // scaled backward
        let mut beta_b = DMatrix::from_element(n, k, 1.0);
        for t in (0..n - 1).rev() {
            for r in 0..k {
                beta_b[(t, r)] = (0..k)
                    .map(|s| trans[(r, s)] * dens[(t + 1, s)] * beta_b[(t + 1, s)])
                    .sum::<f64>()
                    / scale[t + 1];
            }
        }
        let gamma = DMatrix::from_fn(n, k, |t, s| alpha[(t, s)] * beta_b[(t, s)]);
        let mut counts = DMatrix::<f64>::zeros(k, k);
        for t in 1..n {
            for r in 0..k {
                for s in 0..k {
                    counts[(r, s)] += alpha[(t - 1, r)] * trans[(r, s)] * dens[(t, s)] * beta_b[(t, s)] / scale[t];
                }
            }
        }

        if let Some(&prev) = trace.last() {
            trace.push(loglik);
            let prev: f64 = prev;
            if (loglik - prev).abs() < tolerance || trace.len() > max_iter {
                return GaussianHmmFit {
                    loglik,
                    trace,
                    beta,
                    sigma,
                };
            }
        } else {
            trace.push(loglik);
        }

        // M-step
        let g0: f64 = gamma.row(0).sum();
        init = (0..k).map(|s| gamma[(0, s)] / g0).collect();
        for r in 0..k {
            let total: f64 = counts.row(r).sum();
            for s in 0..k {
                trans[(r, s)] = counts[(r, s)] / total;
            }
        }
        for s in 0..k {
            let w: Vec<f64> = (0..n).map(|t| gamma[(t, s)]).collect();
            let xw = DMatrix::from_fn(n, p, |t, j| data.x[(t, j)] * w[t]);
            let gram = xw.transpose() * &data.x;
            let rhs = xw.transpose() * DVector::from_column_slice(&data.y);
            let b = gram.lu().solve(&rhs).expect("full rank");
            let mut ss = 0.0;
            for t in 0..n {
                let r: f64 = data.y[t] - (0..p).map(|j| data.x[(t, j)] * b[j]).sum::<f64>();
                ss += w[t] * r * r;
            }
            sigma[s] = (ss / w.iter().sum::<f64>()).sqrt();
            for j in 0..p {
                beta[(s, j)] = b[j];
            }
        }
    }
}

/// Max-norm of `Σ γ_t |τ - 1(y_t < x_t'β)| x_t (y_t - x_t'β)`, summed directly.
pub fn score_max_norm(data: &TimeSeriesDataset, gamma: &[f64], beta: &[f64], tau: f64) -> f64 {
    let p = data.x.ncols();
    let mut g = vec![0.0; p];
    for t in 0..data.y.len() {
        let fit: f64 = (0..p).map(|j| data.x[(t, j)] * beta[j]).sum();
        let r = data.y[t] - fit;
        let w = if data.y[t] < fit { 1.0 - tau } else { tau };
        for j in 0..p {
            g[j] += gamma[t] * w * data.x[(t, j)] * r;
        }
    }
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}
