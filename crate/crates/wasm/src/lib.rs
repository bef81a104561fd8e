//! WebAssembly bindings for the browser demo in `www/`. Three operations are
//! exposed: the asymmetric-normal density on a grid, simulate-then-fit on the
//! two-state benchmark, and a state-count sweep with AIC/BIC/ICL.
//!
//! The JSON-producing functions are plain Rust (`*_json`) so they can be
//! tested natively; the `#[wasm_bindgen]` wrappers only convert errors.

use ehmm_core::an::{an_logpdf, AnParams};
use ehmm_core::eval::{adjusted_rand_index, best_permutation, decode, select_states};
use ehmm_core::rng::stream;
use ehmm_core::sim::{simulate_dgp, DgpSpec, ErrorLaw};
use ehmm_core::{fit, ExpectileLevel, FitConfig, TimeSeriesDataset};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest series the demo accepts; fits run on the page's main thread.
pub const MAX_OBS: usize = 5000;

fn level(tau: f64) -> Result<ExpectileLevel, String> {
    ExpectileLevel::new(tau).map_err(|e| e.to_string())
}

fn scenario(name: &str, n_obs: usize) -> Result<DgpSpec, String> {
    if !(10..=MAX_OBS).contains(&n_obs) {
        return Err(format!("series length must be between 10 and {MAX_OBS}"));
    }
    let law = match name {
        "gaussian" => ErrorLaw::Gaussian,
        "skewt" => ErrorLaw::skew_t(5.0, 2.0).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown scenario '{other}' (gaussian or skewt)")),
    };
    Ok(DgpSpec::two_state_benchmark(law, n_obs))
}

/// Density values on `n` equally spaced points of `[lo, hi]`.
pub fn density_curve(mu: f64, sigma: f64, tau: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = AnParams::new(mu, sigma, level(tau)?).map_err(|e| e.to_string())?;
    if !(lo < hi) || n < 2 || n > 100_000 {
        return Err("need lo < hi and 2 <= n <= 100000".into());
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            an_logpdf(lo + i as f64 * step, &p)
                .map(f64::exp)
                .map_err(|e| e.to_string())
        })
        .collect()
}

#[derive(Serialize)]
struct FitView {
    y: Vec<f64>,
    x: Vec<f64>,
    true_states: Vec<usize>,
    decoded: Vec<usize>,
    /// Smoothed probability of the state matched to the first true state.
    prob_first: Vec<f64>,
    beta: Vec<Vec<f64>>,
    true_beta: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    transition: Vec<Vec<f64>>,
    loglik: f64,
    ari: f64,
    iterations: usize,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn simulate(name: &str, n_obs: usize, seed: u32) -> Result<(DgpSpec, TimeSeriesDataset, Vec<usize>), String> {
    let spec = scenario(name, n_obs)?;
    let (data, path) = simulate_dgp(&spec, &mut stream(u64::from(seed), 0)).map_err(|e| e.to_string())?;
    Ok((spec, data, path))
}

/// Simulate the benchmark, fit a two-state model at `tau` and report the
/// estimates with states matched to the truth.
pub fn simulate_and_fit_json(name: &str, n_obs: usize, tau: f64, seed: u32, starts: usize) -> Result<String, String> {
    let (spec, data, path) = simulate(name, n_obs, seed)?;
    let t = level(tau)?;
    let config = FitConfig {
        n_starts: starts.clamp(1, 50),
        seed: u64::from(seed),
        ..FitConfig::new(2, t)
    };
    let f = fit(&data, &config).map_err(|e| e.to_string())?;
    let truth = spec.truth_at(t);
    let order = best_permutation(2, |o| {
        o.iter()
            .enumerate()
            .map(|(s, &k)| (0..2).map(|j| (f.params.beta[(k, j)] - truth[(s, j)]).powi(2)).sum::<f64>())
            .sum()
    });
    let params = f.params.permuted(&order);
    let post = f.posteriors.permuted(&order);
    let decoded = decode(&post);
    let ari = adjusted_rand_index(&decoded, &path).map_err(|e| e.to_string())?;
    let view = FitView {
        y: data.y.clone(),
        x: (0..data.len()).map(|i| data.x[(i, 1)]).collect(),
        true_states: path,
        decoded,
        prob_first: (0..data.len()).map(|i| post.gamma[(i, 0)]).collect(),
        beta: rows(&params.beta),
        true_beta: rows(&truth),
        sigma: params.sigma.clone(),
        transition: rows(&params.chain.transition),
        loglik: f.loglik,
        ari,
        iterations: f.n_iterations,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Simulate the benchmark and tabulate AIC, BIC and ICL for K = 1..=kmax.
pub fn select_json(name: &str, n_obs: usize, tau: f64, kmax: usize, seed: u32, starts: usize) -> Result<String, String> {
    if !(1..=5).contains(&kmax) {
        return Err("kmax must be between 1 and 5".into());
    }
    let (_, data, _) = simulate(name, n_obs, seed)?;
    let t = level(tau)?;
    let base = FitConfig {
        n_starts: starts.clamp(1, 50),
        seed: u64::from(seed),
        ..FitConfig::new(1, t)
    };
    let report = select_states(&data, 1..=kmax, &[t], &base).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = anDensity)]
pub fn an_density(mu: f64, sigma: f64, tau: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    density_curve(mu, sigma, tau, lo, hi, n).map_err(js)
}

#[wasm_bindgen(js_name = simulateAndFit)]
pub fn simulate_and_fit(scenario: &str, n_obs: usize, tau: f64, seed: u32, starts: usize) -> Result<String, JsError> {
    simulate_and_fit_json(scenario, n_obs, tau, seed, starts).map_err(js)
}

#[wasm_bindgen(js_name = selectStates)]
pub fn select(scenario: &str, n_obs: usize, tau: f64, kmax: usize, seed: u32, starts: usize) -> Result<String, JsError> {
    select_json(scenario, n_obs, tau, kmax, seed, starts).map_err(js)
}
