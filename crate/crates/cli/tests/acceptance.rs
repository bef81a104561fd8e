//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with
//! `cargo test --release -p ehmm-cli --test acceptance`; set
//! `EHMM_ACCEPTANCE=1,2,5` to run a subset.
//!
//! Seeds below were fixed before the first run and are not tuned.

mod common;
#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::path::Path;
use std::time::Instant;

use ehmm_cli::report::{BootstrapDoc, DecodeReport, FitReport, SelectDoc};
use ehmm_core::an::{an_logpdf, AnParams};
use ehmm_core::chain::forward_backward;
use ehmm_core::em::{init_random, m_step_beta, run_from, e_step};
use ehmm_core::eval::{parametric_bootstrap, BootstrapConfig};
use ehmm_core::numeric::{integrate_real_line, log_sum_exp};
use ehmm_core::rng::stream;
use ehmm_core::sim::{run_mc_study, simulate_dgp, DgpSpec, ErrorLaw, McConfig, McReport};
use ehmm_core::{fit, ChainParams, ExpectileLevel, FitConfig};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

const TAUS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
const MC_SEED: u64 = 20_240_601;
const MC_REPS: usize = 100;

/// Gaussian errors, T = 500: bias and standard deviation per
/// (level, [β11, β21, β12, β22]) with β_jk coefficient j of state k.
/// Entries printed as "< 0.001" are taken as 0.001.
const GAUSS_BIAS: [[f64; 4]; 5] = [
    [0.020, 0.001, 0.040, -0.008],
    [0.010, 0.001, 0.013, 0.001],
    [-0.002, 0.004, -0.002, 0.001],
    [-0.018, 0.010, -0.013, -0.003],
    [-0.048, 0.023, -0.027, -0.012],
];
const GAUSS_STD: [[f64; 4]; 5] = [
    [0.093, 0.109, 0.055, 0.067],
    [0.076, 0.093, 0.041, 0.058],
    [0.073, 0.087, 0.037, 0.055],
    [0.080, 0.089, 0.039, 0.058],
    [0.100, 0.101, 0.047, 0.068],
];
/// (state, coefficient) of each table column.
const CELLS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

fn tau(v: f64) -> ExpectileLevel {
    ExpectileLevel::new(v).expect("valid level")
}

/// Shared Monte Carlo runs: criteria 6, 7, 8 and 10 read from the same studies.
#[derive(Default)]
struct Studies {
    gauss_500: Option<McReport>,
    skew_500: Option<McReport>,
    skew_1000: Option<McReport>,
}

fn mc(law: ErrorLaw, n: usize) -> McReport {
    let spec = DgpSpec::two_state_benchmark(law, n);
    let cfg = McConfig {
        taus: TAUS.iter().map(|&t| tau(t)).collect(),
        n_reps: MC_REPS,
        seed: MC_SEED,
        fit: FitConfig::new(2, ExpectileLevel::MEAN),
    };
    run_mc_study(&spec, &cfg).expect("Monte Carlo study")
}

impl Studies {
    fn gauss_500(&mut self) -> &McReport {
        self.gauss_500.get_or_insert_with(|| mc(ErrorLaw::Gaussian, 500))
    }
    fn skew(&mut self, n: usize) -> &McReport {
        let law = ErrorLaw::skew_t(5.0, 2.0).expect("valid law");
        if n == 500 {
            self.skew_500.get_or_insert_with(|| mc(law, 500))
        } else {
            self.skew_1000.get_or_insert_with(|| mc(law, 1000))
        }
    }
}

fn criterion_1() -> Line {
    let mut worst_norm: f64 = 0.0;
    let mut worst_foc: f64 = 0.0;
    let mu = 0.3;
    for &t in &[0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95] {
        for &s in &[0.5, 1.0, 5.0] {
            let p = AnParams::new(mu, s, tau(t)).unwrap();
            let dens = |y: f64| an_logpdf(y, &p).unwrap().exp();
            let mass = integrate_real_line(dens, mu, 1e-12).value;
            let foc = integrate_real_line(
                |y| {
                    let w = if y < mu { 1.0 - t } else { t };
                    w * (y - mu) * dens(y)
                },
                mu,
                1e-12,
            )
            .value;
            worst_norm = worst_norm.max((mass - 1.0).abs());
            worst_foc = worst_foc.max(foc.abs());
        }
    }
    line(
        worst_norm < 1e-6 && worst_foc < 1e-6,
        format!("max |mass-1| = {worst_norm:.1e}, max |FOC| = {worst_foc:.1e} (tol 1e-6)"),
    )
}

/// Log-likelihood by enumerating all K^T state paths.
fn brute_force_loglik(log_em: &DMatrix<f64>, chain: &ChainParams) -> f64 {
    let (n, k) = (log_em.nrows(), log_em.ncols());
    let total = k.pow(n as u32);
    let mut terms = Vec::with_capacity(total);
    let mut path = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for s in path.iter_mut() {
            *s = c % k;
            c /= k;
        }
        let mut lp = chain.initial[path[0]].ln() + log_em[(0, path[0])];
        for t in 1..n {
            lp += chain.transition[(path[t - 1], path[t])].ln() + log_em[(t, path[t])];
        }
        terms.push(lp);
    }
    log_sum_exp(&terms)
}

fn random_simplex<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn criterion_2() -> Line {
    let mut rng = stream(2, 0);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let k = 2 + i % 2;
        let n = 1 + rng.random_range(0..10);
        let initial = random_simplex(k, &mut rng);
        let rows: Vec<f64> = (0..k).flat_map(|_| random_simplex(k, &mut rng)).collect();
        let chain = ChainParams::new(initial, DMatrix::from_row_slice(k, k, &rows)).unwrap();
        let log_em = DMatrix::from_fn(n, k, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal) - 2.0);
        let fb = forward_backward(&log_em, &chain).unwrap().loglik;
        worst = worst.max((fb - brute_force_loglik(&log_em, &chain)).abs());
    }
    line(worst < 1e-10, format!("max |Δ loglik| = {worst:.1e} over 200 instances (tol 1e-10)"))
}

fn criterion_3() -> Line {
    let mut worst_drop: f64 = 0.0;
    let mut worst_score: f64 = 0.0;
    let mut worst_oracle_score: f64 = 0.0;
    let mut failures = Vec::new();
    for d in 0..50u64 {
        let t = [0.1, 0.5, 0.9][(d % 3) as usize];
        let law = if d % 2 == 0 {
            ErrorLaw::Gaussian
        } else {
            ErrorLaw::skew_t(5.0, 2.0).unwrap()
        };
        let spec = DgpSpec::two_state_benchmark(law, 300);
        let (data, _) = simulate_dgp(&spec, &mut stream(3, d)).unwrap();
        let config = FitConfig {
            seed: d,
            ..FitConfig::new(2, tau(t))
        };
        let mut best: Option<ehmm_core::FitResult> = None;
        for s in 0..5u64 {
            let init = match init_random(&data, &config, &mut stream(d, s)) {
                Ok(i) => i,
                Err(e) => {
                    failures.push(format!("dataset {d} start {s}: {e}"));
                    continue;
                }
            };
            match run_from(&data, &config, init) {
                Ok(f) => {
                    for w in f.loglik_trace.windows(2) {
                        worst_drop = worst_drop.max(w[0] - w[1]);
                    }
                    if best.as_ref().is_none_or(|b| f.loglik > b.loglik) {
                        best = Some(f);
                    }
                }
                Err(e) => failures.push(format!("dataset {d} start {s}: {e}")),
            }
        }
        let Some(f) = best else {
            failures.push(format!("dataset {d}: no start succeeded"));
            continue;
        };
        if !f.converged {
            failures.push(format!("dataset {d}: not converged"));
        }
        for &sc in &f.diagnostics.beta_score {
            worst_score = worst_score.max(sc);
        }
        // One more M-step from the final posteriors, scored independently.
        let post = e_step(&data, &f.params).unwrap();
        for k in 0..2 {
            let g: Vec<f64> = (0..data.len()).map(|i| post.gamma[(i, k)]).collect();
            let b = m_step_beta(&data, &g, &f.params.beta_row(k), tau(t), &config, k).unwrap();
            let b: Vec<f64> = b.iter().copied().collect();
            worst_oracle_score = worst_oracle_score.max(oracles::score_max_norm(&data, &g, &b, t));
        }
    }
    let pass = worst_drop <= 1e-8 && worst_score < 1e-6 && worst_oracle_score < 1e-6 && failures.is_empty();
    let mut detail = format!(
        "max loglik decrease {worst_drop:.1e} (slack 1e-8), max β score {worst_score:.1e}, \
         recomputed {worst_oracle_score:.1e} (tol 1e-6)"
    );
    if !failures.is_empty() {
        detail += &format!("; {}", failures.join("; "));
    }
    line(pass, detail)
}

fn criterion_4() -> Line {
    let mut worst: f64 = 0.0;
    for d in 0..10u64 {
        let spec = DgpSpec::two_state_benchmark(ErrorLaw::Gaussian, 300);
        let (data, _) = simulate_dgp(&spec, &mut stream(4, d)).unwrap();
        let config = FitConfig {
            em_tolerance: 1e-10,
            max_em_iterations: 5000,
            ..FitConfig::new(2, ExpectileLevel::MEAN)
        };
        let mut ours_best = f64::NEG_INFINITY;
        let mut oracle_best = f64::NEG_INFINITY;
        for s in 0..3u64 {
            let init = init_random(&data, &config, &mut stream(d, s)).unwrap();
            let ours = run_from(&data, &config, init.clone()).unwrap().loglik;
            let oracle = oracles::gaussian_hmm_regression(&data, &init, 1e-10, 5000).loglik;
            worst = worst.max((ours - oracle).abs());
            ours_best = ours_best.max(ours);
            oracle_best = oracle_best.max(oracle);
        }
        worst = worst.max((ours_best - oracle_best).abs());
    }
    line(worst < 1e-6, format!("max |Δ loglik| = {worst:.1e} over 10 datasets × 3 starts (tol 1e-6)"))
}

fn criterion_5() -> Line {
    let spec = DgpSpec::two_state_benchmark(ErrorLaw::skew_t(5.0, 2.0).unwrap(), 500);
    let (data, _) = simulate_dgp(&spec, &mut stream(5, 0)).unwrap();
    let mut worst: f64 = 0.0;
    for &t in &[0.1, 0.5, 0.9] {
        let f = fit(&data, &FitConfig::new(1, tau(t))).unwrap();
        let oracle = oracles::asymmetric_least_squares(&data, t);
        for (a, b) in f.params.beta_row(0).iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    line(worst < 1e-8, format!("max |Δβ| = {worst:.1e} (tol 1e-8)"))
}

fn criterion_6(studies: &mut Studies) -> Line {
    let r = studies.gauss_500();
    let mut problems = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let mut max_std_dev: f64 = 0.0;
    for (i, &t) in TAUS.iter().enumerate() {
        for (c, &(state, coef)) in CELLS.iter().enumerate() {
            let cell = r.cell(tau(t), state, coef).expect("cell");
            let paper_bias = GAUSS_BIAS[i][c].abs().max(0.001);
            let ratio = cell.bias.abs() / paper_bias;
            max_ratio = max_ratio.max(ratio);
            if ratio > 3.0 {
                problems.push(format!(
                    "τ={t} β{}{} bias {:+.4} vs {:+.3}",
                    coef + 1,
                    state + 1,
                    cell.bias,
                    GAUSS_BIAS[i][c]
                ));
            }
            let rel = (cell.std - GAUSS_STD[i][c]).abs() / GAUSS_STD[i][c];
            max_std_dev = max_std_dev.max(rel);
            if rel > 0.5 {
                problems.push(format!(
                    "τ={t} β{}{} std {:.4} vs {:.3}",
                    coef + 1,
                    state + 1,
                    cell.std,
                    GAUSS_STD[i][c]
                ));
            }
            if t == 0.5 && coef == 1 && cell.bias.abs() > 0.03 {
                problems.push(format!("τ=0.5 slope β2{} bias {:+.4} outside ±0.03", state + 1, cell.bias));
            }
        }
    }
    let level = r.level(tau(0.5)).unwrap();
    let detail = format!(
        "{} fitted / {} failed at τ=0.5; max |bias|/|reported| = {max_ratio:.1}, \
         max relative std gap = {:.0}%{}",
        level.n_fitted,
        level.n_failed,
        100.0 * max_std_dev,
        if problems.is_empty() {
            String::new()
        } else {
            format!("; out of bounds: {}", problems.join(", "))
        }
    );
    line(problems.is_empty(), detail)
}

fn criterion_7(studies: &mut Studies) -> Line {
    let short = studies.skew(500).clone();
    let long = studies.skew(1000);
    let mut problems = Vec::new();
    for &t in &TAUS {
        for &(state, coef) in &CELLS {
            let a = short.cell(tau(t), state, coef).unwrap().std;
            let b = long.cell(tau(t), state, coef).unwrap().std;
            if b >= a {
                problems.push(format!("τ={t} β{}{} std {a:.3} -> {b:.3}", coef + 1, state + 1));
            }
        }
        for coef in 0..2 {
            for (n, rep) in [(500, &short), (1000, long)] {
                let s1 = rep.cell(tau(t), 0, coef).unwrap().std;
                let s2 = rep.cell(tau(t), 1, coef).unwrap().std;
                if s1 <= s2 {
                    problems.push(format!("T={n} τ={t} β{}·: state 1 {s1:.3} <= state 2 {s2:.3}", coef + 1));
                }
            }
        }
    }
    let detail = if problems.is_empty() {
        "all 20 stds shrink from T=500 to T=1000; state-1 stds exceed state-2 at every (τ, β, T)".to_string()
    } else {
        problems.join(", ")
    };
    line(problems.is_empty(), detail)
}

fn criterion_8(studies: &mut Studies) -> Line {
    let skew = studies.skew(500).clone();
    let gauss = studies.gauss_500();
    let mut parts = Vec::new();
    let mut pass = true;
    for &t in &TAUS {
        let g = gauss.level(tau(t)).and_then(|l| l.median_ari()).unwrap_or(f64::NAN);
        let s = skew.level(tau(t)).and_then(|l| l.median_ari()).unwrap_or(f64::NAN);
        pass &= g > s;
        parts.push(format!("τ={t}: {g:.3} vs {s:.3}"));
    }
    line(pass, format!("median ARI Gaussian vs skew-t, {}", parts.join(", ")))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn criterion_9() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let mut picks = Vec::new();
    for seed in 0..20u64 {
        let sim = dir.path().join(format!("sim{seed}"));
        let sel = dir.path().join(format!("sel{seed}"));
        let seed_s = (900 + seed).to_string();
        if common::run(&["simulate", "--scenario", "gaussian", "--t", "500", "--seed", &seed_s, "--out", s(&sim)]) != 0 {
            return line(false, format!("simulate failed for seed {seed_s}"));
        }
        let data = sim.join("simulated.csv");
        let code = common::run(&[
            "select", "--data", s(&data), "--returns", "--response", "y", "--covariates", "x",
            "--tau", "0.5", "--kmin", "1", "--kmax", "4", "--seed", &seed_s, "--out", s(&sel),
        ]);
        if code != 0 {
            return line(false, format!("select failed for seed {seed_s} with exit {code}"));
        }
        let doc: SelectDoc = serde_json::from_slice(&std::fs::read(sel.join("select.json")).unwrap()).unwrap();
        picks.push(doc.best[0].icl.unwrap_or(0));
    }
    let hits = picks.iter().filter(|&&k| k == 2).count();
    line(hits >= 18, format!("ICL chose K=2 in {hits}/20 runs (need 18); choices {picks:?}"))
}

fn criterion_10(studies: &mut Studies) -> Line {
    let mc = studies.gauss_500();
    let mc_std: Vec<f64> = (0..2).map(|k| mc.cell(tau(0.5), k, 1).unwrap().std).collect();
    let spec = DgpSpec::two_state_benchmark(ErrorLaw::Gaussian, 500);
    let (data, _) = simulate_dgp(&spec, &mut stream(10, 0)).unwrap();
    let config = FitConfig {
        seed: 10,
        ..FitConfig::new(2, ExpectileLevel::MEAN)
    };
    let f = fit(&data, &config).unwrap();
    let report = match parametric_bootstrap(&f, &data, &config, &BootstrapConfig::new(200, 10)) {
        Ok(r) => r,
        Err(e) => return line(false, format!("bootstrap failed: {e}")),
    };
    // state with the positive slope is the first DGP state
    let first = if f.params.beta[(0, 1)] > 0.0 { 0 } else { 1 };
    let se = [report.se.beta[(first, 1)], report.se.beta[(1 - first, 1)]];
    let rel: Vec<f64> = (0..2).map(|k| (se[k] - mc_std[k]).abs() / mc_std[k]).collect();
    line(
        rel.iter().all(|&r| r <= 0.5),
        format!(
            "slope SEs {:.4}, {:.4} vs MC stds {:.4}, {:.4} (relative gaps {:.0}%, {:.0}%; {} of 200 refits converged)",
            se[0], se[1], mc_std[0], mc_std[1], 100.0 * rel[0], 100.0 * rel[1], report.n_converged
        ),
    )
}

fn criterion_11() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("prices.csv");
    common::write_five_asset_csv(&csv, 2100, 11);
    let out = dir.path().join("out");
    let mut problems = Vec::new();
    let steps: [Vec<String>; 3] = [
        ["fit", "--data", s(&csv), "--response", "BTC", "--covariates", "SP500,GOLD,OIL,USD",
         "--tau", "0.5", "--states", "2", "--seed", "11", "--out", s(&out)]
            .map(String::from)
            .to_vec(),
        ["decode", "--fit", s(&out.join("fit.json")), "--data", s(&csv), "--out", s(&out)]
            .map(String::from)
            .to_vec(),
        ["bootstrap", "--fit", s(&out.join("fit.json")), "--data", s(&csv), "--replicates", "100",
         "--starts", "5", "--out", s(&out)]
            .map(String::from)
            .to_vec(),
    ];
    for step in &steps {
        let v: Vec<&str> = step.iter().map(String::as_str).collect();
        let code = common::run(&v);
        if code != 0 {
            return line(false, format!("`{}` exited with {code}", step[0]));
        }
    }
    let read = |name: &str| std::fs::read(out.join(name)).unwrap();
    let fit: FitReport = match serde_json::from_slice(&read("fit.json")) {
        Ok(f) => f,
        Err(e) => return line(false, format!("fit.json: {e}")),
    };
    let dec: DecodeReport = match serde_json::from_slice(&read("decode.json")) {
        Ok(f) => f,
        Err(e) => return line(false, format!("decode.json: {e}")),
    };
    let boot: BootstrapDoc = match serde_json::from_slice(&read("bootstrap.json")) {
        Ok(f) => f,
        Err(e) => return line(false, format!("bootstrap.json: {e}")),
    };
    let n = fit.data.n_obs;
    if !(2000..2100).contains(&n) {
        problems.push(format!("unexpected T = {n}"));
    }
    if fit.params.beta.len() != 2 || fit.params.beta.iter().any(|r| r.len() != 5) {
        problems.push("coefficient matrix is not 2×5".into());
    }
    if dec.n_obs != n || dec.state_counts.iter().sum::<usize>() != n {
        problems.push("decode counts disagree with T".into());
    }
    let decoded = String::from_utf8(read("decoded.csv")).unwrap();
    let mut rows = 0;
    for l in decoded.lines().skip(1) {
        rows += 1;
        let f: Vec<&str> = l.split(',').collect();
        let p: f64 = f[2..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        if f.len() != 4 || (p - 1.0).abs() > 1e-9 || !["1", "2"].contains(&f[1]) {
            problems.push(format!("bad decoded row '{l}'"));
            break;
        }
    }
    if rows != n {
        problems.push(format!("decoded.csv has {rows} rows, expected {n}"));
    }
    if boot.coefficients.len() != 12 || boot.coefficients.iter().any(|c| !(c.se.is_finite() && c.se > 0.0)) {
        problems.push("bootstrap table malformed".into());
    }
    if boot.n_converged < 50 {
        problems.push(format!("only {} bootstrap refits converged", boot.n_converged));
    }
    let detail = if problems.is_empty() {
        format!(
            "fit/decode/bootstrap on a 5-asset CSV: T = {n}, {} of 100 refits converged, reports parse against their schemas",
            boot.n_converged
        )
    } else {
        problems.join("; ")
    };
    line(problems.is_empty(), detail)
}

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("EHMM_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |i: u32| selected.as_ref().is_none_or(|s| s.contains(&i));
    let mut studies = Studies::default();
    let mut failed = 0;
    for i in 1..=11u32 {
        if !wanted(i) {
            continue;
        }
        let start = Instant::now();
        let result = match i {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(&mut studies),
            7 => criterion_7(&mut studies),
            8 => criterion_8(&mut studies),
            9 => criterion_9(),
            10 => criterion_10(&mut studies),
            _ => criterion_11(),
        };
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {i:>2}: {} [{:.1}s] {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
