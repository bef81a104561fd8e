//! Synthetic input files for command-line tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use ehmm_core::rng::stream;
use ehmm_core::sim::{DgpSpec, ErrorLaw};
use rand::Rng;
use rand_distr::StandardNormal;

pub const ASSETS: [&str; 5] = ["BTC", "SP500", "GOLD", "OIL", "USD"];

/// Wide price CSV for five assets over `n_days` weekdays. The first asset's
/// returns follow a two-state regression on the other four. A few cells are
/// left empty so that calendar alignment drops dates.
pub fn write_five_asset_csv(path: &Path, n_days: usize, seed: u64) {
    let mut rng = stream(seed, 0);
    let spec = DgpSpec::two_state_benchmark(ErrorLaw::Gaussian, n_days);
    let states = spec.chain.sample_path(n_days, &mut rng);
    let coef = [[-0.5, 1.5, 0.3, -0.2, 0.1], [0.5, 0.2, -0.4, 0.6, -1.0]];
    let mut prices = [100.0f64, 2000.0, 1200.0, 60.0, 95.0];
    let mut date = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
    let mut text = format!("date,{}\n", ASSETS.join(","));
    for (t, &s) in states.iter().enumerate() {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().unwrap();
        }
        if t > 0 {
            let x: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let e: f64 = rng.sample(StandardNormal);
            let r0 = coef[s][0] + (0..4).map(|j| coef[s][j + 1] * x[j]).sum::<f64>() + e;
            prices[0] *= (r0 / 100.0).exp();
            for j in 0..4 {
                prices[j + 1] *= (x[j] / 100.0).exp();
            }
        }
        write!(text, "{date}").unwrap();
        for (j, p) in prices.iter().enumerate() {
            if t > 0 && t % 97 == 0 && j == (t / 97) % 5 {
                text.push(',');
            } else {
                write!(text, ",{p:.6}").unwrap();
            }
        }
        text.push('\n');
        date = date.succ_opt().unwrap();
    }
    std::fs::write(path, text).unwrap();
}

pub fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["ehmm"];
    argv.extend_from_slice(args);
    ehmm_cli::run(argv)
}
