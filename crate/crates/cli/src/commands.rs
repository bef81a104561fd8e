//! Subcommand implementations.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use ehmm_core::data::descriptive_stats;
use ehmm_core::em::{e_step, Diagnostics};
use ehmm_core::eval::{
    coefficient_table, decode, information_criteria, parametric_bootstrap, select_states,
    Alignment, BootstrapConfig, Criterion,
};
use ehmm_core::rng::stream;
use ehmm_core::sim::{run_mc_study, simulate_dgp, DgpSpec, ErrorLaw, McConfig};
use ehmm_core::{fit, ExpectileLevel, FitConfig, FitResult};

use crate::args::{
    AlignmentArg, BootstrapArgs, Cli, Command, DecodeArgs, DescribeArgs, EstimationArgs, FitArgs,
    McStudyArgs, ReplayArgs, Scenario, SelectArgs, SimulateArgs,
};
use crate::input::{load_all_returns, load_config, load_dataset, read_bytes, sha256_hex, LoadedData};
use crate::output::{num, Outputs};
use crate::report::*;
use crate::CliError;

pub fn dispatch(cli: Cli, argv: &[OsString]) -> Result<Vec<PathBuf>, CliError> {
    let args = recorded_args(argv)?;
    match cli.command {
        Command::Fit(a) => cmd_fit(a, args),
        Command::Select(a) => cmd_select(a, args),
        Command::Decode(a) => cmd_decode(a, args),
        Command::Bootstrap(a) => cmd_bootstrap(a, args),
        Command::Describe(a) => cmd_describe(a, args),
        Command::Simulate(a) => cmd_simulate(a, args),
        Command::McStudy(a) => cmd_mc_study(a, args),
        Command::Replay(a) => cmd_replay(a),
    }
}

/// Arguments after the program name with `--out` removed.
fn recorded_args(argv: &[OsString]) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv.iter().skip(1) {
        let s = a
            .to_str()
            .ok_or_else(|| CliError::Usage("arguments must be valid UTF-8".into()))?;
        if skip {
            skip = false;
        } else if s == "--out" {
            skip = true;
        } else if !s.starts_with("--out=") {
            out.push(s.to_string());
        }
    }
    Ok(out)
}

fn manifest(
    args: Vec<String>,
    seed: Option<u64>,
    config: Option<FitConfig>,
    inputs: Vec<InputDigest>,
) -> RunManifest {
    RunManifest {
        tool: "ehmm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: args.first().cloned().unwrap_or_default(),
        args,
        seed,
        config,
        inputs,
    }
}

fn digest_of(role: &str, path: &Path, sha256: String) -> InputDigest {
    InputDigest {
        role: role.into(),
        path: path.display().to_string(),
        sha256,
    }
}

fn resolve_config(
    est: &EstimationArgs,
    base: FitConfig,
    inputs: &mut Vec<InputDigest>,
) -> Result<FitConfig, CliError> {
    let mut cfg = base;
    if let Some(path) = &est.config {
        let (file, sha) = load_config(path)?;
        inputs.push(digest_of("config", path, sha));
        if let Some(f) = file.fit {
            cfg = f;
        }
    }
    if let Some(s) = est.starts {
        cfg.n_starts = s;
    }
    if let Some(s) = est.seed {
        cfg.seed = s;
    }
    if let Some(t) = est.tolerance {
        cfg.em_tolerance = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn coefficient_names(covariates: &[String]) -> Vec<String> {
    std::iter::once("intercept".to_string())
        .chain(covariates.iter().cloned())
        .collect()
}

fn data_summary(d: &LoadedData, returns: bool) -> DataSummary {
    let labels = d.dataset.labels.clone().unwrap_or_default();
    DataSummary {
        response: d.response.clone(),
        covariates: d.covariates.clone(),
        returns_input: returns,
        n_obs: d.dataset.len(),
        first_label: labels.first().cloned().unwrap_or_default(),
        last_label: labels.last().cloned().unwrap_or_default(),
        dropped: d
            .dropped
            .iter()
            .map(|(s, c)| DroppedCount {
                series: s.clone(),
                count: *c,
            })
            .collect(),
    }
}

fn cmd_fit(a: FitArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let mut inputs = Vec::new();
    let mut cfg = resolve_config(&a.estimation, FitConfig::default(), &mut inputs)?;
    if let Some(k) = a.states {
        cfg.n_states = k;
    }
    if let Some(t) = a.tau {
        cfg.tau = t;
    }
    cfg.validate()?;
    let data = load_dataset(&a.data.data, &a.data.response, &a.data.covariates, a.data.returns)?;
    inputs.insert(0, digest_of("data", &a.data.data, data.digest.clone()));
    let result = fit(&data.dataset, &cfg)?;
    let crit = information_criteria(&result, data.dataset.len());
    let report = FitReport {
        manifest: manifest(args, Some(cfg.seed), Some(cfg.clone()), inputs),
        data: data_summary(&data, a.data.returns),
        model: ModelSummary {
            n_states: cfg.n_states,
            tau: cfg.tau,
            loglik: result.loglik,
            n_iterations: result.n_iterations,
            converged: result.converged,
            start_index: result.start_index,
            n_params: crit.n_params,
            aic: crit.aic,
            bic: crit.bic,
            icl: crit.icl,
            entropy: crit.entropy,
        },
        params: ParamsDoc::new(&result.params, coefficient_names(&data.covariates)),
        diagnostics: result.diagnostics,
    };
    let mut out = Outputs::new();
    out.add_json("fit.json", &report)?;
    out.commit(&a.out)
}

fn cmd_select(a: SelectArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    if a.kmin == 0 || a.kmin > a.kmax {
        return Err(CliError::Usage(format!(
            "--kmin {} / --kmax {}: need 1 <= kmin <= kmax",
            a.kmin, a.kmax
        )));
    }
    let mut inputs = Vec::new();
    let cfg = resolve_config(&a.estimation, FitConfig::default(), &mut inputs)?;
    let taus = if a.tau.is_empty() { vec![cfg.tau] } else { a.tau.clone() };
    let data = load_dataset(&a.data.data, &a.data.response, &a.data.covariates, a.data.returns)?;
    inputs.insert(0, digest_of("data", &a.data.data, data.digest.clone()));
    let report = select_states(&data.dataset, a.kmin..=a.kmax, &taus, &cfg)?;
    let best = taus
        .iter()
        .map(|&t| BestStates {
            tau: t,
            aic: report.best(Criterion::Aic, t),
            bic: report.best(Criterion::Bic, t),
            icl: report.best(Criterion::Icl, t),
        })
        .collect();
    let header: Vec<String> = ["tau", "states", "loglik", "n_params", "aic", "bic", "icl", "entropy"]
        .map(String::from)
        .to_vec();
    let table: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.tau.value()),
                r.n_states.to_string(),
                num(r.loglik),
                r.n_params.to_string(),
                num(r.aic),
                num(r.bic),
                num(r.icl),
                num(r.entropy),
            ]
        })
        .collect();
    let doc = SelectDoc {
        manifest: manifest(args, Some(cfg.seed), Some(cfg), inputs),
        rows: report.rows,
        failures: report.failures,
        best,
        table: "criteria.csv".into(),
    };
    let mut out = Outputs::new();
    out.add_json("select.json", &doc)?;
    out.add_csv("criteria.csv", &header, &table)?;
    out.commit(&a.out)
}

/// A saved fit together with the dataset it was estimated on.
struct Restored {
    report: FitReport,
    data: LoadedData,
    result: FitResult,
    inputs: Vec<InputDigest>,
}

fn restore_fit(fit_path: &Path, data_path: &Path) -> Result<Restored, CliError> {
    let bytes = read_bytes(fit_path)?;
    let report: FitReport = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: not a fit report: {e}", fit_path.display())))?;
    let s = &report.data;
    let data = load_dataset(data_path, &s.response, &s.covariates, s.returns_input)?;
    if let Some(expected) = report.manifest.inputs.iter().find(|i| i.role == "data") {
        if expected.sha256 != data.digest {
            return Err(CliError::Data(format!(
                "{}: contents differ from the data the fit used ({})",
                data_path.display(),
                expected.path
            )));
        }
    }
    let params = report.params.to_params()?;
    if params.n_regressors() != data.dataset.n_regressors() {
        return Err(CliError::Data("fit report and data disagree on the regressors".into()));
    }
    let posteriors = e_step(&data.dataset, &params)?;
    let result = FitResult {
        loglik: posteriors.loglik,
        params,
        posteriors,
        n_iterations: report.model.n_iterations,
        converged: report.model.converged,
        start_index: report.model.start_index,
        loglik_trace: vec![],
        diagnostics: Diagnostics::default(),
    };
    let inputs = vec![
        digest_of("fit", fit_path, sha256_hex(&bytes)),
        digest_of("data", data_path, data.digest.clone()),
    ];
    Ok(Restored {
        report,
        data,
        result,
        inputs,
    })
}

fn cmd_decode(a: DecodeArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let r = restore_fit(&a.fit, &a.data)?;
    let states = decode(&r.result.posteriors);
    let k = r.result.n_states();
    let labels = r.data.dataset.labels.clone().unwrap_or_default();
    let mut header = vec!["label".to_string(), "state".to_string()];
    header.extend((1..=k).map(|s| format!("prob_state{s}")));
    let table: Vec<Vec<String>> = states
        .iter()
        .enumerate()
        .map(|(t, &s)| {
            let mut row = vec![labels[t].clone(), (s + 1).to_string()];
            row.extend((0..k).map(|j| num(r.result.posteriors.gamma[(t, j)])));
            row
        })
        .collect();
    let mut counts = vec![0; k];
    for &s in &states {
        counts[s] += 1;
    }
    let doc = DecodeReport {
        manifest: manifest(args, None, r.report.manifest.config.clone(), r.inputs),
        n_obs: states.len(),
        n_states: k,
        loglik: r.result.loglik,
        state_counts: counts,
        table: "decoded.csv".into(),
    };
    let mut out = Outputs::new();
    out.add_json("decode.json", &doc)?;
    out.add_csv("decoded.csv", &header, &table)?;
    out.commit(&a.out)
}

fn cmd_bootstrap(a: BootstrapArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let r = restore_fit(&a.fit, &a.data)?;
    let cfg = r
        .report
        .manifest
        .config
        .clone()
        .ok_or_else(|| CliError::Data(format!("{}: manifest lacks the fit settings", a.fit.display())))?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let boot = BootstrapConfig {
        replicates: a.replicates,
        seed,
        alignment: match a.alignment {
            AlignmentArg::Nearest => Alignment::NearestToReference,
            AlignmentArg::Scale => Alignment::ScaleOrder,
        },
        n_starts: a.starts,
    };
    let report = parametric_bootstrap(&r.result, &r.data.dataset, &cfg, &boot)?;
    let rows = coefficient_table(&r.result.params, &report, &r.report.params.coefficient_names);
    let coefficients: Vec<CoefficientDoc> = rows
        .iter()
        .map(|c| CoefficientDoc {
            state: c.state + 1,
            parameter: c.parameter.clone(),
            estimate: c.estimate,
            se: c.se,
            significant: c.significant,
        })
        .collect();
    let header: Vec<String> = ["state", "parameter", "estimate", "se", "significant"]
        .map(String::from)
        .to_vec();
    let table: Vec<Vec<String>> = coefficients
        .iter()
        .map(|c| {
            vec![
                c.state.to_string(),
                c.parameter.clone(),
                num(c.estimate),
                num(c.se),
                c.significant.to_string(),
            ]
        })
        .collect();
    let doc = BootstrapDoc {
        manifest: manifest(args, Some(seed), Some(cfg), r.inputs),
        replicates: report.replicates,
        n_converged: report.n_converged,
        alignment: report.alignment,
        coefficients,
        standard_errors: StandardErrorsDoc::new(&report.se),
        table: "coefficients.csv".into(),
    };
    let mut out = Outputs::new();
    out.add_json("bootstrap.json", &doc)?;
    out.add_csv("coefficients.csv", &header, &table)?;
    out.commit(&a.out)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "NA".into())
}

fn cmd_describe(a: DescribeArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let (series, sha) = load_all_returns(&a.data, a.returns)?;
    let stats: Vec<SeriesStats> = series
        .iter()
        .map(|(name, values)| {
            descriptive_stats(values)
                .map(|stats| SeriesStats {
                    series: name.clone(),
                    stats,
                })
                .map_err(|e| CliError::Data(format!("column '{name}': {e}")))
        })
        .collect::<Result<_, _>>()?;
    let header: Vec<String> = ["series", "n", "min", "mean", "max", "std", "skewness", "kurtosis"]
        .map(String::from)
        .to_vec();
    let table: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.series.clone(),
                s.stats.n.to_string(),
                num(s.stats.min),
                num(s.stats.mean),
                num(s.stats.max),
                num(s.stats.std),
                opt_num(s.stats.skewness),
                opt_num(s.stats.kurtosis),
            ]
        })
        .collect();
    let doc = DescribeDoc {
        manifest: manifest(args, None, None, vec![digest_of("data", &a.data, sha)]),
        series: stats,
        table: "describe.csv".into(),
    };
    let mut out = Outputs::new();
    out.add_json("describe.json", &doc)?;
    out.add_csv("describe.csv", &header, &table)?;
    out.commit(&a.out)
}

fn scenario_spec(s: Scenario, n_obs: usize) -> Result<(&'static str, DgpSpec), CliError> {
    Ok(match s {
        Scenario::Gaussian => ("gaussian", DgpSpec::two_state_benchmark(ErrorLaw::Gaussian, n_obs)),
        Scenario::Skewt => ("skewt", DgpSpec::two_state_benchmark(ErrorLaw::skew_t(5.0, 2.0)?, n_obs)),
    })
}

fn cmd_simulate(a: SimulateArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let (name, spec) = scenario_spec(a.scenario, a.t)?;
    spec.validate()?;
    let (data, path) = simulate_dgp(&spec, &mut stream(a.seed, 0))?;
    let header: Vec<String> = ["t", "y", "x", "state"].map(String::from).to_vec();
    let table: Vec<Vec<String>> = (0..data.len())
        .map(|t| {
            vec![
                (t + 1).to_string(),
                num(data.y[t]),
                num(data.x[(t, 1)]),
                (path[t] + 1).to_string(),
            ]
        })
        .collect();
    let doc = SimulateDoc {
        manifest: manifest(args, Some(a.seed), None, vec![]),
        scenario: ScenarioDoc::new(name, &spec),
        table: "simulated.csv".into(),
    };
    let mut out = Outputs::new();
    out.add_json("simulate.json", &doc)?;
    out.add_csv("simulated.csv", &header, &table)?;
    out.commit(&a.out)
}

pub const DEFAULT_MC_TAUS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn cmd_mc_study(a: McStudyArgs, args: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let (name, spec) = scenario_spec(a.scenario, a.t)?;
    let mut inputs = Vec::new();
    let base = FitConfig::new(spec.n_states(), ExpectileLevel::MEAN);
    let cfg = resolve_config(&a.estimation, base, &mut inputs)?;
    let taus: Vec<ExpectileLevel> = if a.tau.is_empty() {
        DEFAULT_MC_TAUS
            .iter()
            .map(|&t| ExpectileLevel::new(t))
            .collect::<Result<_, _>>()?
    } else {
        a.tau.clone()
    };
    let mc = McConfig {
        taus: taus.clone(),
        n_reps: a.replications,
        seed: cfg.seed,
        fit: cfg.clone(),
    };
    let report = run_mc_study(&spec, &mc)?;

    let param_name = |state: usize, coef: usize| format!("beta{}{}", coef + 1, state + 1);
    let cells: Vec<McCellDoc> = report
        .cells
        .iter()
        .map(|c| McCellDoc {
            tau: c.tau,
            state: c.state + 1,
            parameter: param_name(c.state, c.coefficient),
            truth: c.truth,
            bias: c.bias,
            std: c.std,
            n: c.n,
        })
        .collect();
    let levels: Vec<McLevelDoc> = report
        .levels
        .iter()
        .map(|l| McLevelDoc {
            tau: l.tau,
            n_fitted: l.n_fitted,
            n_failed: l.n_failed,
            n_unconverged: l.n_unconverged,
            median_ari: l.median_ari(),
        })
        .collect();

    // Table layout: one row per state coefficient, bias/std pairs per level.
    let mut header = vec!["state".to_string(), "parameter".to_string()];
    for t in &taus {
        header.push(format!("bias_{}", t.value()));
        header.push(format!("std_{}", t.value()));
    }
    let mut table = Vec::new();
    for state in 0..spec.n_states() {
        for coef in 0..spec.beta.ncols() {
            let mut row = vec![(state + 1).to_string(), param_name(state, coef)];
            for &t in &taus {
                let c = report
                    .cell(t, state, coef)
                    .ok_or_else(|| CliError::Numerical(format!("no estimates at tau = {}", t.value())))?;
                row.push(num(c.bias));
                row.push(num(c.std));
            }
            table.push(row);
        }
    }
    let ari_header: Vec<String> = ["tau", "replication", "ari"].map(String::from).to_vec();
    let mut ari_rows = Vec::new();
    for l in &report.levels {
        for (r, v) in l.ari.iter().enumerate() {
            ari_rows.push(vec![num(l.tau.value()), (r + 1).to_string(), opt_num(*v)]);
        }
    }
    let doc = McStudyDoc {
        manifest: manifest(args, Some(cfg.seed), Some(cfg), inputs),
        scenario: ScenarioDoc::new(name, &spec),
        replications: report.n_replications,
        cells,
        levels,
        tables: vec!["mc_table.csv".into(), "ari.csv".into()],
    };
    let mut out = Outputs::new();
    out.add_json("mc_report.json", &doc)?;
    out.add_csv("mc_table.csv", &header, &table)?;
    out.add_csv("ari.csv", &ari_header, &ari_rows)?;
    out.commit(&a.out)
}

fn cmd_replay(a: ReplayArgs) -> Result<Vec<PathBuf>, CliError> {
    #[derive(serde::Deserialize)]
    struct WithManifest {
        manifest: RunManifest,
    }
    let bytes = read_bytes(&a.report)?;
    let doc: WithManifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: no run manifest: {e}", a.report.display())))?;
    let m = doc.manifest;
    if m.command == "replay" || m.args.is_empty() {
        return Err(CliError::Data(format!("{}: manifest has no command to replay", a.report.display())));
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        return Err(CliError::Data(format!(
            "report was written by version {}, this is {}",
            m.version,
            env!("CARGO_PKG_VERSION")
        )));
    }
    for input in &m.inputs {
        let current = sha256_hex(&read_bytes(Path::new(&input.path))?);
        if current != input.sha256 {
            return Err(CliError::Data(format!(
                "{} ({}) changed since the report was written",
                input.path, input.role
            )));
        }
    }
    let mut argv: Vec<OsString> = vec!["ehmm".into()];
    argv.extend(m.args.iter().map(OsString::from));
    argv.push("--out".into());
    argv.push(a.out.clone().into_os_string());
    let cli = <Cli as clap::Parser>::try_parse_from(&argv)
        .map_err(|e| CliError::Usage(format!("recorded arguments no longer parse: {e}")))?;
    dispatch(cli, &argv)
}
