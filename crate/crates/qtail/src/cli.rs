//! Command-line front end.
//!
//! Subcommands: `plan` (horizon and accuracy planning), `estimate` (tail
//! probability), `certify` (threshold certification), `verify` (empirical
//! checks of the analytic bounds), `resources` (qubit and gate accounting),
//! and `qae-scaling` (query-count series versus accuracy).
//!
//! Reports go to stdout or `--out` as JSON (or CSV for series); progress
//! lines go to stderr. Exit codes: 0 success, 1 runtime or verification
//! failure, 2 invalid configuration or usage.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{EstimatorKind, ModelConfig, RunConfig};
use crate::harness;
use crate::planner;
use crate::qae;
use crate::seed::SeedStream;

#[derive(Debug, Parser)]
#[command(name = "qtail", version, about = "Tail-probability estimation for regenerative queueing models")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker thread count.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resolve horizon, clip level, and per-estimate accuracy.
    Plan(CommonArgs),
    /// Estimate the delay tail probability.
    Estimate(CommonArgs),
    /// Certify the tail probability below 10^-digits.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        digits: u32,
    },
    /// Check analytic tail and bias bounds against simulation.
    Verify(CommonArgs),
    /// Count qubits and gates for the reversible cycle oracle.
    Resources {
        #[command(flatten)]
        common: CommonArgs,
        /// Fixed-point width per sampled value register.
        #[arg(long, default_value_t = 8)]
        value_bits: u64,
    },
    /// Oracle-query series of the amplified estimator versus the classical
    /// baseline over a range of accuracy targets.
    QaeScaling {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of accuracy points, halving eps each step.
        #[arg(long, default_value_t = 6)]
        points: u32,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap renders --help/--version through the same path.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError::Config(e)) => {
            eprintln!("{e}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

enum CliError {
    Config(crate::config::ConfigError),
    Runtime(String),
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn load(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply_env(|k| std::env::var(k).ok())?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = common.threads {
        cfg.threads = Some(t);
    }
    Ok(cfg)
}

fn in_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match cfg.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Command::Plan(common) => {
            let cfg = load(&common)?;
            let report = plan_report(&cfg)?;
            emit(&common, &report)?;
            Ok(0)
        }
        Command::Estimate(common) => {
            let cfg = load(&common)?;
            eprintln!("estimating with seed {} over {} cycles", cfg.master_seed, cfg.cycles);
            let report = in_pool(&cfg, || estimate_report(&cfg))??;
            emit(&common, &report)?;
            Ok(0)
        }
        Command::Certify { common, digits } => {
            let cfg = load(&common)?;
            let (report, certified) = in_pool(&cfg, || certify_report(&cfg, digits))??;
            emit(&common, &report)?;
            Ok(if certified { 0 } else { 1 })
        }
        Command::Verify(common) => {
            let cfg = load(&common)?;
            let (report, holds) = in_pool(&cfg, || verify_report(&cfg))??;
            emit(&common, &report)?;
            Ok(if holds { 0 } else { 1 })
        }
        Command::Resources { common, value_bits } => {
            let cfg = load(&common)?;
            let report = resources_report(&cfg, value_bits)?;
            emit(&common, &report)?;
            Ok(0)
        }
        Command::QaeScaling { common, points } => {
            let cfg = load(&common)?;
            let report = scaling_report(&cfg, points)?;
            emit(&common, &report)?;
            Ok(0)
        }
    }
}

fn gg1_plan(cfg: &RunConfig) -> Result<planner::HorizonPlan, CliError> {
    match &cfg.model {
        ModelConfig::Gg1 {
            arrival,
            service,
            arrival_tail,
            service_tail,
            ..
        } => planner::plan_gg1(arrival, service, arrival_tail, service_tail, cfg.eps_tot)
            .map_err(|e| runtime(e.to_string())),
        _ => Err(runtime("this operation needs a gg1 model")),
    }
}

fn plan_report(cfg: &RunConfig) -> Result<Value, CliError> {
    let body = match &cfg.model {
        ModelConfig::Gg1 { .. } => serde_json::to_value(gg1_plan(cfg)?).unwrap(),
        ModelConfig::Wireless { drift, .. } => {
            let spec = drift.ok_or_else(|| runtime("wireless planning needs model.drift"))?;
            let tail = planner::solve_eta(&spec).map_err(|e| runtime(e.to_string()))?;
            // Smallest M with c_tau e^{-eta M} / (1 - e^{-eta}) <= eps_tot / 2.
            let denom = -(-tail.eta).exp_m1();
            let m = ((2.0 * tail.c_tau / (cfg.eps_tot * denom)).ln() / tail.eta).ceil().max(1.0) as u64;
            let bias = tail.c_tau * (-tail.eta * m as f64).exp() / denom;
            json!({
                "tail": tail,
                "horizon_m": m,
                "truncation_bound": bias,
                "eps_q": planner::allocate_qae_accuracy(cfg.eps_tot, m, false),
            })
        }
        ModelConfig::Jsq { .. } => {
            let params = cfg.jsq_params().expect("validated jsq model");
            let (lambda_b, mu_b) = params.clipped_rates();
            json!({
                "clipped_arrival_rate": lambda_b,
                "clipped_service_rate": mu_b,
                "stable": params.clipped_stable(),
                "minorization_delta": crate::jsq::minorization_delta(params.lambda, params.split_eps),
                "arrival_cap": params.arrival_cap,
            })
        }
    };
    Ok(json!({ "config_hash": cfg.hash(), "plan": body }))
}

fn estimate_report(cfg: &RunConfig) -> Result<Value, CliError> {
    let body = match &cfg.model {
        ModelConfig::Gg1 { .. } => {
            let plan = gg1_plan(cfg)?;
            let params = cfg.gg1_params(plan.horizon_m, plan.clip_b).unwrap();
            match cfg.estimator {
                EstimatorKind::MonteCarlo => {
                    let est = harness::gg1_ratio_estimate(cfg.master_seed, &params, cfg.cycles);
                    json!({ "estimator": "monte_carlo", "plan": plan, "estimate": est })
                }
                EstimatorKind::AmplitudeEstimation => {
                    let q = cfg.qae.expect("validated qae settings");
                    let qcfg = harness::QaeTailConfig {
                        bits_m: q.bits_m,
                        eps_q: plan.eps_q,
                        delta: q.delta,
                        shots_per_round: q.shots_per_round,
                        denominator_cycles: cfg.cycles,
                    };
                    let est = harness::estimate_tail_qae(cfg.master_seed, &params, &qcfg)
                        .map_err(|e| runtime(e.to_string()))?;
                    json!({ "estimator": "amplitude_estimation", "plan": plan, "estimate": est })
                }
            }
        }
        ModelConfig::Wireless { .. } => {
            let params = cfg.wireless_params().unwrap();
            let est = harness::wireless_ratio_estimate(cfg.master_seed, &params, cfg.cycles)
                .map_err(|e| runtime(e.to_string()))?;
            json!({ "estimator": "monte_carlo", "estimate": est })
        }
        ModelConfig::Jsq { .. } => {
            let params = cfg.jsq_params().unwrap();
            let est = harness::jsq_ratio_estimate(cfg.master_seed, &params, cfg.cycles);
            json!({ "estimator": "monte_carlo", "estimate": est })
        }
    };
    let mut out = body;
    out["config_hash"] = Value::String(cfg.hash());
    Ok(out)
}

fn certify_report(cfg: &RunConfig, digits: u32) -> Result<(Value, bool), CliError> {
    match &cfg.model {
        ModelConfig::Gg1 { .. } => {
            // Certification plans against a budget two decades below the
            // target threshold.
            let mut tight = cfg.clone();
            tight.eps_tot = 10f64.powi(-(digits as i32) - 2);
            let plan = gg1_plan(&tight)?;
            let params = tight.gg1_params(plan.horizon_m, plan.clip_b).unwrap();
            let rep = harness::certify_gg1(cfg.master_seed, &params, &plan, digits, cfg.cycles, 1e-3);
            let certified = rep.certified;
            Ok((
                json!({ "config_hash": cfg.hash(), "plan": plan, "certification": rep }),
                certified,
            ))
        }
        _ => Err(runtime("certify needs a gg1 model")),
    }
}

fn verify_report(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    match &cfg.model {
        ModelConfig::Gg1 { .. } => {
            let plan = gg1_plan(cfg)?;
            let params = cfg.gg1_params(plan.horizon_m, plan.clip_b).unwrap();
            let m = plan.horizon_m;
            let grid: Vec<u64> = [m / 8, m / 4, m / 2, m]
                .into_iter()
                .filter(|&x| x >= 1)
                .collect();
            let cap = 200 * m.max(64);
            let tail = harness::verify_regeneration_tail_gg1(
                cfg.master_seed,
                &params,
                plan.drift.beta,
                &grid,
                cfg.cycles,
                cap,
                1e-3,
            )
            .map_err(|e| runtime(e.to_string()))?;
            let trunc = harness::verify_truncation_bias(
                cfg.master_seed,
                &params,
                plan.drift.beta,
                &grid,
                cfg.cycles,
                cap,
            )
            .map_err(|e| runtime(e.to_string()))?;
            let holds = tail.holds && trunc.holds;
            Ok((
                json!({
                    "config_hash": cfg.hash(),
                    "regeneration_tail": tail,
                    "truncation_bias": trunc,
                    "holds": holds,
                }),
                holds,
            ))
        }
        ModelConfig::Wireless { drift, .. } => {
            let spec = drift.ok_or_else(|| runtime("wireless verification needs model.drift"))?;
            let tail = planner::solve_eta(&spec).map_err(|e| runtime(e.to_string()))?;
            let params = cfg.wireless_params().unwrap();
            let m = params.horizon_m;
            let grid: Vec<u64> = [m / 8, m / 4, m / 2, m]
                .into_iter()
                .filter(|&x| x >= 1)
                .collect();
            let rep = harness::verify_regeneration_tail_wireless(
                cfg.master_seed,
                &params,
                &tail,
                &grid,
                cfg.cycles,
                200 * m.max(64),
                1e-3,
            )
            .map_err(|e| runtime(e.to_string()))?;
            let (p_lower, trials) = harness::estimate_emptying_probability(
                cfg.master_seed.wrapping_add(1),
                &params,
                spec.small_set_m as u64,
                (cfg.cycles * 10).max(10_000),
                1e-3,
            )
            .map_err(|e| runtime(e.to_string()))?;
            let holds = rep.holds && p_lower >= 0.0;
            Ok((
                json!({
                    "config_hash": cfg.hash(),
                    "return_time_tail": rep,
                    "emptying_probability_lower": p_lower,
                    "emptying_trials": trials,
                    "holds": holds,
                }),
                holds,
            ))
        }
        ModelConfig::Jsq { .. } => {
            let params = cfg.jsq_params().unwrap();
            let check = harness::jsq_truncation_surrogate(
                cfg.master_seed,
                &params,
                cfg.cycles,
                (params.arrival_cap * 64).max(1 << 12),
            );
            let holds = check.holds;
            Ok((
                json!({ "config_hash": cfg.hash(), "arrival_cap_surrogate": check, "holds": holds }),
                holds,
            ))
        }
    }
}

fn value_width(dist: &crate::dist::DistSpec, default_bits: u64) -> u64 {
    match dist.max_support() {
        Some(max) if max >= 0.0 => {
            let levels = (max.ceil() as u64).max(1) + 1;
            (64 - (levels - 1).leading_zeros() as u64).max(1)
        }
        _ => default_bits,
    }
}

fn resources_report(cfg: &RunConfig, value_bits: u64) -> Result<Value, CliError> {
    match &cfg.model {
        ModelConfig::Gg1 { arrival, service, .. } => {
            let plan = gg1_plan(cfg)?;
            let bits_m = cfg.qae.map_or(16, |q| u64::from(q.bits_m));
            let alpha = cfg.qae.map_or(0.05, |q| q.delta);
            let m = plan.horizon_m;
            let out_bits = 64 - m.leading_zeros() as u64;
            let rep = qae::resource_report(
                bits_m,
                m,
                value_width(arrival, value_bits),
                value_width(service, value_bits),
                out_bits,
                plan.eps_q,
                alpha,
            );
            Ok(json!({ "config_hash": cfg.hash(), "plan": plan, "resources": rep }))
        }
        _ => Err(runtime("resources needs a gg1 model")),
    }
}

fn scaling_report(cfg: &RunConfig, points: u32) -> Result<Value, CliError> {
    let q = cfg
        .qae
        .ok_or_else(|| runtime("qae-scaling needs the qae settings block"))?;
    let a_true = match &cfg.model {
        ModelConfig::Gg1 { .. } => {
            let plan = gg1_plan(cfg)?;
            let params = cfg.gg1_params(plan.horizon_m, plan.clip_b).unwrap();
            qae::exact_amplitude(q.bits_m, |w| {
                let mut s = SeedStream::from_seed_word(w, q.bits_m);
                crate::gg1::evaluate_truncated_cycle(&mut s, &params).y
            })
            .map_err(|e| runtime(e.to_string()))?
        }
        _ => return Err(runtime("qae-scaling needs a gg1 model")),
    };
    let mut rows = Vec::new();
    let mut eps = 1e-2;
    for i in 0..points {
        let mut stream = SeedStream::fork_cycle(cfg.master_seed, u64::from(i));
        let r = qae::iqae_estimate(a_true, eps, q.delta, q.shots_per_round, &mut stream)
            .map_err(|e| runtime(e.to_string()))?;
        rows.push(json!({
            "eps": eps,
            "iqae_queries": r.oracle_queries,
            "mc_shots": qae::mc_sample_size(eps, q.delta),
            "a_hat": r.a_hat,
        }));
        eps /= 2.0;
    }
    Ok(json!({ "config_hash": cfg.hash(), "amplitude": a_true, "series": rows }))
}

fn emit(common: &CommonArgs, report: &Value) -> Result<(), CliError> {
    let text = match common.format {
        Format::Json => format!("{:#}\n", report),
        Format::Csv => to_csv(report),
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// CSV rendering: a top-level "series" array becomes header + rows; any
// other object flattens to key,value lines.
fn to_csv(report: &Value) -> String {
    if let Some(rows) = report.get("series").and_then(|s| s.as_array()) {
        if let Some(first) = rows.first().and_then(|r| r.as_object()) {
            let cols: Vec<&String> = first.keys().collect();
            let mut out = cols
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(",");
            out.push('\n');
            for row in rows {
                let line: Vec<String> = cols
                    .iter()
                    .map(|c| scalar(&row[c.as_str()]))
                    .collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
            return out;
        }
    }
    let mut out = String::from("key,value\n");
    flatten("", report, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, val, out);
            }
        }
        Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), val, out);
            }
        }
        _ => {
            out.push_str(prefix);
            out.push(',');
            out.push_str(&scalar(v));
            out.push('\n');
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
