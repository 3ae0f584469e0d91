//! Command-line front end.
//!
//! Every verb reads a JSON config, applies the flag overrides, and writes
//! `result.json` (with the resolved config echoed under `"config"`) into the
//! output directory. `tv-curve` and `experiment` also write `curve.csv`;
//! `trace-dump` and `--trace` write `trace.csv`.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when `--assert` is given
//! and an acceptance verdict fails.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{classical_comparison, poly_constant_for, tv_bound_curve, BoundReport, ClassicalComparison};
use crate::coupling::{build_coupling, write_trace_csv, CouplingTrace, Horizon};
use crate::decomposition::decompose;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{
    estimate_epoch_stats, estimate_tv_curve, exp_bound_for, run_experiment, write_curve_csv, ExperimentConfig,
    ExperimentResult, Runner, PURPOSE_COUPLING,
};
use crate::sampling::UniformStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ASSERT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "renewal-coupling", version, about = "Stationary renewal coupling and TV convergence bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overlap decomposition of the lifetime law.
    Decompose(CommonArgs),
    /// Polynomial and exponential bound constants and curves.
    Bounds(CommonArgs),
    /// Coupling-epoch statistics.
    Couple(CommonArgs),
    /// Empirical TV curve with bound curves.
    TvCurve(CommonArgs),
    /// Full experiment with acceptance verdicts.
    Experiment(CommonArgs),
    /// Event trace of one coupled realization.
    TraceDump {
        #[command(flatten)]
        common: CommonArgs,
        /// Replication index whose stream drives the trace.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config: an experiment config, a bare distribution, or a previous result.json.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Exit with status 2 when a verdict fails.
    #[arg(long = "assert")]
    pub assert_verdicts: bool,
    /// Also write the trace of replication 0.
    #[arg(long)]
    pub trace: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
}

enum Loaded {
    Experiment(Box<ExperimentConfig>),
    Spec(DistributionSpec),
}

fn load(args: &CommonArgs) -> Result<Loaded> {
    let text = fs::read_to_string(&args.config)?;
    let value: Value = serde_json::from_str(&text)?;
    let value = match value.get("config") {
        Some(inner) if inner.is_object() => inner.clone(),
        _ => value,
    };
    if value.get("family").is_some() {
        return Ok(Loaded::Spec(serde_json::from_value(value)?));
    }
    let mut config: ExperimentConfig = serde_json::from_value(value)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if let Some(bins) = args.bins {
        config.histogram_bins = bins;
    }
    config.validate()?;
    Ok(Loaded::Experiment(Box::new(config)))
}

fn experiment_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    match load(args)? {
        Loaded::Experiment(c) => Ok(*c),
        Loaded::Spec(_) => Err(Error::InvalidConfig("this command needs a full experiment config".into())),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_trace(dir: &Path, trace: &CouplingTrace) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join("trace.csv"))?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}

fn trace_for(config: &ExperimentConfig, replication: u64) -> Result<CouplingTrace> {
    let decomp = decompose(&config.spec)?;
    let t_max = *config.t_grid.last().expect("validated nonempty");
    let mut stream = UniformStream::for_purpose(config.seed, PURPOSE_COUPLING, replication);
    build_coupling(&decomp, config.initial_r, &mut stream, Horizon::EpochAndTime { t: t_max })
}

#[derive(Serialize)]
struct BoundsOutput {
    poly: Vec<(BoundReport, Vec<f64>)>,
    exp: Option<(f64, BoundReport, Vec<f64>)>,
    classical: Vec<ClassicalComparison>,
}

fn bounds_output(config: &ExperimentConfig) -> Result<BoundsOutput> {
    let decomp = decompose(&config.spec)?;
    let mut poly = Vec::new();
    for &k in &config.poly_orders {
        let rep = poly_constant_for(&decomp, config.initial_r, k)?;
        poly.push((rep, tv_bound_curve(&rep, &config.t_grid)?));
    }
    let mut classical = Vec::new();
    for (i, &k) in config.poly_orders.iter().enumerate() {
        if let Some(j) = config.poly_orders.iter().position(|&q| q == k - 1.0) {
            classical.push(classical_comparison(&poly[i].0, &poly[j].0, &config.t_grid)?);
        }
    }
    let exp = match config.exp_bound {
        Some(req) => {
            let (beta, rep) = exp_bound_for(&decomp, config.initial_r, req)?;
            let curve = tv_bound_curve(&rep, &config.t_grid)?;
            Some((beta, rep, curve))
        }
        None => None,
    };
    Ok(BoundsOutput { poly, exp, classical })
}

/// Runs one command and returns the exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Decompose(args) => {
            let (spec, echoed) = match load(&args)? {
                Loaded::Experiment(c) => (c.spec.clone(), serde_json::to_value(&*c)?),
                Loaded::Spec(s) => (s.clone(), serde_json::to_value(&s)?),
            };
            let decomp = decompose(&spec)?;
            let out = json!({
                "command": "decompose",
                "config": echoed,
                "key_condition": spec.validate_key_condition(),
                "decomposition": decomp.summary(),
            });
            write_json(&args.out, "result.json", &out)?;
            Ok(EXIT_OK)
        }
        Command::Bounds(args) => {
            let config = experiment_config(&args)?;
            let out = json!({ "command": "bounds", "config": config, "bounds": bounds_output(&config)? });
            write_json(&args.out, "result.json", &out)?;
            Ok(EXIT_OK)
        }
        Command::Couple(args) => {
            let config = experiment_config(&args)?;
            let runner = Runner::new(args.workers)?;
            let decomp = decompose(&config.spec)?;
            let stats = estimate_epoch_stats(&config, &decomp, &runner)?;
            let out = json!({
                "command": "couple",
                "config": config,
                "decomposition": decomp.summary(),
                "epoch": stats,
            });
            write_json(&args.out, "result.json", &out)?;
            if args.trace {
                write_trace(&args.out, &trace_for(&config, 0)?)?;
            }
            Ok(EXIT_OK)
        }
        Command::TvCurve(args) => {
            let config = experiment_config(&args)?;
            let runner = Runner::new(args.workers)?;
            let decomp = decompose(&config.spec)?;
            let curve = estimate_tv_curve(&config, &decomp, &runner)?;
            let bounds = bounds_output(&config)?;
            fs::create_dir_all(&args.out)?;
            let mut csv = String::from("t,tv_est,tv_se,bound_poly_k,bound_exp,p_tau_gt_t\n");
            for (j, p) in curve.iter().enumerate() {
                let poly = bounds.poly.last().map(|(_, v)| v[j].to_string()).unwrap_or_default();
                let exp = bounds.exp.as_ref().map(|(_, _, v)| v[j].to_string()).unwrap_or_default();
                csv.push_str(&format!("{},{},{},{},{},\n", p.t, p.tv_est, p.tv_se, poly, exp));
            }
            fs::write(args.out.join("curve.csv"), csv)?;
            let out = json!({ "command": "tv-curve", "config": config, "tv_curve": curve, "bounds": bounds });
            write_json(&args.out, "result.json", &out)?;
            Ok(EXIT_OK)
        }
        Command::Experiment(args) => {
            let config = experiment_config(&args)?;
            let runner = Runner::new(args.workers)?;
            let result: ExperimentResult = run_experiment(&config, &runner)?;
            write_json(&args.out, "result.json", &result)?;
            let file = fs::File::create(args.out.join("curve.csv"))?;
            write_curve_csv(&result, std::io::BufWriter::new(file))?;
            if args.trace {
                write_trace(&args.out, &trace_for(&config, 0)?)?;
            }
            for v in &result.verdicts {
                log::info!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            if args.assert_verdicts && !result.all_passed {
                return Ok(EXIT_ASSERT);
            }
            Ok(EXIT_OK)
        }
        Command::TraceDump { common, replication } => {
            let config = experiment_config(&common)?;
            let trace = trace_for(&config, replication)?;
            write_trace(&common.out, &trace)?;
            let out = json!({ "command": "trace-dump", "config": config, "replication": replication, "trace": trace });
            write_json(&common.out, "result.json", &out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args`, runs the command, and maps errors to exit status 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
