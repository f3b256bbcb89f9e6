mod config;
mod output;

use clap::{Parser, Subcommand};
use config::RunConfig;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use weylab::experiments::{ExperimentKind, Report, Series, DEFAULT_SEED};

/// Spectral-asymptotics experiments for pseudo-differential operators on tori.
#[derive(Parser)]
#[command(name = "weylab", version)]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment
    Run { config: PathBuf },
    /// Run an experiment once per value of one parameter
    Sweep {
        config: PathBuf,
        /// Parameter name inside [params]; nested tables use dots (window.lo)
        #[arg(long)]
        param: String,
        /// Comma-separated values in TOML syntax (quote values containing commas)
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// List the experiments
    List,
    /// Print the default config of an experiment
    Template { experiment: String },
}

const EXIT_TOLERANCE: u8 = 2;

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_TOLERANCE),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome, String> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err("--workers must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    match &cli.command {
        Command::List => {
            for k in ExperimentKind::ALL {
                println!("{:<22} {}", k.name(), k.anchor());
            }
            Ok(Outcome::Pass)
        }
        Command::Template { experiment } => {
            let kind: ExperimentKind = experiment.parse().map_err(|e: weylab::Error| e.to_string())?;
            print!("{}", config::template(kind)?);
            Ok(Outcome::Pass)
        }
        Command::Run { config: path } => {
            let text = read(path)?;
            let cfg = config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let dir = output_dir(&cli, &cfg);
            let report = run_one(&cfg, resolve_seed(&cli, &cfg), &dir)?;
            println!("{}", report.summary_line());
            println!("results written to {}", dir.display());
            Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Sweep { config: path, param, values } => sweep(&cli, path, param, values),
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn resolve_seed(cli: &Cli, cfg: &RunConfig) -> u64 {
    cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED)
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("weylab-out").join(cfg.experiment.kind().name()))
}

fn run_one(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<Report, String> {
    let manifest = config::render(cfg, seed)?;
    let start = Instant::now();
    let report = cfg.experiment.run(seed).map_err(|e| e.to_string())?;
    output::write_run(dir, &report, seed, start.elapsed().as_secs_f64(), &manifest)?;
    Ok(report)
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    value: String,
    directory: String,
    report: Option<&'a Report>,
    error: Option<String>,
}

fn sweep(cli: &Cli, path: &Path, param: &str, values: &str) -> Result<Outcome, String> {
    let text = read(path)?;
    let base = config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(values.as_bytes());
    let raw: Vec<String> = match reader.records().next() {
        Some(rec) => rec.map_err(|e| e.to_string())?.iter().filter(|s| !s.is_empty()).map(String::from).collect(),
        None => Vec::new(),
    };
    if raw.is_empty() {
        return Err("sweep needs at least one value".into());
    }
    // resolve every value before running anything
    let mut configs = Vec::new();
    for v in &raw {
        let value = config::parse_value(v);
        let parsed = config::with_override(&text, param, value.clone()).and_then(|t| config::parse(&t));
        let parsed = match parsed {
            Ok(c) => c,
            Err(first) if !value.is_array() => config::with_override(&text, param, toml::Value::Array(vec![value]))
                .and_then(|t| config::parse(&t))
                .map_err(|_| format!("{param} = {v}: {first}"))?,
            Err(e) => return Err(format!("{param} = {v}: {e}")),
        };
        configs.push(parsed);
    }
    let root = output_dir(cli, &base);
    let seed = resolve_seed(cli, &base);
    let mut reports = Vec::new();
    for (i, (cfg, v)) in configs.iter().zip(&raw).enumerate() {
        let dir = root.join(format!("{:03}", i));
        let r = run_one(cfg, seed, &dir);
        match &r {
            Ok(rep) => println!("{param} = {v}: {}", rep.summary_line()),
            Err(e) => println!("{param} = {v}: error: {e}"),
        }
        reports.push((v.clone(), dir, r));
    }
    let mut table = Series::new(&["index", "predicted", "measured", "relative_error", "pass"]);
    let mut entries = Vec::new();
    let mut any_error = false;
    let mut any_fail = false;
    for (i, (v, dir, r)) in reports.iter().enumerate() {
        match r {
            Ok(rep) => {
                any_fail |= !rep.pass;
                table.push(vec![i as f64, rep.predicted, rep.measured, rep.relative_error, if rep.pass { 1.0 } else { 0.0 }]);
            }
            Err(_) => any_error = true,
        }
        entries.push(SweepEntry {
            value: v.clone(),
            directory: dir.display().to_string(),
            report: r.as_ref().ok(),
            error: r.as_ref().err().cloned(),
        });
    }
    std::fs::create_dir_all(&root).map_err(|e| format!("{}: {e}", root.display()))?;
    output::write_series(&root.join("sweep.csv"), &table)?;
    output::write_json(&root.join("sweep.json"), &serde_json::json!({ "parameter": param, "seed": seed, "runs": entries }))?;
    println!("results written to {}", root.display());
    if any_error {
        Err("one or more sweep runs failed".into())
    } else if any_fail {
        Ok(Outcome::Fail)
    } else {
        Ok(Outcome::Pass)
    }
}
