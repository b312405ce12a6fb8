//! Command-line front end: generate instances, run and time single
//! algorithms, sweep parameters into CSV, and verify the library's
//! guarantees.
//!
//! Exit codes: 0 success, 1 a verified property failed, 2 usage or
//! configuration error.

mod verify;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sketchmatch::bench::{
    self, run_once, Algorithm, RunParams, SweepAxis, SweepConfig,
};
use sketchmatch::data::{self, gen_synthetic, CsvOptions, GenMode};
use sketchmatch::Instance;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sketchmatch", version, about = "Online deadline matching, exact and sketched")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance CSV plus a .meta.json sidecar
    Gen(GenArgs),
    /// Run one algorithm over one instance and print its total weight
    Run(RunArgs),
    /// Sweep one parameter axis and write records plus a summary table
    Sweep(SweepArgs),
    /// Check the competitive-ratio, certificate and distortion properties
    Verify(verify::VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Pairs of nodes (sellers and buyers each) in bipartite mode; in
    /// postponed mode the stream holds 2*n undetermined nodes
    #[arg(long)]
    n: usize,
    /// Coordinates per node
    #[arg(long)]
    d: usize,
    /// Steps a node stays matchable after arrival
    #[arg(long)]
    dl: u64,
    /// Defaults to $SKETCHMATCH_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["bipartite", "postponed"], default_value = "bipartite")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// greedy | fast-greedy | pgreedy | fast-pgreedy
    #[arg(long)]
    algo: String,
    /// Instance CSV to load (reads <in>.meta.json automatically if present)
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic")]
    r#in: Option<PathBuf>,
    /// Generate the instance instead of loading one (needs --n --d --dl);
    /// postponed algorithms get --n undetermined nodes over --n steps
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Deadline duration; for --in files without a sidecar this also sets
    /// per-row deadlines
    #[arg(long)]
    dl: Option<u64>,
    /// Explicit sketch width for the fast algorithms
    #[arg(long)]
    s: Option<usize>,
    /// Derive the sketch width from --eps and --delta instead of --s
    #[arg(long)]
    auto_s: bool,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Append one record row to this CSV
    #[arg(long)]
    record: Option<PathBuf>,
    /// With --record, also append per-iteration timings to <stem>.iters.csv
    #[arg(long)]
    iters: bool,
    /// Loader knobs for --in files without a sidecar (0-based columns)
    #[arg(long)]
    header: bool,
    #[arg(long)]
    role_column: Option<usize>,
    #[arg(long)]
    arrival_column: Option<usize>,
    #[arg(long)]
    deadline_column: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// n | s | d | dl
    #[arg(long)]
    axis: String,
    /// Comma-separated positive integers
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 50_000)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    dl: u64,
    #[arg(long, default_value_t = 20)]
    s: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Comma-separated subset of greedy,fast-greedy,pgreedy,fast-pgreedy
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Usage/configuration problem: exit code 2.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, UsageError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => verify::cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, UsageError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("SKETCHMATCH_SEED") {
        Ok(text) => text
            .parse()
            .map_err(|_| UsageError(format!("SKETCHMATCH_SEED is not a valid seed: '{text}'"))),
        Err(_) => Ok(0),
    }
}

/// Sidecar describing how a generated CSV maps back onto an instance.
#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    n: usize,
    d: usize,
    dl: u64,
    seed: u64,
    mode: String,
    header: bool,
    arrival_column: usize,
    deadline_column: usize,
    role_column: usize,
}

fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let seed = resolve_seed(args.seed)?;
    let mode = match args.mode.as_str() {
        "bipartite" => GenMode::Bipartite,
        _ => GenMode::Postponed,
    };
    let instance = gen_synthetic(args.n, args.d, args.dl, seed, mode)?;
    data::write_csv(&instance, &args.out)?;
    let meta = InstanceMeta {
        n: args.n,
        d: args.d,
        dl: args.dl,
        seed,
        mode: args.mode.clone(),
        header: true,
        arrival_column: data::CSV_ARRIVAL_COLUMN,
        deadline_column: data::CSV_DEADLINE_COLUMN,
        role_column: data::CSV_ROLE_COLUMN,
    };
    std::fs::write(meta_path(&args.out), serde_json::to_string_pretty(&meta)?)?;
    println!(
        "wrote {} ({} nodes, d={}) and {}",
        args.out.display(),
        instance.nodes().len(),
        args.d,
        meta_path(&args.out).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_instance(args: &RunArgs, algorithm: Algorithm, seed: u64) -> Result<Instance, UsageError> {
    if args.synthetic {
        let (Some(n), Some(d), Some(dl)) = (args.n, args.d, args.dl) else {
            return Err(UsageError("--synthetic needs --n, --d and --dl".into()));
        };
        let instance = if algorithm.is_postponed() {
            gen_synthetic(n.div_ceil(2), d, dl, seed, GenMode::Postponed)?
        } else {
            gen_synthetic(n, d, dl, seed, GenMode::Bipartite)?
        };
        return Ok(instance);
    }
    let Some(path) = &args.r#in else {
        return Err(UsageError("either --in or --synthetic is required".into()));
    };
    let sidecar = meta_path(path);
    let opts = if sidecar.exists() {
        let meta: InstanceMeta = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
        CsvOptions {
            header: meta.header,
            role_column: Some(meta.role_column),
            arrival_column: Some(meta.arrival_column),
            deadline_column: Some(meta.deadline_column),
            dl_duration: None,
        }
    } else {
        CsvOptions {
            header: args.header,
            role_column: args.role_column,
            arrival_column: args.arrival_column,
            deadline_column: args.deadline_column,
            dl_duration: args.dl,
        }
    };
    Ok(data::load_csv(path, &opts)?)
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let algorithm: Algorithm = args.algo.parse()?;
    if algorithm.is_fast() && args.s.is_none() && !args.auto_s {
        return Err(UsageError(format!(
            "{algorithm} needs --s or --auto-s (with --eps/--delta)"
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let instance = load_instance(&args, algorithm, seed)?;
    let params = RunParams {
        s: if algorithm.is_fast() { args.s } else { None },
        eps: args.eps,
        delta: args.delta,
        dl: args.dl,
    };
    let record = run_once(algorithm, &instance, &params, seed)?;
    println!(
        "total_weight={} wall_ms={}",
        record.total_weight,
        record.wall_nanos / 1_000_000
    );
    if let Some(path) = &args.record {
        append_record(path, &record, args.iters)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn append_record(
    path: &Path,
    record: &bench::SweepRecord,
    iters: bool,
) -> Result<(), UsageError> {
    use std::io::Write;
    let mut rows = String::new();
    if !path.exists() {
        rows.push_str(bench::RECORDS_CSV_HEADER);
        rows.push('\n');
    }
    rows.push_str(&bench::record_csv_row(record));
    rows.push('\n');
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(rows.as_bytes())?;
    if iters {
        let iters_path = path.with_extension("iters.csv");
        let mut rows = String::new();
        if !iters_path.exists() {
            rows.push_str(bench::ITERS_CSV_HEADER);
            rows.push('\n');
        }
        rows.push_str(&bench::iter_csv_rows(record));
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(iters_path)?;
        file.write_all(rows.as_bytes())?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let axis: SweepAxis = args.axis.parse()?;
    let values = args
        .values
        .split(',')
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| UsageError(format!("bad sweep value '{v}'")))
        })
        .collect::<Result<Vec<u64>, _>>()?;
    let algorithms = match &args.algos {
        None => Algorithm::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .filter(|v| !v.is_empty())
            .map(|v| v.trim().parse::<Algorithm>().map_err(UsageError::from))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let seed = resolve_seed(args.seed)?;
    let config = SweepConfig {
        n: args.n,
        d: args.d,
        dl: args.dl,
        s: args.s,
        eps: args.eps,
        delta: args.delta,
        algorithms,
    };
    let records = bench::sweep(axis, &values, &config, args.repeats, seed)?;
    bench::write_records_csv(&args.out, &records, false)?;
    let summary = bench::summarize(&records)?;
    let summary_csv = bench::summary_to_csv(&summary);
    std::fs::write(args.out.with_extension("summary.csv"), &summary_csv)?;
    print!("{summary_csv}");
    Ok(ExitCode::SUCCESS)
}
