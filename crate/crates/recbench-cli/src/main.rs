//! `recbench` command-line driver.
//!
//! Subcommands map onto the library's experiment entry points: `bench
//! run|colocate|sweep` drive the harness, `trace gen` writes embedding
//! lookup traces, `cache sim` replays them through the hierarchy
//! simulator, and `report` merges result CSVs and picks SLA winners.

mod bench;
mod cachecmd;
mod reportcmd;
mod tracecmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Process exit codes, stable for scripting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    ConfigError,
    RuntimeError,
    SlaNoneQualified,
}

impl ExitStatus {
    fn code(self) -> u8 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ConfigError => 1,
            ExitStatus::RuntimeError => 2,
            ExitStatus::SlaNoneQualified => 3,
        }
    }
}

/// Command failures carrying their exit class.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    SlaNoneQualified,
}

impl CliError {
    fn status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) => ExitStatus::ConfigError,
            CliError::Runtime(_) => ExitStatus::RuntimeError,
            CliError::SlaNoneQualified => ExitStatus::SlaNoneQualified,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::SlaNoneQualified => {
                write!(f, "no config point satisfied the SLA (--require-sla)")
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "recbench",
    version,
    about = "Recommendation-model inference benchmark suite",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmark experiments
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Generate embedding lookup traces
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Simulate a cache hierarchy over a lookup trace
    #[command(subcommand)]
    Cache(CacheCommand),
    /// Merge result CSVs and select the SLA winner
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Single-model benchmark over one or more batch sizes
    Run(BenchArgs),
    /// Co-located instances of one model
    Colocate(BenchArgs),
    /// Cartesian sweep over batch sizes and co-location degrees
    Sweep(BenchArgs),
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Write the lookup trace of synthetic requests as CSV
    Gen(tracecmd::TraceGenArgs),
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Replay a lookup trace through a two-level hierarchy
    Sim(cachecmd::CacheSimArgs),
}

/// Flags shared by the bench subcommands.
#[derive(Args, Clone)]
pub struct BenchArgs {
    /// Preset name (rmc1|rmc2|rmc3) or path to a model config JSON
    #[arg(long, default_value = "rmc1")]
    model: String,
    /// Multiplier applied to embedding-table rows
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Batch size; repeat the flag to sweep
    #[arg(long = "batch")]
    batch: Vec<u32>,
    /// Co-location degree; repeat the flag to sweep
    #[arg(long = "colocate")]
    colocate: Vec<u32>,
    /// Wall-clock cap per config point, seconds
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Warmup window excluded from statistics, seconds (default 10% of duration)
    #[arg(long)]
    warmup: Option<f64>,
    /// Stop a config point after this many measured queries per instance
    #[arg(long)]
    queries: Option<u64>,
    /// Open-loop Poisson arrival rate in queries/s (closed loop when absent)
    #[arg(long)]
    rate: Option<f64>,
    /// SLA latency threshold in milliseconds
    #[arg(long, default_value_t = 450.0)]
    sla_ms: f64,
    /// SLA percentile in (0, 100]
    #[arg(long, default_value_t = 99.0)]
    sla_pctl: f64,
    /// Pin one core per co-located instance
    #[arg(long)]
    pin: bool,
    /// Root seed; every random stream derives from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for results.csv, breakdown.csv, manifest.json
    #[arg(long, env = "RECBENCH_OUT", default_value = "recbench-out")]
    out: PathBuf,
    /// Exit with status 3 when no config point meets the SLA
    #[arg(long)]
    require_sla: bool,
    /// Share one weight copy across co-located instances
    #[arg(long)]
    shared_weights: bool,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory of result CSVs to merge
    #[arg(long = "in")]
    input: PathBuf,
    /// Merged CSV destination (default <in>/combined.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 450.0)]
    sla_ms: f64,
    /// SLA percentile; one of 5, 50, 95, 99 (the merged columns)
    #[arg(long, default_value_t = 99.0)]
    sla_pctl: f64,
    /// Exit with status 3 when no merged row meets the SLA
    #[arg(long)]
    require_sla: bool,
}

extern "C" fn on_signal(_: libc::c_int) {
    recbench_core::harness::shutdown_flag().store(true, std::sync::atomic::Ordering::SeqCst);
}

fn install_signal_handlers() {
    unsafe {
        libc::signal(libc::SIGINT, on_signal as *const () as libc::sighandler_t);
        libc::signal(libc::SIGTERM, on_signal as *const () as libc::sighandler_t);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are successful exits; everything else is a
            // config error
            let code = if e.use_stderr() { ExitStatus::ConfigError.code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    install_signal_handlers();
    let result = match cli.command {
        Command::Bench(BenchCommand::Run(mut args)) => {
            args.colocate = vec![1];
            bench::run(bench::Mode::Run, args)
        }
        Command::Bench(BenchCommand::Colocate(args)) => bench::run(bench::Mode::Colocate, args),
        Command::Bench(BenchCommand::Sweep(args)) => bench::run(bench::Mode::Sweep, args),
        Command::Trace(TraceCommand::Gen(args)) => tracecmd::gen(args),
        Command::Cache(CacheCommand::Sim(args)) => cachecmd::sim(args),
        Command::Report(args) => reportcmd::report(args),
    };
    match result {
        Ok(()) => ExitCode::from(ExitStatus::Success.code()),
        Err(e) => {
            eprintln!("recbench: {e}");
            ExitCode::from(e.status().code())
        }
    }
}
