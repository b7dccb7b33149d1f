//! The `cache sim` subcommand: replay a lookup trace through the
//! two-level hierarchy simulator.

use std::path::PathBuf;

use clap::Args;
use recbench_core::cachesim::{
    misses_per_kilo_lookups, simulate, AccessTrace, CacheLevelConfig, HierarchyConfig,
    InclusionPolicy, TableAddressMap,
};
use recbench_core::report::{cache_stats_csv, read_trace_csv, ReportError};

use crate::CliError;

#[derive(Args)]
pub struct CacheSimArgs {
    /// Lookup trace CSV written by `trace gen`
    #[arg(long)]
    trace: PathBuf,
    /// L2 capacity in KiB
    #[arg(long = "l2-kb", default_value_t = 256)]
    l2_kb: u64,
    /// L3 capacity in KiB
    #[arg(long = "l3-kb", default_value_t = 1024)]
    l3_kb: u64,
    /// Associativity of both levels
    #[arg(long, default_value_t = 8)]
    assoc: u32,
    /// Line size in bytes
    #[arg(long, default_value_t = 64)]
    line: u64,
    /// inclusive or exclusive
    #[arg(long, default_value = "inclusive")]
    policy: String,
    /// Also write the stats CSV to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn sim(args: CacheSimArgs) -> Result<(), CliError> {
    let policy: InclusionPolicy =
        args.policy.parse().map_err(|e: recbench_core::cachesim::CacheError| {
            CliError::Config(e.to_string())
        })?;
    let hierarchy = HierarchyConfig {
        l2: CacheLevelConfig::lru(args.l2_kb * 1024, args.line, args.assoc),
        l3: CacheLevelConfig::lru(args.l3_kb * 1024, args.line, args.assoc),
        policy,
    };
    hierarchy.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let trace_file = read_trace_csv(&args.trace).map_err(|e| match e {
        ReportError::Io { .. } => CliError::Config(e.to_string()),
        ReportError::MalformedRow { .. } | ReportError::SchemaMismatch { .. } => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    })?;

    let map = TableAddressMap::new(&trace_file.tables, args.line);
    let mut trace = AccessTrace::new();
    for &(table, row) in &trace_file.lookups {
        let lines = map
            .row_line_addresses(table as usize, row)
            .map_err(|e| CliError::Config(format!("{}: {e}", args.trace.display())))?;
        for addr in lines {
            trace.push(addr);
        }
    }

    let stats = simulate(&hierarchy, &trace).map_err(|e| CliError::Runtime(e.to_string()))?;
    let lookups = trace_file.lookups.len() as u64;
    let mpk = if lookups == 0 {
        0.0
    } else {
        misses_per_kilo_lookups(&stats, lookups).map_err(|e| CliError::Runtime(e.to_string()))?
    };
    let csv = cache_stats_csv(&hierarchy, &args.policy, &stats, lookups, mpk);
    print!("{csv}");
    if let Some(out) = &args.out {
        std::fs::write(out, &csv)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(())
}
