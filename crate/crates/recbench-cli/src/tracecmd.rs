//! The `trace gen` subcommand: deterministic embedding lookup traces.

use std::path::PathBuf;

use clap::Args;
use recbench_core::report::write_trace_csv;
use recbench_core::rng::{derive_seed, Stream};
use recbench_core::workload::gen_request;

use crate::bench::resolve_model;
use crate::CliError;

#[derive(Args)]
pub struct TraceGenArgs {
    /// Preset name (rmc1|rmc2|rmc3) or path to a model config JSON
    #[arg(long, default_value = "rmc1")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Batch size per query
    #[arg(long, default_value_t = 1)]
    batch: u32,
    /// Number of queries to trace
    #[arg(long, default_value_t = 100)]
    queries: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trace CSV destination
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
}

pub fn gen(args: TraceGenArgs) -> Result<(), CliError> {
    if args.batch == 0 {
        return Err(CliError::Config("batch must be at least 1".into()));
    }
    let (model, model_name) = resolve_model(&args.model, args.scale)?;
    let tables: Vec<(u64, u64)> = model.tables.iter().map(|t| (t.rows, t.dim)).collect();

    let mut lookups: Vec<(u32, u64)> = Vec::new();
    for q in 0..args.queries {
        let req_seed = derive_seed(args.seed, Stream::Request { instance: 0, query: q });
        let request = gen_request(&model, args.batch as usize, req_seed)
            .map_err(|e| CliError::Config(e.to_string()))?;
        for (t, sparse) in request.sparse.iter().enumerate() {
            for &id in sparse.ids() {
                lookups.push((t as u32, id));
            }
        }
    }
    let meta = format!(
        "model={model_name} scale={} batch={} queries={} seed={}",
        args.scale, args.batch, args.queries, args.seed
    );
    let count = lookups.len();
    write_trace_csv(&args.out, &meta, &tables, lookups.into_iter())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("wrote {count} lookups over {} tables to {}", tables.len(), args.out.display());
    Ok(())
}
