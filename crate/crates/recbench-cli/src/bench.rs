//! The `bench run|colocate|sweep` subcommands.

use std::path::Path;
use std::time::Duration;

use recbench_core::config::{self, ConfigError, ModelClass, RecModelConfig};
use recbench_core::harness::{
    latency_bounded_throughput, run_colocated, HarnessError, Pinning, RunPlan, SlaConfig,
    SlaSelection,
};
use recbench_core::report::{
    unix_now_s, write_breakdown_csv, write_results_csv, BreakdownRow, HostInfo, ResultRow,
    RunManifest,
};
use recbench_core::workload::{ArrivalMode, ArrivalPlan, DEFAULT_WARMUP_QUERIES};

use crate::{BenchArgs, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Colocate,
    Sweep,
}

/// Resolves `--model` as a preset name or a JSON config path, applying
/// `--scale` to embedding rows either way.
pub fn resolve_model(spec: &str, scale: f64) -> Result<(RecModelConfig, String), CliError> {
    let config = if let Ok(class) = spec.parse::<ModelClass>() {
        config::preset(class, scale).map_err(|e| CliError::Config(e.to_string()))?
    } else if Path::new(spec).extension().is_some_and(|x| x == "json") {
        let mut c = RecModelConfig::load_json(Path::new(spec))
            .map_err(|e| CliError::Config(e.to_string()))?;
        config::scale_rows(&mut c, scale).map_err(|e| CliError::Config(e.to_string()))?;
        c
    } else {
        return Err(CliError::Config(ConfigError::UnknownClass(spec.to_string()).to_string()));
    };
    let violations = config::validate(&config);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Config(format!("model config invalid: {}", list.join("; "))));
    }
    let name = config.name.clone();
    Ok((config, name))
}

fn build_plan(args: &BenchArgs, model: RecModelConfig) -> Result<RunPlan, CliError> {
    let duration = Duration::from_secs_f64(args.duration.max(0.0));
    let warmup = match args.warmup {
        Some(w) => Duration::from_secs_f64(w.max(0.0)),
        None => duration / 10,
    };
    let mode = match args.rate {
        Some(rate_qps) => ArrivalMode::OpenLoop { rate_qps },
        None => ArrivalMode::ClosedLoop { concurrency: 1 },
    };
    let arrival = ArrivalPlan {
        mode,
        duration,
        warmup,
        warmup_queries: DEFAULT_WARMUP_QUERIES.min(args.queries.unwrap_or(u64::MAX) / 2).max(10),
        query_limit: args.queries,
    };
    let plan = RunPlan {
        model,
        batch_sizes: if args.batch.is_empty() { vec![1] } else { args.batch.clone() },
        colocation_degrees: if args.colocate.is_empty() { vec![1] } else { args.colocate.clone() },
        arrival,
        pinning: if args.pin { Pinning::OneCorePerInstance } else { Pinning::None },
        seed: args.seed,
        sla: SlaConfig { threshold_ms: args.sla_ms, percentile: args.sla_pctl },
        shared_weights: args.shared_weights,
    };
    plan.validate().map_err(map_harness_err)?;
    Ok(plan)
}

fn map_harness_err(e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidPlan(_)
        | HarnessError::InvalidPercentile(_)
        | HarnessError::PinningImpossible { .. } => CliError::Config(e.to_string()),
        HarnessError::Workload(_) => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn run(_mode: Mode, args: BenchArgs) -> Result<(), CliError> {
    let started = unix_now_s();
    let (model, model_name) = resolve_model(&args.model, args.scale)?;
    let plan = build_plan(&args, model.clone())?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;

    let mut rows: Vec<ResultRow> = Vec::new();
    let mut breakdowns: Vec<BreakdownRow> = Vec::new();
    let mut point_summaries = Vec::new();
    let mut truncated = false;
    for &batch in &plan.batch_sizes {
        for &n in &plan.colocation_degrees {
            let run = run_colocated(&model, n, &plan, batch).map_err(map_harness_err)?;
            truncated |= run.truncated;
            // pooled latency distribution, aggregate throughput: the same
            // basis the CSV row reports
            let mut point = run.pooled;
            point.throughput_inf_s = run.aggregate_inf_s;
            point.throughput_items_s = run.aggregate_items_s;
            point_summaries.push((format!("B={batch} N={n}"), point));
            let row = ResultRow::from_summary(
                &model_name,
                args.scale,
                batch,
                n,
                &run.pooled,
                run.pinning,
            );
            // aggregate throughput across instances, pooled latencies
            let row = ResultRow {
                tput_inf_s: run.aggregate_inf_s,
                tput_items_s: run.aggregate_items_s,
                ..row
            };
            println!(
                "{model_name} scale={} B={batch} N={n}: count={} mean={:.1}us p50={:.1}us \
                 p99={:.1}us tput={:.1} inf/s ({:.1} items/s) sla_viol={:.4} pin={}",
                args.scale,
                row.count,
                row.mean_us,
                row.p50_us,
                row.p99_us,
                row.tput_inf_s,
                row.tput_items_s,
                row.sla_violation_frac,
                row.pinning,
            );
            rows.push(row);
            for (i, b) in run.per_instance_breakdowns.iter().enumerate() {
                if let Some(b) = b {
                    breakdowns.push(BreakdownRow {
                        model: model_name.clone(),
                        scale: args.scale,
                        batch,
                        colocation: n,
                        instance: i as u32,
                        breakdown: *b,
                    });
                }
            }
            if truncated {
                break;
            }
        }
        if truncated {
            break;
        }
    }

    let results_path = args.out.join("results.csv");
    write_results_csv(&results_path, &rows).map_err(|e| CliError::Runtime(e.to_string()))?;
    let breakdown_path = args.out.join("breakdown.csv");
    write_breakdown_csv(&breakdown_path, &breakdowns)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: std::env::args().collect(),
        model,
        scale: args.scale,
        seed: args.seed,
        sla_threshold_ms: args.sla_ms,
        sla_percentile: args.sla_pctl,
        batch_sizes: plan.batch_sizes.clone(),
        colocation_degrees: plan.colocation_degrees.clone(),
        duration_s: plan.arrival.duration.as_secs_f64(),
        warmup_s: plan.arrival.warmup.as_secs_f64(),
        warmup_queries: plan.arrival.warmup_queries,
        query_limit: plan.arrival.query_limit,
        pinning_requested: args.pin,
        shared_weights: args.shared_weights,
        host: HostInfo::detect(),
        started_unix_s: started,
        finished_unix_s: unix_now_s(),
        outputs: vec![
            results_path.display().to_string(),
            breakdown_path.display().to_string(),
        ],
        truncated,
    };
    manifest
        .save(&args.out.join("manifest.json"))
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    // SLA selection over the measured points, reported for every mode
    if !point_summaries.is_empty() {
        let sla = SlaConfig { threshold_ms: args.sla_ms, percentile: args.sla_pctl };
        match latency_bounded_throughput(&point_summaries, &sla).map_err(map_harness_err)? {
            SlaSelection::Qualified { point, summary } => {
                println!(
                    "sla winner ({}ms @ p{}): {point} at {:.1} inf/s",
                    args.sla_ms, args.sla_pctl, summary.throughput_inf_s
                );
            }
            SlaSelection::NoneQualified { fastest, summary } => {
                println!(
                    "no point met the SLA ({}ms @ p{}); fastest was {fastest} at p99 {:.1}us",
                    args.sla_ms, args.sla_pctl, summary.p99_us
                );
                if args.require_sla {
                    return Err(CliError::SlaNoneQualified);
                }
            }
        }
    }
    Ok(())
}
