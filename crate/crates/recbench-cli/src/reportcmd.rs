//! The `report` subcommand: merge result CSVs and pick the SLA winner.

use recbench_core::harness::{
    latency_bounded_throughput, MetricsSummary, SlaConfig, SlaSelection,
};
use recbench_core::report::{merge_results_dir, write_results_csv, ResultRow};

use crate::{CliError, ReportArgs};

fn summary_for(row: &ResultRow, pctl: f64) -> Result<MetricsSummary, CliError> {
    // merged CSVs carry four percentile columns; the SLA percentile must
    // be one of them
    let sla_latency_us = if pctl == 5.0 {
        row.p5_us
    } else if pctl == 50.0 {
        row.p50_us
    } else if pctl == 95.0 {
        row.p95_us
    } else if pctl == 99.0 {
        row.p99_us
    } else {
        return Err(CliError::Config(format!(
            "report --sla-pctl must be one of 5, 50, 95, 99 (merged CSVs only carry those); got {pctl}"
        )));
    };
    Ok(MetricsSummary {
        count: row.count,
        mean_us: row.mean_us,
        p5_us: row.p5_us,
        p50_us: row.p50_us,
        p95_us: row.p95_us,
        p99_us: row.p99_us,
        sla_latency_us,
        throughput_inf_s: row.tput_inf_s,
        throughput_items_s: row.tput_items_s,
        sla_violation_frac: row.sla_violation_frac,
    })
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let rows = merge_results_dir(&args.input).map_err(|e| CliError::Config(e.to_string()))?;
    let out = args.out.clone().unwrap_or_else(|| args.input.join("combined.csv"));
    write_results_csv(&out, &rows).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("merged {} rows into {}", rows.len(), out.display());

    let labeled: Vec<(String, MetricsSummary)> = rows
        .iter()
        .map(|r| {
            summary_for(r, args.sla_pctl)
                .map(|s| (format!("{} scale={} B={} N={}", r.model, r.scale, r.batch, r.colocation), s))
        })
        .collect::<Result<_, _>>()?;
    let sla = SlaConfig { threshold_ms: args.sla_ms, percentile: args.sla_pctl };
    match latency_bounded_throughput(&labeled, &sla)
        .map_err(|e| CliError::Runtime(e.to_string()))?
    {
        SlaSelection::Qualified { point, summary } => {
            println!(
                "sla winner ({}ms @ p{}): {point} at {:.1} inf/s",
                args.sla_ms, args.sla_pctl, summary.throughput_inf_s
            );
        }
        SlaSelection::NoneQualified { fastest, summary } => {
            println!(
                "no merged point met the SLA ({}ms @ p{}); fastest was {fastest} with {:.1}us",
                args.sla_ms, args.sla_pctl, summary.sla_latency_us
            );
            if args.require_sla {
                return Err(CliError::SlaNoneQualified);
            }
        }
    }
    Ok(())
}
