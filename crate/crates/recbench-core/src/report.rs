//! Plot-ready CSV result formats and the JSON run manifest.
//!
//! Every CSV starts with a `# recbench-…-v1` schema comment line followed
//! by a column header, so files are self-describing and mergeable. The
//! manifest captures everything needed to re-run a benchmark bit-exactly
//! except wall-clock timings.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cachesim::{CacheStats, HierarchyConfig};
use crate::config::RecModelConfig;
use crate::harness::{MetricsSummary, OperatorBreakdown, PinningOutcome};

pub const RESULTS_SCHEMA: &str = "# recbench-results-v1";
pub const RESULTS_HEADER: &str = "model,scale,batch,colocation,count,mean_us,p5_us,p50_us,p95_us,p99_us,tput_inf_s,tput_items_s,sla_violation_frac,pinning";

pub const BREAKDOWN_SCHEMA: &str = "# recbench-breakdown-v1";
pub const BREAKDOWN_HEADER: &str =
    "model,scale,batch,colocation,instance,fc_frac,sls_frac,concat_frac,activation_frac,other_frac";

pub const TRACE_SCHEMA: &str = "# recbench-trace-v1";
pub const TRACE_HEADER: &str = "table_id,row_id";

pub const CACHESTATS_SCHEMA: &str = "# recbench-cachestats-v1";
pub const CACHESTATS_HEADER: &str = "policy,l2_kb,l3_kb,assoc,line,l2_accesses,l2_hits,l2_misses,l2_evictions,l3_accesses,l3_hits,l3_misses,l3_evictions,dram_accesses,back_invalidations,lookups,mpk_lookups";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {message}")]
    MalformedRow { path: String, line: usize, message: String },
    #[error("{path}: schema mismatch: expected {expected:?}")]
    SchemaMismatch { path: String, expected: &'static str },
    #[error("no result CSVs found in {0}")]
    EmptyInput(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io { path: path.display().to_string(), source }
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub scale: f64,
    pub batch: u32,
    pub colocation: u32,
    pub count: u64,
    pub mean_us: f64,
    pub p5_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub p99_us: f64,
    pub tput_inf_s: f64,
    pub tput_items_s: f64,
    pub sla_violation_frac: f64,
    pub pinning: String,
}

impl ResultRow {
    pub fn from_summary(
        model: &str,
        scale: f64,
        batch: u32,
        colocation: u32,
        summary: &MetricsSummary,
        pinning: PinningOutcome,
    ) -> Self {
        Self {
            model: model.to_string(),
            scale,
            batch,
            colocation,
            count: summary.count,
            mean_us: summary.mean_us,
            p5_us: summary.p5_us,
            p50_us: summary.p50_us,
            p95_us: summary.p95_us,
            p99_us: summary.p99_us,
            tput_inf_s: summary.throughput_inf_s,
            tput_items_s: summary.throughput_items_s,
            sla_violation_frac: summary.sla_violation_frac,
            pinning: pinning.as_str().to_string(),
        }
    }

    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.scale,
            self.batch,
            self.colocation,
            self.count,
            self.mean_us,
            self.p5_us,
            self.p50_us,
            self.p95_us,
            self.p99_us,
            self.tput_inf_s,
            self.tput_items_s,
            self.sla_violation_frac,
            self.pinning
        )
    }
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<(), ReportError> {
    let mut out = String::new();
    let _ = writeln!(out, "{RESULTS_SCHEMA}");
    let _ = writeln!(out, "{RESULTS_HEADER}");
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv_line());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, ReportError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let path_s = path.display().to_string();
    let mut lines = text.lines().enumerate();
    // schema comment, then the column header
    match lines.next() {
        Some((_, first)) if first.trim() == RESULTS_SCHEMA => {}
        _ => return Err(ReportError::SchemaMismatch { path: path_s, expected: RESULTS_SCHEMA }),
    }
    match lines.next() {
        Some((_, hdr)) if hdr.trim() == RESULTS_HEADER => {}
        _ => return Err(ReportError::SchemaMismatch { path: path_s, expected: RESULTS_HEADER }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(parse_result_row(line).map_err(|message| ReportError::MalformedRow {
            path: path_s.clone(),
            line: idx + 1,
            message,
        })?);
    }
    Ok(rows)
}

fn parse_result_row(line: &str) -> Result<ResultRow, String> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 14 {
        return Err(format!("expected 14 columns, got {}", parts.len()));
    }
    let f = |s: &str, what: &str| -> Result<f64, String> {
        s.parse::<f64>().map_err(|e| format!("bad {what} {s:?}: {e}"))
    };
    Ok(ResultRow {
        model: parts[0].to_string(),
        scale: f(parts[1], "scale")?,
        batch: parts[2].parse().map_err(|e| format!("bad batch: {e}"))?,
        colocation: parts[3].parse().map_err(|e| format!("bad colocation: {e}"))?,
        count: parts[4].parse().map_err(|e| format!("bad count: {e}"))?,
        mean_us: f(parts[5], "mean_us")?,
        p5_us: f(parts[6], "p5_us")?,
        p50_us: f(parts[7], "p50_us")?,
        p95_us: f(parts[8], "p95_us")?,
        p99_us: f(parts[9], "p99_us")?,
        tput_inf_s: f(parts[10], "tput_inf_s")?,
        tput_items_s: f(parts[11], "tput_items_s")?,
        sla_violation_frac: f(parts[12], "sla_violation_frac")?,
        pinning: parts[13].to_string(),
    })
}

/// Merges every results CSV in a directory; all files must carry the same
/// schema. Fails when the directory holds no result files at all.
pub fn merge_results_dir(dir: &Path) -> Result<Vec<ResultRow>, ReportError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut rows = Vec::new();
    let mut found = false;
    for p in paths {
        // skip CSVs of other schemas (breakdowns, cache stats)
        let head = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
        if !head.starts_with(RESULTS_SCHEMA) {
            continue;
        }
        found = true;
        rows.extend(read_results_csv(&p)?);
    }
    if !found {
        return Err(ReportError::EmptyInput(dir.display().to_string()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub model: String,
    pub scale: f64,
    pub batch: u32,
    pub colocation: u32,
    pub instance: u32,
    pub breakdown: OperatorBreakdown,
}

pub fn write_breakdown_csv(path: &Path, rows: &[BreakdownRow]) -> Result<(), ReportError> {
    let mut out = String::new();
    let _ = writeln!(out, "{BREAKDOWN_SCHEMA}");
    let _ = writeln!(out, "{BREAKDOWN_HEADER}");
    for r in rows {
        let b = &r.breakdown;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.model, r.scale, r.batch, r.colocation, r.instance, b.fc, b.sls, b.concat,
            b.activation, b.other
        );
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Embedding lookup trace: per-table geometry plus one (table, row) pair
/// per lookup, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    /// (rows, dim) per table, indexed by table id.
    pub tables: Vec<(u64, u64)>,
    pub lookups: Vec<(u32, u64)>,
}

/// Writes the lookup trace CSV. Table geometry rides along in comment
/// lines so a cache simulation can rebuild the address map without the
/// original model config.
pub fn write_trace_csv(
    path: &Path,
    meta: &str,
    tables: &[(u64, u64)],
    lookups: impl Iterator<Item = (u32, u64)>,
) -> Result<(), ReportError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = |s: String| w.write_all(s.as_bytes()).map_err(|e| io_err(path, e));
    emit(format!("{TRACE_SCHEMA}\n"))?;
    emit(format!("# meta {meta}\n"))?;
    for (i, (rows, dim)) in tables.iter().enumerate() {
        emit(format!("# table {i} rows={rows} dim={dim}\n"))?;
    }
    emit(format!("{TRACE_HEADER}\n"))?;
    for (table, row) in lookups {
        emit(format!("{table},{row}\n"))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a lookup trace CSV, reporting malformed rows with their line
/// number. An empty lookup section is valid.
pub fn read_trace_csv(path: &Path) -> Result<TraceFile, ReportError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let path_s = path.display().to_string();
    let mut first = true;
    let mut tables: Vec<(u64, u64)> = Vec::new();
    let mut lookups = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if first {
            if line != TRACE_SCHEMA {
                return Err(ReportError::SchemaMismatch { path: path_s, expected: TRACE_SCHEMA });
            }
            first = false;
            continue;
        }
        if let Some(rest) = line.strip_prefix("# table ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let parse = || -> Option<(usize, u64, u64)> {
                let idx: usize = parts.first()?.parse().ok()?;
                let rows: u64 = parts.get(1)?.strip_prefix("rows=")?.parse().ok()?;
                let dim: u64 = parts.get(2)?.strip_prefix("dim=")?.parse().ok()?;
                Some((idx, rows, dim))
            };
            let (t_idx, rows, dim) = parse().ok_or_else(|| ReportError::MalformedRow {
                path: path_s.clone(),
                line: lineno,
                message: format!("bad table descriptor {line:?}"),
            })?;
            if t_idx != tables.len() {
                return Err(ReportError::MalformedRow {
                    path: path_s,
                    line: lineno,
                    message: format!("table descriptors out of order at index {t_idx}"),
                });
            }
            tables.push((rows, dim));
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == TRACE_HEADER {
            saw_header = true;
            continue;
        }
        let (t, r) = line.split_once(',').ok_or_else(|| ReportError::MalformedRow {
            path: path_s.clone(),
            line: lineno,
            message: format!("expected table_id,row_id, got {line:?}"),
        })?;
        let table: u32 = t.trim().parse().map_err(|e| ReportError::MalformedRow {
            path: path_s.clone(),
            line: lineno,
            message: format!("bad table_id {t:?}: {e}"),
        })?;
        let row: u64 = r.trim().parse().map_err(|e| ReportError::MalformedRow {
            path: path_s.clone(),
            line: lineno,
            message: format!("bad row_id {r:?}: {e}"),
        })?;
        lookups.push((table, row));
    }
    if !saw_header {
        return Err(ReportError::SchemaMismatch { path: path_s, expected: TRACE_HEADER });
    }
    Ok(TraceFile { tables, lookups })
}

/// Formats one cache-stats CSV (schema, header, one data row).
pub fn cache_stats_csv(
    hierarchy: &HierarchyConfig,
    policy: &str,
    stats: &CacheStats,
    lookups: u64,
    mpk: f64,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CACHESTATS_SCHEMA}");
    let _ = writeln!(out, "{CACHESTATS_HEADER}");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        policy,
        hierarchy.l2.capacity_bytes / 1024,
        hierarchy.l3.capacity_bytes / 1024,
        hierarchy.l2.associativity,
        hierarchy.l2.line_size,
        stats.l2.accesses,
        stats.l2.hits,
        stats.l2.misses,
        stats.l2.evictions,
        stats.l3.accesses,
        stats.l3.hits,
        stats.l3.misses,
        stats.l3.evictions,
        stats.dram_accesses,
        stats.back_invalidations,
        lookups,
        mpk
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub logical_cores: usize,
    pub cpu_model: String,
}

impl HostInfo {
    pub fn detect() -> Self {
        let logical_cores = crate::harness::available_cores();
        let cpu_model = fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|text| {
                text.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|s| s.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".to_string());
        Self { logical_cores, cpu_model }
    }
}

/// Reproducibility record written next to every result CSV: full resolved
/// config, seeds, host, and timestamps. Re-running with the same manifest
/// reproduces everything but the wall-clock measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Vec<String>,
    pub model: RecModelConfig,
    pub scale: f64,
    pub seed: u64,
    pub sla_threshold_ms: f64,
    pub sla_percentile: f64,
    pub batch_sizes: Vec<u32>,
    pub colocation_degrees: Vec<u32>,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub warmup_queries: u64,
    pub query_limit: Option<u64>,
    pub pinning_requested: bool,
    pub shared_weights: bool,
    pub host: HostInfo,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub outputs: Vec<String>,
    pub truncated: bool,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn unix_now_s() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
