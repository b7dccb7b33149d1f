//! Latency statistics, SLA accounting, and operator breakdowns.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::config::OpKind;
use crate::kernels::OperatorTimings;

/// Service-level agreement: a latency threshold that the given percentile
/// of requests must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaConfig {
    pub threshold_ms: f64,
    pub percentile: f64,
}

impl Default for SlaConfig {
    fn default() -> Self {
        Self { threshold_ms: 450.0, percentile: 99.0 }
    }
}

impl SlaConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.threshold_ms > 0.0) {
            return Err(HarnessError::InvalidPlan(format!(
                "SLA threshold must be positive, got {}",
                self.threshold_ms
            )));
        }
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return Err(HarnessError::InvalidPercentile(self.percentile));
        }
        Ok(())
    }
}

/// One completed query. Timestamps are monotonic nanoseconds from run
/// start; `dispatch <= start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatencySample {
    pub instance_id: u32,
    pub query_id: u64,
    pub dispatch_ns: u64,
    pub start_ns: u64,
    pub end_ns: u64,
    pub batch: u32,
}

impl LatencySample {
    /// End-to-end latency including queuing, in microseconds.
    pub fn latency_us(&self) -> f64 {
        (self.end_ns - self.dispatch_ns) as f64 / 1_000.0
    }

    /// Pure compute latency from service start, in microseconds.
    pub fn compute_us(&self) -> f64 {
        (self.end_ns - self.start_ns) as f64 / 1_000.0
    }
}

/// Nearest-rank percentile: the element at index `ceil(p/100 * n) - 1` of
/// the ascending sort. Deterministic and always an element of the sample
/// set; no interpolation.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::EmptySamples);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(HarnessError::InvalidPercentile(p));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Latency distribution and throughput of one measured run slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub count: u64,
    pub mean_us: f64,
    pub p5_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub p99_us: f64,
    /// Latency at the SLA percentile this summary was computed against.
    pub sla_latency_us: f64,
    /// Completed queries per second of measured wall span.
    pub throughput_inf_s: f64,
    /// Completed items (queries x batch) per second.
    pub throughput_items_s: f64,
    /// Share of samples with end-to-end latency above the SLA threshold.
    pub sla_violation_frac: f64,
}

/// Computes summary statistics over post-warmup samples. Latency is
/// dispatch-to-completion, so open-loop queuing delay counts against the
/// SLA, mirroring how a service would experience it.
pub fn summarize(samples: &[LatencySample], sla: &SlaConfig) -> Result<MetricsSummary, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::EmptySamples);
    }
    sla.validate()?;
    let mut latencies: Vec<f64> = samples.iter().map(|s| s.latency_us()).collect();
    latencies.sort_by(f64::total_cmp);
    let count = latencies.len() as u64;
    let mean_us = latencies.iter().sum::<f64>() / count as f64;

    let span_start = samples.iter().map(|s| s.dispatch_ns).min().expect("non-empty");
    let span_end = samples.iter().map(|s| s.end_ns).max().expect("non-empty");
    let span_s = (span_end - span_start).max(1) as f64 / 1e9;
    let items: u64 = samples.iter().map(|s| s.batch as u64).sum();

    let threshold_us = sla.threshold_ms * 1_000.0;
    let violations = latencies.iter().filter(|&&l| l > threshold_us).count();

    Ok(MetricsSummary {
        count,
        mean_us,
        p5_us: percentile_sorted(&latencies, 5.0),
        p50_us: percentile_sorted(&latencies, 50.0),
        p95_us: percentile_sorted(&latencies, 95.0),
        p99_us: percentile_sorted(&latencies, 99.0),
        sla_latency_us: percentile_sorted(&latencies, sla.percentile),
        throughput_inf_s: count as f64 / span_s,
        throughput_items_s: items as f64 / span_s,
        sla_violation_frac: violations as f64 / count as f64,
    })
}

/// Fraction of total operator time spent in each operator kind.
/// Fractions are non-negative and sum to 1 within 1e-6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorBreakdown {
    pub fc: f64,
    pub sls: f64,
    pub concat: f64,
    pub activation: f64,
    pub other: f64,
}

impl OperatorBreakdown {
    /// Builds a breakdown from per-kind nanosecond totals; `None` when no
    /// operator time was recorded.
    pub fn from_kind_totals(totals: &[(OpKind, u64)]) -> Option<Self> {
        let sum: u64 = totals.iter().map(|&(_, ns)| ns).sum();
        if sum == 0 {
            return None;
        }
        let frac = |kind: OpKind| {
            totals.iter().filter(|&&(k, _)| k == kind).map(|&(_, ns)| ns).sum::<u64>() as f64
                / sum as f64
        };
        Some(Self {
            fc: frac(OpKind::Fc),
            sls: frac(OpKind::Sls),
            concat: frac(OpKind::Concat),
            activation: frac(OpKind::Activation),
            other: frac(OpKind::Other),
        })
    }

    pub fn from_timings(timings: &OperatorTimings) -> Option<Self> {
        Self::from_kind_totals(&timings.kind_totals())
    }

    pub fn fraction(&self, kind: OpKind) -> f64 {
        match kind {
            OpKind::Fc => self.fc,
            OpKind::Sls => self.sls,
            OpKind::Concat => self.concat,
            OpKind::Activation => self.activation,
            OpKind::Other => self.other,
        }
    }

    pub fn sum(&self) -> f64 {
        self.fc + self.sls + self.concat + self.activation + self.other
    }
}

/// Outcome of SLA-bounded selection over a set of measured config points.
#[derive(Debug, Clone, PartialEq)]
pub enum SlaSelection<T> {
    /// The highest-throughput point whose SLA-percentile latency meets the
    /// threshold.
    Qualified { point: T, summary: MetricsSummary },
    /// No point met the SLA; the lowest-latency point is reported for
    /// diagnostics.
    NoneQualified { fastest: T, summary: MetricsSummary },
}

/// Latency-bounded throughput: among points whose latency at
/// `sla.percentile` is within `sla.threshold_ms`, picks the one with the
/// highest throughput.
pub fn latency_bounded_throughput<T: Clone>(
    results: &[(T, MetricsSummary)],
    sla: &SlaConfig,
) -> Result<SlaSelection<T>, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::NoResults);
    }
    sla.validate()?;
    let threshold_us = sla.threshold_ms * 1_000.0;
    let qualified = results
        .iter()
        .filter(|(_, s)| s.sla_latency_us <= threshold_us)
        .max_by(|a, b| a.1.throughput_inf_s.total_cmp(&b.1.throughput_inf_s));
    if let Some((point, summary)) = qualified {
        return Ok(SlaSelection::Qualified { point: point.clone(), summary: *summary });
    }
    let (fastest, summary) = results
        .iter()
        .min_by(|a, b| a.1.sla_latency_us.total_cmp(&b.1.sla_latency_us))
        .expect("non-empty");
    Ok(SlaSelection::NoneQualified { fastest: fastest.clone(), summary: *summary })
}
