//! Deterministic synthetic workload generation: sparse-ID streams with
//! controllable locality, full inference requests, and arrival plans for
//! the harness.

use std::time::Duration;

use rand_distr::{Distribution, Exp, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RecModelConfig;
use crate::kernels::{DenseMatrix, SparseLookupBatch};
use crate::rng::{derive_seed, SplitMix64, Stream};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid id distribution: {0}")]
    InvalidDistribution(String),
    #[error("unique_id_fraction of an empty id list is undefined")]
    EmptyIds,
    #[error("invalid arrival plan: {0}")]
    InvalidArrival(String),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

/// How sparse IDs are drawn from `[0, rows)`.
///
/// `Zipf` ranks IDs by popularity (id 0 is hottest); `HotCold` draws from
/// a hot prefix of the table with the given probability and uniformly from
/// the remainder otherwise. Between them they can match any target
/// unique-ID fraction observed in real traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum IdDistribution {
    Uniform,
    Zipf { alpha: f64 },
    HotCold { hot_set_size: u64, hot_probability: f64 },
}

impl IdDistribution {
    /// Validates the parameters against a table of `rows` rows;
    /// the message names what is wrong.
    pub fn check(&self, rows: u64) -> Result<(), String> {
        match *self {
            IdDistribution::Uniform => Ok(()),
            IdDistribution::Zipf { alpha } => {
                if alpha.is_finite() && alpha > 0.0 {
                    Ok(())
                } else {
                    Err(format!("zipf alpha must be positive and finite, got {alpha}"))
                }
            }
            IdDistribution::HotCold { hot_set_size, hot_probability } => {
                if hot_set_size == 0 {
                    Err("hot_set_size must be at least 1".into())
                } else if hot_set_size > rows {
                    Err(format!("hot_set_size {hot_set_size} exceeds table rows {rows}"))
                } else if !(0.0..=1.0).contains(&hot_probability) {
                    Err(format!("hot_probability must be in [0, 1], got {hot_probability}"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Draws `count` sparse IDs in `[0, rows)` according to `dist`.
/// Output is a pure function of the arguments.
pub fn gen_ids(
    dist: &IdDistribution,
    rows: u64,
    count: usize,
    seed: u64,
) -> Result<Vec<u64>, WorkloadError> {
    if rows == 0 {
        return Err(WorkloadError::InvalidDistribution("table must have at least 1 row".into()));
    }
    dist.check(rows).map_err(WorkloadError::InvalidDistribution)?;
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    match *dist {
        IdDistribution::Uniform => {
            for _ in 0..count {
                out.push(rng.next_u64_below(rows));
            }
        }
        IdDistribution::Zipf { alpha } => {
            let zipf = Zipf::new(rows as f64, alpha)
                .map_err(|e| WorkloadError::InvalidDistribution(e.to_string()))?;
            for _ in 0..count {
                // the sampler yields ranks in [1, rows]
                let rank = zipf.sample(&mut rng) as u64;
                out.push(rank.saturating_sub(1).min(rows - 1));
            }
        }
        IdDistribution::HotCold { hot_set_size, hot_probability } => {
            let cold = rows - hot_set_size;
            for _ in 0..count {
                let hot = cold == 0 || rng.next_f64() < hot_probability;
                out.push(if hot {
                    rng.next_u64_below(hot_set_size)
                } else {
                    hot_set_size + rng.next_u64_below(cold)
                });
            }
        }
    }
    Ok(out)
}

/// Share of distinct values: `|distinct(ids)| / |ids|`.
pub fn unique_id_fraction(ids: &[u64]) -> Result<f64, WorkloadError> {
    if ids.is_empty() {
        return Err(WorkloadError::EmptyIds);
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted.len() as f64 / ids.len() as f64)
}

/// One batched query: a dense feature matrix and one sparse lookup batch
/// per embedding table, each pooling `batch` rows.
#[derive(Debug, Clone)]
pub struct InferenceRequest {
    pub dense: DenseMatrix,
    pub sparse: Vec<SparseLookupBatch>,
}

/// Generates a request matching `config`: dense values uniform in [0, 1),
/// per-table IDs from the table's own distribution, and every slice length
/// equal to the table's `lookups_per_sample`.
///
/// `seed` identifies the request; dense features and each table's IDs use
/// independent streams derived from it.
pub fn gen_request(
    config: &RecModelConfig,
    batch: usize,
    seed: u64,
) -> Result<InferenceRequest, WorkloadError> {
    let d = config.dense_features as usize;
    let mut dense_rng = SplitMix64::new(derive_seed(seed, Stream::DenseFeatures));
    let values = (0..batch * d).map(|_| dense_rng.next_f32_range(0.0, 1.0)).collect();
    let dense = DenseMatrix::from_vec(batch, d, values)?;

    let mut sparse = Vec::with_capacity(config.tables.len());
    for (t, table) in config.tables.iter().enumerate() {
        let m = table.lookups_per_sample as usize;
        let ids = gen_ids(
            &table.id_distribution,
            table.rows,
            batch * m,
            derive_seed(seed, Stream::SparseIds { table: t as u64 }),
        )?;
        let lengths = vec![table.lookups_per_sample as u32; batch];
        sparse.push(SparseLookupBatch::new(lengths, ids)?);
    }
    Ok(InferenceRequest { dense, sparse })
}

/// How queries arrive at the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ArrivalMode {
    /// Each of `concurrency` drivers dispatches the next query as soon as
    /// the previous one completes.
    ClosedLoop { concurrency: u32 },
    /// Poisson arrivals: exponential inter-arrival gaps with mean
    /// `1 / rate_qps`.
    OpenLoop { rate_qps: f64 },
}

/// Run shape shared by all harness entry points.
///
/// A run ends when `duration` elapses or, if `query_limit` is set, once
/// that many measured (post-warmup) queries have completed per instance —
/// whichever comes first. Warmup excludes both an initial time window and
/// an initial per-instance query count from all statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalPlan {
    pub mode: ArrivalMode,
    pub duration: Duration,
    pub warmup: Duration,
    pub warmup_queries: u64,
    pub query_limit: Option<u64>,
}

pub const DEFAULT_WARMUP_QUERIES: u64 = 100;

impl ArrivalPlan {
    /// Closed-loop plan with the default warmup: the first 10% of the
    /// duration or the first 100 queries, whichever excludes more.
    pub fn closed_loop(duration: Duration) -> Self {
        Self {
            mode: ArrivalMode::ClosedLoop { concurrency: 1 },
            duration,
            warmup: duration / 10,
            warmup_queries: DEFAULT_WARMUP_QUERIES,
            query_limit: None,
        }
    }

    pub fn open_loop(rate_qps: f64, duration: Duration) -> Self {
        Self {
            mode: ArrivalMode::OpenLoop { rate_qps },
            duration,
            warmup: duration / 10,
            warmup_queries: DEFAULT_WARMUP_QUERIES,
            query_limit: None,
        }
    }

    pub fn with_query_limit(mut self, limit: u64) -> Self {
        self.query_limit = Some(limit);
        self
    }

    pub fn with_warmup(mut self, warmup: Duration, warmup_queries: u64) -> Self {
        self.warmup = warmup;
        self.warmup_queries = warmup_queries;
        self
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        match self.mode {
            ArrivalMode::ClosedLoop { concurrency: 0 } => {
                return Err(WorkloadError::InvalidArrival("concurrency must be at least 1".into()))
            }
            ArrivalMode::OpenLoop { rate_qps } if !(rate_qps.is_finite() && rate_qps > 0.0) => {
                return Err(WorkloadError::InvalidArrival(format!(
                    "open-loop rate must be positive, got {rate_qps}"
                )))
            }
            _ => {}
        }
        if self.warmup >= self.duration {
            return Err(WorkloadError::InvalidArrival(format!(
                "warmup {:?} must be shorter than duration {:?}",
                self.warmup, self.duration
            )));
        }
        Ok(())
    }
}

/// Resolved dispatch schedule for one instance.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryPlan {
    /// Dispatch is gated on completions at run time; no precomputed offsets.
    ClosedLoop { concurrency: u32 },
    /// Precomputed dispatch offsets from run start, non-decreasing, all
    /// within the plan duration.
    OpenLoop { offsets: Vec<Duration> },
}

/// Resolves an arrival plan into a dispatch schedule. Open-loop offsets are
/// a pure function of `(plan, seed)`.
pub fn plan_queries(plan: &ArrivalPlan, seed: u64) -> Result<QueryPlan, WorkloadError> {
    plan.validate()?;
    match plan.mode {
        ArrivalMode::ClosedLoop { concurrency } => Ok(QueryPlan::ClosedLoop { concurrency }),
        ArrivalMode::OpenLoop { rate_qps } => {
            let exp = Exp::new(rate_qps)
                .map_err(|e| WorkloadError::InvalidArrival(e.to_string()))?;
            let mut rng = SplitMix64::new(seed);
            let mut offsets = Vec::new();
            let mut at = 0.0f64;
            loop {
                at += exp.sample(&mut rng);
                if at >= plan.duration.as_secs_f64() {
                    break;
                }
                offsets.push(Duration::from_secs_f64(at));
            }
            Ok(QueryPlan::OpenLoop { offsets })
        }
    }
}
