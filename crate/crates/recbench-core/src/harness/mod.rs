//! Benchmark harness: single-model and co-located experiment execution
//! plus SLA-aware metrics.
//!
//! Concurrency model: one worker thread per co-located instance driver;
//! workers share nothing mutable and stream completed samples to a single
//! collector over an mpsc channel. Clock reads are monotonic and
//! per-worker, all relative to one run-start instant.

mod metrics;
mod pinning;
mod runner;

pub use metrics::{
    latency_bounded_throughput, percentile, summarize, LatencySample, MetricsSummary,
    OperatorBreakdown, SlaConfig, SlaSelection,
};
pub use pinning::{available_cores, pin_current_thread, PinningOutcome};
pub use runner::{
    run_colocated, run_single, shutdown_flag, sweep, ColocatedRun, Pinning, RunPlan, SingleRun,
    SweepCell,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no samples to summarize")]
    EmptySamples,
    #[error("percentile {0} outside (0, 100]")]
    InvalidPercentile(f64),
    #[error("invalid run plan: {0}")]
    InvalidPlan(String),
    #[error("no measured results")]
    NoResults,
    #[error("cannot pin {requested} instances one-per-core: only {available} cores available")]
    PinningImpossible { requested: u32, available: usize },
    #[error(transparent)]
    Workload(#[from] crate::workload::WorkloadError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}
