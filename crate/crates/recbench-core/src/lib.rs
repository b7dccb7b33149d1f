//! Benchmark suite for embedding-table + fully-connected recommendation
//! model inference.
//!
//! The crate is organized around the life of a benchmark run:
//!
//! - [`config`] describes model architectures (FC stacks plus embedding
//!   tables) and characterizes them analytically: storage, FLOPs,
//!   operational intensity.
//! - [`kernels`] holds the fp32 inference kernels (sparse lengths-sum,
//!   FC forward, activations) and the end-to-end forward pass with
//!   per-operator timing attribution.
//! - [`workload`] generates deterministic synthetic requests, sparse-ID
//!   traces with controllable locality, and arrival plans.
//! - [`harness`] drives single-model and co-located runs and computes
//!   SLA-aware metrics: tail percentiles, latency-bounded throughput.
//! - [`cachesim`] is a trace-driven two-level cache-hierarchy simulator
//!   (inclusive vs exclusive) for studying embedding-lookup locality.
//! - [`report`] reads and writes the CSV/JSON result formats.
//!
//! Everything that involves randomness flows from a single root seed via
//! [`rng::derive_seed`], so any component can be re-run in isolation.

pub mod cachesim;
pub mod config;
pub mod harness;
pub mod kernels;
pub mod report;
pub mod rng;
pub mod workload;

pub use config::{ModelClass, OpKind, RecModelConfig};
pub use kernels::{DenseMatrix, EmbeddingTable, ModelInstance, SparseLookupBatch};
pub use workload::InferenceRequest;
