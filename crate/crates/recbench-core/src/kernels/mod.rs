//! From-scratch fp32 inference kernels and the end-to-end forward pass.
//!
//! All kernels are single-threaded and allocation-light; a forward call
//! uses exactly one thread of compute so that co-location experiments
//! control parallelism explicitly at the instance level.

mod matrix;
mod model;
mod sls;

pub use matrix::{concat_rows, fc_forward, relu, relu_in_place, sigmoid, sigmoid_in_place, DenseMatrix};
pub use model::{
    forward, init_weights, FcLayer, ModelInstance, OperatorLabel, OperatorTiming,
    OperatorTimings, Timing,
};
pub use sls::{sls, EmbeddingTable, SparseLookupBatch};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("sparse id {id} at ids[{position}] out of range for a table with {rows} rows")]
    IdOutOfRange { position: usize, id: u64, rows: usize },
    #[error("lengths sum to {expected} but {actual} ids were provided")]
    LengthsMismatch { expected: u64, actual: usize },
    #[error("embedding table {table}: {source}")]
    InTable {
        table: usize,
        #[source]
        source: Box<KernelError>,
    },
    #[error("model config invalid: {0}")]
    InvalidConfig(#[from] crate::config::ConfigError),
}

impl KernelError {
    /// Wraps an error with the index of the embedding table it came from.
    pub fn in_table(self, table: usize) -> KernelError {
        KernelError::InTable { table, source: Box::new(self) }
    }
}
