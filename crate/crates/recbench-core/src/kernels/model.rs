//! Model instantiation and the end-to-end forward pass.

use std::time::Instant;

use super::matrix::{concat_rows, fc_forward, relu_in_place, sigmoid_in_place, DenseMatrix};
use super::sls::{sls, EmbeddingTable};
use super::KernelError;
use crate::config::{validate, OpKind, RecModelConfig, ViolationList};
use crate::rng::SplitMix64;
use crate::workload::InferenceRequest;

/// Weight initialization range. The values never affect timing, only
/// numerical stability through deep stacks, so a small symmetric uniform
/// range is enough.
const WEIGHT_RANGE: f32 = 0.05;

#[derive(Debug, Clone)]
pub struct FcLayer {
    pub weights: DenseMatrix,
    pub bias: Vec<f32>,
}

/// One materialized model: weights, biases, and embedding tables, all a
/// deterministic function of `(config, seed)`.
///
/// Immutable after init and safe to share read-only across threads;
/// `forward` is re-entrant because all scratch buffers are per-call.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    config: RecModelConfig,
    bottom: Vec<FcLayer>,
    top: Vec<FcLayer>,
    tables: Vec<EmbeddingTable>,
    seed: u64,
}

impl ModelInstance {
    pub fn config(&self) -> &RecModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bottom_layers(&self) -> &[FcLayer] {
        &self.bottom
    }

    pub fn top_layers(&self) -> &[FcLayer] {
        &self.top
    }

    pub fn tables(&self) -> &[EmbeddingTable] {
        &self.tables
    }
}

/// Materializes a model from its config with SplitMix64-generated weights,
/// uniform in [-0.05, 0.05]. The same `(config, seed)` pair always yields a
/// bit-identical instance.
pub fn init_weights(config: &RecModelConfig, seed: u64) -> Result<ModelInstance, KernelError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(KernelError::InvalidConfig(crate::config::ConfigError::Invalid(
            ViolationList(violations),
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut stack = |dims: Vec<(u64, u64)>| -> Vec<FcLayer> {
        dims.into_iter()
            .map(|(i, o)| {
                let (i, o) = (i as usize, o as usize);
                let data =
                    (0..i * o).map(|_| rng.next_f32_range(-WEIGHT_RANGE, WEIGHT_RANGE)).collect();
                let weights = DenseMatrix::from_vec(i, o, data).expect("dims agree");
                let bias =
                    (0..o).map(|_| rng.next_f32_range(-WEIGHT_RANGE, WEIGHT_RANGE)).collect();
                FcLayer { weights, bias }
            })
            .collect()
    };
    let bottom = stack(config.bottom_fc.layer_dims());
    let top = stack(config.top_fc.layer_dims());
    let tables = config
        .tables
        .iter()
        .map(|t| {
            let (rows, dim) = (t.rows as usize, t.dim as usize);
            let data =
                (0..rows * dim).map(|_| rng.next_f32_range(-WEIGHT_RANGE, WEIGHT_RANGE)).collect();
            EmbeddingTable::from_vec(rows, dim, data).expect("dims agree")
        })
        .collect();
    Ok(ModelInstance { config: config.clone(), bottom, top, tables, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Off,
    On,
}

/// Identifies one operator instance in the forward graph without
/// allocating in the timed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    BottomFc(u32),
    BottomRelu(u32),
    Sls(u32),
    Concat,
    TopFc(u32),
    TopRelu(u32),
    Sigmoid,
}

impl std::fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorLabel::BottomFc(i) => write!(f, "bottom_fc[{i}]"),
            OperatorLabel::BottomRelu(i) => write!(f, "relu(bottom[{i}])"),
            OperatorLabel::Sls(t) => write!(f, "sls[{t}]"),
            OperatorLabel::Concat => f.write_str("concat"),
            OperatorLabel::TopFc(i) => write!(f, "top_fc[{i}]"),
            OperatorLabel::TopRelu(i) => write!(f, "relu(top[{i}])"),
            OperatorLabel::Sigmoid => f.write_str("sigmoid"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorTiming {
    pub kind: OpKind,
    pub label: OperatorLabel,
    pub nanos: u64,
}

/// Per-operator elapsed time of one forward call, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperatorTimings(Vec<OperatorTiming>);

impl OperatorTimings {
    pub fn entries(&self) -> &[OperatorTiming] {
        &self.0
    }

    pub fn total_nanos(&self) -> u64 {
        self.0.iter().map(|e| e.nanos).sum()
    }

    /// Summed nanoseconds per operator kind, as (FC, SLS, Concat,
    /// Activation, Other).
    pub fn kind_totals(&self) -> [(OpKind, u64); 5] {
        let mut totals = [
            (OpKind::Fc, 0),
            (OpKind::Sls, 0),
            (OpKind::Concat, 0),
            (OpKind::Activation, 0),
            (OpKind::Other, 0),
        ];
        for e in &self.0 {
            let slot = totals.iter_mut().find(|(k, _)| *k == e.kind).expect("exhaustive");
            slot.1 += e.nanos;
        }
        totals
    }
}

struct Recorder {
    enabled: bool,
    entries: Vec<OperatorTiming>,
}

impl Recorder {
    fn new(timing: Timing) -> Self {
        Self { enabled: timing == Timing::On, entries: Vec::new() }
    }

    #[inline]
    fn record<T>(&mut self, kind: OpKind, label: OperatorLabel, f: impl FnOnce() -> T) -> T {
        if self.enabled {
            let start = Instant::now();
            let out = f();
            let nanos = start.elapsed().as_nanos() as u64;
            self.entries.push(OperatorTiming { kind, label, nanos });
            out
        } else {
            f()
        }
    }
}

/// Runs one batched inference through the whole model.
///
/// Flow: bottom FC stack over the dense features (ReLU between layers),
/// one pooled SLS per embedding table, concat of the bottom output with
/// all pooled embeddings, then the top FC stack (ReLU between layers,
/// sigmoid on the final width-1 layer). Returns the B x 1 CTR matrix and,
/// when `timing` is on, wall-clock attribution per operator; with timing
/// off no clocks are read at all.
pub fn forward(
    instance: &ModelInstance,
    request: &InferenceRequest,
    timing: Timing,
) -> Result<(DenseMatrix, OperatorTimings), KernelError> {
    let config = &instance.config;
    let batch = request.dense.rows();
    if request.dense.cols() as u64 != config.dense_features {
        return Err(KernelError::ShapeMismatch {
            op: "forward",
            detail: format!(
                "request has {} dense features, model expects {}",
                request.dense.cols(),
                config.dense_features
            ),
        });
    }
    if request.sparse.len() != instance.tables.len() {
        return Err(KernelError::ShapeMismatch {
            op: "forward",
            detail: format!(
                "request has {} sparse batches, model has {} tables",
                request.sparse.len(),
                instance.tables.len()
            ),
        });
    }
    for (t, sb) in request.sparse.iter().enumerate() {
        if sb.pooled_rows() != batch {
            return Err(KernelError::ShapeMismatch {
                op: "forward",
                detail: format!(
                    "sparse batch {t} pools {} rows, batch size is {batch}",
                    sb.pooled_rows()
                ),
            });
        }
    }

    let mut rec = Recorder::new(timing);

    // Bottom stack: ReLU after every layer except the last, whose raw
    // output feeds the concat.
    let mut acts = request.dense.clone();
    let bottom_n = instance.bottom.len();
    for (i, layer) in instance.bottom.iter().enumerate() {
        acts = rec.record(OpKind::Fc, OperatorLabel::BottomFc(i as u32), || {
            fc_forward(&acts, &layer.weights, &layer.bias)
        })?;
        if i + 1 < bottom_n {
            rec.record(OpKind::Activation, OperatorLabel::BottomRelu(i as u32), || {
                relu_in_place(&mut acts)
            });
        }
    }

    let mut pooled = Vec::with_capacity(instance.tables.len());
    for (t, (table, sparse)) in instance.tables.iter().zip(&request.sparse).enumerate() {
        let out = rec
            .record(OpKind::Sls, OperatorLabel::Sls(t as u32), || sls(table, sparse))
            .map_err(|e| e.in_table(t))?;
        pooled.push(out);
    }

    let mut parts: Vec<&DenseMatrix> = Vec::with_capacity(1 + pooled.len());
    parts.push(&acts);
    parts.extend(pooled.iter());
    let mut acts = rec.record(OpKind::Concat, OperatorLabel::Concat, || concat_rows(&parts))?;

    let top_n = instance.top.len();
    for (i, layer) in instance.top.iter().enumerate() {
        acts = rec.record(OpKind::Fc, OperatorLabel::TopFc(i as u32), || {
            fc_forward(&acts, &layer.weights, &layer.bias)
        })?;
        if i + 1 < top_n {
            rec.record(OpKind::Activation, OperatorLabel::TopRelu(i as u32), || {
                relu_in_place(&mut acts)
            });
        } else {
            rec.record(OpKind::Activation, OperatorLabel::Sigmoid, || {
                sigmoid_in_place(&mut acts)
            });
        }
    }

    Ok((acts, OperatorTimings(rec.entries)))
}
