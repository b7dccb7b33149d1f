//! Model architecture configuration and analytical characterization.
//!
//! A [`RecModelConfig`] fully describes one recommendation model: a
//! bottom FC stack over dense features, a set of embedding tables over
//! sparse features, and a top FC stack over the concatenation of both.
//! Three scaled presets ([`ModelClass`]) cover the production model
//! classes: RMC1 (small, few tables), RMC2 (embedding-heavy, many
//! tables), RMC3 (FC-heavy, few large tables).
//!
//! Besides validation, this module computes storage footprints, FLOP
//! counts, and per-operator operational intensity analytically, without
//! running any kernel.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

use crate::workload::IdDistribution;

pub const BYTES_PER_F32: u64 = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown model class {0:?}: valid presets are rmc1, rmc2, rmc3")]
    UnknownClass(String),
    #[error("scale {scale} is not a positive finite number")]
    InvalidScale { scale: f64 },
    #[error("scale {scale} produces {rows} rows for a table of {base_rows}; at least 1 row is required")]
    ScaleTooSmall { scale: f64, base_rows: u64, rows: u64 },
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("operational intensity is defined for FC and SLS operators, not {0}")]
    UnsupportedOpKind(OpKind),
    #[error("operator shape {shape} does not match operator kind {kind}")]
    ShapeKindMismatch { kind: OpKind, shape: &'static str },
    #[error("operator shape parameters must all be at least 1")]
    DegenerateShape,
    #[error("invalid model config: {0}")]
    Invalid(ViolationList),
    #[error("failed to read model config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse model config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Operator tag used for timing attribution and intensity queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Fc,
    Sls,
    Concat,
    Activation,
    Other,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpKind::Fc => "FC",
            OpKind::Sls => "SLS",
            OpKind::Concat => "Concat",
            OpKind::Activation => "Activation",
            OpKind::Other => "Other",
        };
        f.write_str(s)
    }
}

/// One stack of fully connected layers.
///
/// `layer_widths[i]` is the output width of layer `i`; the first layer
/// consumes `input_width` features. Widths are arbitrary positive
/// integers; nothing requires powers of two or cache-line alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcStackConfig {
    pub input_width: u64,
    pub layer_widths: Vec<u64>,
}

impl FcStackConfig {
    pub fn new(input_width: u64, layer_widths: Vec<u64>) -> Self {
        Self { input_width, layer_widths }
    }

    /// (input, output) width of each layer in order.
    pub fn layer_dims(&self) -> Vec<(u64, u64)> {
        let mut dims = Vec::with_capacity(self.layer_widths.len());
        let mut input = self.input_width;
        for &w in &self.layer_widths {
            dims.push((input, w));
            input = w;
        }
        dims
    }

    /// Width of the stack output (last layer), or the input width for an
    /// empty stack.
    pub fn output_width(&self) -> u64 {
        self.layer_widths.last().copied().unwrap_or(self.input_width)
    }

    /// Weight + bias parameter count, fp32 elements.
    pub fn param_count(&self) -> u64 {
        self.layer_dims().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// One embedding table: `rows` x `dim` fp32 values, pooled over
/// `lookups_per_sample` sparse IDs per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTableConfig {
    pub rows: u64,
    pub dim: u64,
    pub lookups_per_sample: u64,
    pub id_distribution: IdDistribution,
}

impl EmbeddingTableConfig {
    pub fn bytes(&self) -> u64 {
        self.rows * self.dim * BYTES_PER_F32
    }
}

/// Final activation of the top FC stack. The single output is a
/// click-through-rate estimate, so only sigmoid is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalActivation {
    Sigmoid,
}

/// Complete architectural description of one recommendation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecModelConfig {
    pub name: String,
    pub dense_features: u64,
    pub bottom_fc: FcStackConfig,
    pub tables: Vec<EmbeddingTableConfig>,
    pub top_fc: FcStackConfig,
    pub final_activation: FinalActivation,
}

/// The three production model classes available as presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelClass {
    Rmc1,
    Rmc2,
    Rmc3,
}

impl ModelClass {
    pub const ALL: [ModelClass; 3] = [ModelClass::Rmc1, ModelClass::Rmc2, ModelClass::Rmc3];

    pub fn name(self) -> &'static str {
        match self {
            ModelClass::Rmc1 => "rmc1",
            ModelClass::Rmc2 => "rmc2",
            ModelClass::Rmc3 => "rmc3",
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelClass {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rmc1" => Ok(ModelClass::Rmc1),
            "rmc2" => Ok(ModelClass::Rmc2),
            "rmc3" => Ok(ModelClass::Rmc3),
            other => Err(ConfigError::UnknownClass(other.to_string())),
        }
    }
}

/// Baseline (scale = 1) table geometry per class.
///
/// Anchors: RMC1 follows the published small-model example (5 tables of
/// 10^5 x 32 with 80 lookups, 128-64-32 bottom, 128-32-1 top). RMC2 keeps
/// that FC shape but uses 10x as many tables with 10x the rows, landing at
/// 100x RMC1's embedding storage (6.4 GB vs 64 MB at scale 1). RMC3 has few
/// but very large tables, few lookups, and a much wider bottom stack fed by
/// more dense features.
struct ClassBaseline {
    dense_features: u64,
    bottom_widths: &'static [u64],
    top_widths: &'static [u64],
    table_count: usize,
    table_rows: u64,
    table_dim: u64,
    lookups_per_sample: u64,
}

fn baseline(class: ModelClass) -> ClassBaseline {
    match class {
        ModelClass::Rmc1 => ClassBaseline {
            dense_features: 32,
            bottom_widths: &[128, 64, 32],
            top_widths: &[128, 32, 1],
            table_count: 5,
            table_rows: 100_000,
            table_dim: 32,
            lookups_per_sample: 80,
        },
        ModelClass::Rmc2 => ClassBaseline {
            dense_features: 32,
            bottom_widths: &[128, 64, 32],
            top_widths: &[128, 32, 1],
            table_count: 50,
            table_rows: 1_000_000,
            table_dim: 32,
            lookups_per_sample: 80,
        },
        ModelClass::Rmc3 => ClassBaseline {
            dense_features: 256,
            bottom_widths: &[2048, 256, 64, 32],
            top_widths: &[128, 32, 1],
            table_count: 2,
            table_rows: 2_000_000,
            table_dim: 32,
            lookups_per_sample: 4,
        },
    }
}

/// Builds a fully concrete preset config for one model class.
///
/// `scale` multiplies embedding-table rows (and nothing else); scale = 1
/// yields the baseline storage footprints of roughly 64 MB / 6.4 GB /
/// 512 MB for RMC1 / RMC2 / RMC3. Fails if the scaled row count of any
/// table would drop below 1.
pub fn preset(class: ModelClass, scale: f64) -> Result<RecModelConfig, ConfigError> {
    let b = baseline(class);
    let rows = scaled_rows(b.table_rows, scale)?;
    let table = EmbeddingTableConfig {
        rows,
        dim: b.table_dim,
        lookups_per_sample: b.lookups_per_sample,
        id_distribution: IdDistribution::Uniform,
    };
    let tables = vec![table; b.table_count];
    let bottom_fc = FcStackConfig::new(b.dense_features, b.bottom_widths.to_vec());
    let concat_width = bottom_fc.output_width() + tables.iter().map(|t| t.dim).sum::<u64>();
    let top_fc = FcStackConfig::new(concat_width, b.top_widths.to_vec());
    Ok(RecModelConfig {
        name: class.name().to_string(),
        dense_features: b.dense_features,
        bottom_fc,
        tables,
        top_fc,
        final_activation: FinalActivation::Sigmoid,
    })
}

/// Multiplies every embedding table's row count by `scale`, keeping all
/// other fields. Used by [`preset`] and by the CLI when scaling a config
/// loaded from JSON.
pub fn scale_rows(config: &mut RecModelConfig, scale: f64) -> Result<(), ConfigError> {
    for t in &mut config.tables {
        t.rows = scaled_rows(t.rows, scale)?;
    }
    Ok(())
}

fn scaled_rows(base_rows: u64, scale: f64) -> Result<u64, ConfigError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ConfigError::InvalidScale { scale });
    }
    let rows = (base_rows as f64 * scale).round();
    if rows < 1.0 {
        return Err(ConfigError::ScaleTooSmall { scale, base_rows, rows: rows as u64 });
    }
    Ok(rows as u64)
}

/// One violated invariant, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationList(pub Vec<Violation>);

impl fmt::Display for ViolationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every structural invariant and reports all violations.
/// Violations are data, not errors: an empty list means the config is valid.
pub fn validate(config: &RecModelConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check_stack = |prefix: &str, stack: &FcStackConfig| {
        if stack.input_width == 0 {
            out.push(Violation {
                field: format!("{prefix}.input_width"),
                message: "must be at least 1".into(),
            });
        }
        if stack.layer_widths.is_empty() {
            out.push(Violation {
                field: format!("{prefix}.layer_widths"),
                message: "must not be empty".into(),
            });
        }
        for (i, &w) in stack.layer_widths.iter().enumerate() {
            if w == 0 {
                out.push(Violation {
                    field: format!("{prefix}.layer_widths[{i}]"),
                    message: "layer width must be at least 1".into(),
                });
            }
        }
    };
    check_stack("bottom_fc", &config.bottom_fc);
    check_stack("top_fc", &config.top_fc);

    if config.dense_features == 0 {
        out.push(Violation {
            field: "dense_features".into(),
            message: "must be at least 1".into(),
        });
    }
    if config.bottom_fc.input_width != config.dense_features {
        out.push(Violation {
            field: "bottom_fc.input_width".into(),
            message: format!(
                "must equal dense_features ({}), got {}",
                config.dense_features, config.bottom_fc.input_width
            ),
        });
    }

    let concat_width =
        config.bottom_fc.output_width() + config.tables.iter().map(|t| t.dim).sum::<u64>();
    if config.top_fc.input_width != concat_width {
        out.push(Violation {
            field: "top_fc.input_width".into(),
            message: format!(
                "must equal bottom output + sum of table dims ({concat_width}), got {}",
                config.top_fc.input_width
            ),
        });
    }
    if config.top_fc.layer_widths.last() != Some(&1) {
        out.push(Violation {
            field: "top_fc.layer_widths".into(),
            message: "last layer must have width 1 (single CTR output)".into(),
        });
    }

    for (i, t) in config.tables.iter().enumerate() {
        if t.rows == 0 {
            out.push(Violation {
                field: format!("tables[{i}].rows"),
                message: "must be at least 1".into(),
            });
        }
        if t.dim == 0 {
            out.push(Violation {
                field: format!("tables[{i}].dim"),
                message: "must be at least 1".into(),
            });
        }
        if t.lookups_per_sample == 0 {
            out.push(Violation {
                field: format!("tables[{i}].lookups_per_sample"),
                message: "must be at least 1".into(),
            });
        }
        if let Err(msg) = t.id_distribution.check(t.rows) {
            out.push(Violation {
                field: format!("tables[{i}].id_distribution"),
                message: msg,
            });
        }
    }
    out
}

/// Returns the config if valid, otherwise an error listing every violation.
pub fn validated(config: RecModelConfig) -> Result<RecModelConfig, ConfigError> {
    let violations = validate(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(ViolationList(violations)))
    }
}

/// fp32 storage footprint of a model's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StorageBytes {
    pub embedding_bytes: u64,
    pub fc_bytes: u64,
    pub total: u64,
}

pub fn storage_bytes(config: &RecModelConfig) -> StorageBytes {
    let embedding_bytes: u64 = config.tables.iter().map(|t| t.bytes()).sum();
    let fc_bytes =
        (config.bottom_fc.param_count() + config.top_fc.param_count()) * BYTES_PER_F32;
    StorageBytes { embedding_bytes, fc_bytes, total: embedding_bytes + fc_bytes }
}

/// FLOPs of one batched inference, split by operator family.
///
/// FC layers count multiply and accumulate separately (2 FLOPs per MAC);
/// SLS counts one add per element of every looked-up row, which keeps the
/// FLOPs : bytes-read ratio of the gather at exactly 0.25 in fp32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlopCounts {
    pub fc_flops: u64,
    pub sls_flops: u64,
    pub total: u64,
}

pub fn flops_per_inference(config: &RecModelConfig, batch: u64) -> Result<FlopCounts, ConfigError> {
    if batch == 0 {
        return Err(ConfigError::ZeroBatch);
    }
    let fc_flops: u64 = [&config.bottom_fc, &config.top_fc]
        .iter()
        .flat_map(|s| s.layer_dims())
        .map(|(i, o)| 2 * batch * i * o)
        .sum();
    let sls_flops: u64 =
        batch * config.tables.iter().map(|t| t.lookups_per_sample * t.dim).sum::<u64>();
    Ok(FlopCounts { fc_flops, sls_flops, total: fc_flops + sls_flops })
}

/// Shape parameters for an operational-intensity query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpShape {
    Fc { input: u64, output: u64, batch: u64 },
    Sls { lookups: u64, dim: u64 },
}

impl OpShape {
    fn name(&self) -> &'static str {
        match self {
            OpShape::Fc { .. } => "Fc",
            OpShape::Sls { .. } => "Sls",
        }
    }
}

/// FLOPs per byte of memory traffic for one operator.
///
/// SLS reads `lookups` rows of `dim` fp32 values and performs one add per
/// element, so the result is exactly 1/4 regardless of shape. FC performs
/// `2*B*in*out` FLOPs over weights, bias, and the input activations.
pub fn operational_intensity(kind: OpKind, shape: OpShape) -> Result<f64, ConfigError> {
    match (kind, shape) {
        (OpKind::Fc, OpShape::Fc { input, output, batch }) => {
            if input == 0 || output == 0 || batch == 0 {
                return Err(ConfigError::DegenerateShape);
            }
            let flops = (2 * batch * input * output) as f64;
            let bytes = ((input * output + output + batch * input) * BYTES_PER_F32) as f64;
            Ok(flops / bytes)
        }
        (OpKind::Sls, OpShape::Sls { lookups, dim }) => {
            if lookups == 0 || dim == 0 {
                return Err(ConfigError::DegenerateShape);
            }
            let flops = (lookups * dim) as f64;
            let bytes = (lookups * dim * BYTES_PER_F32) as f64;
            Ok(flops / bytes)
        }
        (OpKind::Fc, shape) | (OpKind::Sls, shape) => {
            Err(ConfigError::ShapeKindMismatch { kind, shape: shape.name() })
        }
        (kind, _) => Err(ConfigError::UnsupportedOpKind(kind)),
    }
}

impl RecModelConfig {
    /// Width of the concat output feeding the top FC stack.
    pub fn concat_width(&self) -> u64 {
        self.bottom_fc.output_width() + self.tables.iter().map(|t| t.dim).sum::<u64>()
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String, ConfigError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load_json(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), ConfigError> {
        Ok(std::fs::write(path, self.to_json_string()?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_rmc1_matches_reference_shape() {
        let c = preset(ModelClass::Rmc1, 1.0).unwrap();
        assert_eq!(c.tables.len(), 5);
        for t in &c.tables {
            assert_eq!(t.rows, 100_000);
            assert_eq!(t.dim, 32);
            assert_eq!(t.lookups_per_sample, 80);
        }
        assert_eq!(c.bottom_fc.layer_widths, vec![128, 64, 32]);
        assert_eq!(c.top_fc.layer_widths, vec![128, 32, 1]);
        assert_eq!(c.top_fc.input_width, 32 + 5 * 32);
    }

    #[test]
    fn preset_rmc1_embedding_storage() {
        let c = preset(ModelClass::Rmc1, 1.0).unwrap();
        // 5 tables * 1e5 rows * 32 dims * 4 bytes
        assert_eq!(storage_bytes(&c).embedding_bytes, 64_000_000);
    }

    #[test]
    fn preset_scale_multiplies_rows_only() {
        let base = preset(ModelClass::Rmc1, 1.0).unwrap();
        let small = preset(ModelClass::Rmc1, 1e-3).unwrap();
        assert_eq!(small.tables.len(), base.tables.len());
        for (s, b) in small.tables.iter().zip(&base.tables) {
            assert_eq!(s.rows, 100);
            assert_eq!(s.dim, b.dim);
            assert_eq!(s.lookups_per_sample, b.lookups_per_sample);
        }
        assert_eq!(small.bottom_fc, base.bottom_fc);
        assert_eq!(small.top_fc, base.top_fc);
    }

    #[test]
    fn preset_rejects_tiny_scale() {
        assert!(matches!(
            preset(ModelClass::Rmc1, 1e-9),
            Err(ConfigError::ScaleTooSmall { .. })
        ));
        assert!(matches!(
            preset(ModelClass::Rmc1, 0.0),
            Err(ConfigError::InvalidScale { .. })
        ));
        assert!(matches!(
            preset(ModelClass::Rmc1, -1.0),
            Err(ConfigError::InvalidScale { .. })
        ));
    }

    #[test]
    fn presets_validate_clean_over_scales() {
        for class in ModelClass::ALL {
            for scale in [1e-3, 1e-2, 0.1, 1.0, 2.0] {
                let c = preset(class, scale).unwrap();
                let v = validate(&c);
                assert!(v.is_empty(), "{class}@{scale}: {v:?}");
            }
        }
    }

    #[test]
    fn embedding_storage_ratios_across_classes() {
        let bytes = |class| {
            storage_bytes(&preset(class, 1.0).unwrap()).embedding_bytes as f64
        };
        let rmc1 = bytes(ModelClass::Rmc1);
        let rmc2 = bytes(ModelClass::Rmc2);
        let rmc3 = bytes(ModelClass::Rmc3);
        assert!(rmc2 > rmc3 && rmc3 > rmc1);
        // target ratios 1 : 100 : 10, allowed within 2x
        let r2 = rmc2 / rmc1;
        let r3 = rmc3 / rmc1;
        assert!((50.0..=200.0).contains(&r2), "rmc2/rmc1 = {r2}");
        assert!((5.0..=20.0).contains(&r3), "rmc3/rmc1 = {r3}");
    }

    #[test]
    fn embedding_storage_linear_in_scale() {
        for class in ModelClass::ALL {
            let one = storage_bytes(&preset(class, 0.05).unwrap()).embedding_bytes;
            let two = storage_bytes(&preset(class, 0.10).unwrap()).embedding_bytes;
            assert_eq!(two, 2 * one, "{class}");
        }
    }

    #[test]
    fn validate_reports_concat_width_violation() {
        let mut c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        c.top_fc.input_width = 10;
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "top_fc.input_width");
    }

    #[test]
    fn validate_reports_zero_width_layer() {
        let mut c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        c.bottom_fc.layer_widths[1] = 0;
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].field.contains("bottom_fc.layer_widths[1]"));
    }

    #[test]
    fn validate_checks_id_distribution_against_rows() {
        let mut c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        c.tables[2].id_distribution =
            IdDistribution::HotCold { hot_set_size: 10_000, hot_probability: 0.9 };
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "tables[2].id_distribution");
    }

    #[test]
    fn storage_single_element_table() {
        let c = RecModelConfig {
            name: "tiny".into(),
            dense_features: 1,
            bottom_fc: FcStackConfig::new(1, vec![1]),
            tables: vec![EmbeddingTableConfig {
                rows: 1,
                dim: 1,
                lookups_per_sample: 1,
                id_distribution: IdDistribution::Uniform,
            }],
            top_fc: FcStackConfig::new(2, vec![1]),
            final_activation: FinalActivation::Sigmoid,
        };
        assert_eq!(storage_bytes(&c).embedding_bytes, 4);
    }

    #[test]
    fn fc_bytes_counts_weights_and_bias() {
        // one layer 2 -> 3: (2*3 + 3) * 4 bytes
        let stack = FcStackConfig::new(2, vec![3]);
        assert_eq!(stack.param_count() * BYTES_PER_F32, 36);
    }

    #[test]
    fn fc_flops_single_layer() {
        let c = RecModelConfig {
            name: "fc-only".into(),
            dense_features: 128,
            bottom_fc: FcStackConfig::new(128, vec![64]),
            tables: vec![],
            top_fc: FcStackConfig::new(64, vec![1]),
            final_activation: FinalActivation::Sigmoid,
        };
        let f = flops_per_inference(&c, 16).unwrap();
        // bottom layer only: 2 * 16 * 128 * 64
        assert_eq!(f.fc_flops, 262_144 + 2 * 16 * 64);
        assert_eq!(f.sls_flops, 0);
    }

    #[test]
    fn sls_flops_single_table() {
        let mut c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        c.tables.truncate(1);
        c.top_fc.input_width = c.concat_width();
        let f = flops_per_inference(&c, 1).unwrap();
        // one table, C = 32, M = 80, B = 1
        assert_eq!(f.sls_flops, 2_560);
    }

    #[test]
    fn zero_batch_rejected() {
        let c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        assert!(matches!(flops_per_inference(&c, 0), Err(ConfigError::ZeroBatch)));
    }

    #[test]
    fn sls_intensity_is_quarter() {
        for (m, dim) in [(1, 1), (80, 32), (7, 13), (1000, 64)] {
            let v = operational_intensity(OpKind::Sls, OpShape::Sls { lookups: m, dim }).unwrap();
            assert_eq!(v, 0.25);
        }
    }

    #[test]
    fn fc_intensity_unit_case() {
        let v = operational_intensity(
            OpKind::Fc,
            OpShape::Fc { input: 1, output: 1, batch: 1 },
        )
        .unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn fc_intensity_increases_with_batch() {
        let mut prev = 0.0;
        for batch in [1, 2, 4, 16, 128] {
            let v = operational_intensity(
                OpKind::Fc,
                OpShape::Fc { input: 64, output: 32, batch },
            )
            .unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn intensity_rejects_unsupported_kind() {
        let err = operational_intensity(OpKind::Concat, OpShape::Sls { lookups: 1, dim: 1 });
        assert!(matches!(err, Err(ConfigError::UnsupportedOpKind(OpKind::Concat))));
        let err = operational_intensity(OpKind::Fc, OpShape::Sls { lookups: 1, dim: 1 });
        assert!(matches!(err, Err(ConfigError::ShapeKindMismatch { .. })));
    }

    #[test]
    fn json_round_trip_preserves_config() {
        let c = preset(ModelClass::Rmc2, 1e-2).unwrap();
        let s = c.to_json_string().unwrap();
        let back = RecModelConfig::from_json_str(&s).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn json_keys_mirror_field_names() {
        let c = preset(ModelClass::Rmc1, 1e-3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json_string().unwrap()).unwrap();
        for key in ["name", "dense_features", "bottom_fc", "tables", "top_fc", "final_activation"] {
            assert!(v.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(v["final_activation"], "sigmoid");
    }

    #[test]
    fn class_parses_from_name() {
        assert_eq!("rmc1".parse::<ModelClass>().unwrap(), ModelClass::Rmc1);
        assert_eq!("RMC3".parse::<ModelClass>().unwrap(), ModelClass::Rmc3);
        assert!("rmc9".parse::<ModelClass>().is_err());
    }
}
