//! Sparse lengths-sum: gather rows of an embedding table by sparse ID and
//! sum them per slice into pooled dense vectors.

use super::matrix::DenseMatrix;
use super::KernelError;

/// R x C fp32 embedding table, row-major.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn from_vec(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self, KernelError> {
        if rows == 0 || dim == 0 || data.len() != rows * dim {
            return Err(KernelError::ShapeMismatch {
                op: "embedding_table",
                detail: format!("{rows}x{dim} table with {} values", data.len()),
            });
        }
        Ok(Self { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// The (Lengths, IDs) input of one pooled lookup batch.
///
/// `lengths` has one entry per pooled output row; `ids` holds the
/// concatenation of all slices, so `sum(lengths) == ids.len()`. IDs may
/// repeat and are typically non-contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseLookupBatch {
    lengths: Vec<u32>,
    ids: Vec<u64>,
}

impl SparseLookupBatch {
    pub fn new(lengths: Vec<u32>, ids: Vec<u64>) -> Result<Self, KernelError> {
        let expected: u64 = lengths.iter().map(|&l| l as u64).sum();
        if expected != ids.len() as u64 {
            return Err(KernelError::LengthsMismatch { expected, actual: ids.len() });
        }
        Ok(Self { lengths, ids })
    }

    /// Number of pooled output rows (K).
    pub fn pooled_rows(&self) -> usize {
        self.lengths.len()
    }

    /// Total number of lookups (M).
    pub fn total_lookups(&self) -> usize {
        self.ids.len()
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }
}

// Rows are fetched by data-dependent index, so the hardware prefetcher
// cannot help. A rolling software prefetch this many lookups ahead keeps
// roughly a fill-buffer's worth of misses in flight, the same structure
// production gather kernels use.
const PREFETCH_DISTANCE: usize = 16;

#[inline]
fn prefetch_row(table: &EmbeddingTable, id: usize) {
    #[cfg(target_arch = "x86_64")]
    unsafe {
        use core::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        let row = table.data.as_ptr().add(id * table.dim);
        _mm_prefetch(row as *const i8, _MM_HINT_T0);
        // rows wider than a line: touch the tail line too
        _mm_prefetch(row.add(table.dim - 1) as *const i8, _MM_HINT_T0);
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = (table, id);
}

/// Pools table rows per slice: `out[k] = sum(table[id] for id in slice k)`.
///
/// A zero-length slice yields a zero row. Out-of-range IDs abort with the
/// offending position and id.
pub fn sls(table: &EmbeddingTable, batch: &SparseLookupBatch) -> Result<DenseMatrix, KernelError> {
    let dim = table.dim;
    let rows = table.rows;
    let ids = &batch.ids;
    let mut out = DenseMatrix::zeros(batch.pooled_rows(), dim);
    let mut cursor = 0usize;
    for (k, &len) in batch.lengths.iter().enumerate() {
        let slice = &ids[cursor..cursor + len as usize];
        let acc = out.row_mut(k);
        for (offset, &id) in slice.iter().enumerate() {
            if id >= rows as u64 {
                return Err(KernelError::IdOutOfRange {
                    position: cursor + offset,
                    id,
                    rows,
                });
            }
            // look ahead across slice boundaries; ids all target this table
            if let Some(&ahead) = ids.get(cursor + offset + PREFETCH_DISTANCE) {
                if (ahead as usize) < rows {
                    prefetch_row(table, ahead as usize);
                }
            }
            let emb = table.row(id as usize);
            for (a, &e) in acc.iter_mut().zip(emb) {
                *a += e;
            }
        }
        cursor += len as usize;
    }
    Ok(out)
}
