//! Dense row-major fp32 matrices and the FC / activation / concat kernels.

use super::KernelError;
use serde::{Deserialize, Serialize};

/// Row-major fp32 matrix. Zero rows or columns are allowed so that empty
/// batches flow through the kernels unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::ShapeMismatch {
                op: "from_vec",
                detail: format!("{rows}x{cols} needs {} values, got {}", rows * cols, data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; handy in tests.
    pub fn from_rows(rows: &[&[f32]]) -> Result<Self, KernelError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(KernelError::ShapeMismatch {
                op: "from_rows",
                detail: "ragged rows".into(),
            });
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Fully connected layer: `y = x * w + bias`, bias broadcast over rows.
///
/// `x` is B x I, `w` is I x O, `bias` has O entries. The loop nest keeps
/// the inner dimension contiguous so the compiler can vectorize it; no
/// external BLAS is involved by design, since runs compare configurations
/// on one host rather than competing with vendor kernels.
pub fn fc_forward(
    x: &DenseMatrix,
    w: &DenseMatrix,
    bias: &[f32],
) -> Result<DenseMatrix, KernelError> {
    if x.cols != w.rows || bias.len() != w.cols {
        return Err(KernelError::ShapeMismatch {
            op: "fc_forward",
            detail: format!(
                "x is {}x{}, w is {}x{}, bias has {}",
                x.rows,
                x.cols,
                w.rows,
                w.cols,
                bias.len()
            ),
        });
    }
    let mut y = DenseMatrix::zeros(x.rows, w.cols);
    fc_forward_into(x, w, bias, &mut y);
    Ok(y)
}

// Register-tile shape: MR batch rows by NR output columns accumulate in
// registers across the whole K loop, so weights load once per MR samples
// and partial sums never round-trip through memory. Batched inference gets
// its amortization from exactly this reuse; at B = 1 the kernel degrades
// to the plain weight-streaming row loop.
const MR: usize = 4;
const LANES: usize = if cfg!(target_feature = "avx512f") { 16 } else { 8 };
const NR: usize = 2 * LANES;

#[inline(always)]
fn fmadd(a: f32, b: f32, c: f32) -> f32 {
    // mul_add lowers to a libm call without hardware FMA
    if cfg!(target_feature = "fma") {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

/// Shape-checked by the caller; `y` must be B x O.
pub(crate) fn fc_forward_into(x: &DenseMatrix, w: &DenseMatrix, bias: &[f32], y: &mut DenseMatrix) {
    debug_assert_eq!(x.cols, w.rows);
    debug_assert_eq!(y.rows, x.rows);
    debug_assert_eq!(y.cols, w.cols);
    let out_w = w.cols;
    let b_main = x.rows - x.rows % MR;
    let o_main = out_w - out_w % NR;

    // Column tiles outermost: each K x NR weight tile is packed
    // contiguously once, then every row block streams it from cache.
    if b_main > 0 {
        let mut packed = vec![0.0f32; w.rows * NR];
        let mut j = 0;
        while j < o_main {
            for (dst, wk) in packed.chunks_exact_mut(NR).zip(w.data.chunks_exact(out_w)) {
                dst.copy_from_slice(&wk[j..j + NR]);
            }
            let mut i = 0;
            while i < b_main {
                fc_tile(x.row(i), x.row(i + 1), x.row(i + 2), x.row(i + 3), &packed, bias, y, i, j);
                i += MR;
            }
            j += NR;
        }
    }
    // column tail over the blocked rows, one scalar accumulator per row
    for c in o_main..out_w {
        let mut i = 0;
        while i < b_main {
            let (x0, x1, x2, x3) = (x.row(i), x.row(i + 1), x.row(i + 2), x.row(i + 3));
            let mut s0 = bias[c];
            let mut s1 = bias[c];
            let mut s2 = bias[c];
            let mut s3 = bias[c];
            let col = w.data[c..].iter().step_by(out_w);
            for (((&wv, &a0), (&a1, &a2)), &a3) in col.zip(x0).zip(x1.iter().zip(x2)).zip(x3) {
                s0 = fmadd(a0, wv, s0);
                s1 = fmadd(a1, wv, s1);
                s2 = fmadd(a2, wv, s2);
                s3 = fmadd(a3, wv, s3);
            }
            y.row_mut(i)[c] = s0;
            y.row_mut(i + 1)[c] = s1;
            y.row_mut(i + 2)[c] = s2;
            y.row_mut(i + 3)[c] = s3;
            i += MR;
        }
    }
    // row tail (and the whole B < MR case): stream weight rows once per
    // sample
    for r in b_main..x.rows {
        let xi = x.row(r);
        let yi = y.row_mut(r);
        yi.copy_from_slice(bias);
        for (&a, wk) in xi.iter().zip(w.data.chunks_exact(out_w)) {
            for (yv, &wv) in yi.iter_mut().zip(wk) {
                *yv = fmadd(a, wv, *yv);
            }
        }
    }
}

/// A register's worth of f32 lanes manipulated elementwise over a fixed
/// array; the pattern maps straight onto one AVX/AVX-512 register without
/// unsafe code.
#[derive(Debug, Copy, Clone)]
struct V8([f32; LANES]);

impl V8 {
    #[inline(always)]
    fn splat(v: f32) -> Self {
        Self([v; LANES])
    }

    #[inline(always)]
    fn from_slice(s: &[f32]) -> Self {
        Self(s[..LANES].try_into().expect("lane slice"))
    }

    #[inline(always)]
    fn write_to(self, out: &mut [f32]) {
        out[..LANES].copy_from_slice(&self.0);
    }

    #[inline(always)]
    fn fma(mut self, a: Self, b: Self) -> Self {
        for c in 0..LANES {
            self.0[c] = fmadd(a.0[c], b.0[c], self.0[c]);
        }
        self
    }
}

/// Computes one MR x NR output tile from a packed K x NR weight tile,
/// accumulating in registers (two V8 lanes per row).
#[allow(clippy::too_many_arguments)]
fn fc_tile(
    x0: &[f32],
    x1: &[f32],
    x2: &[f32],
    x3: &[f32],
    packed: &[f32],
    bias: &[f32],
    y: &mut DenseMatrix,
    i: usize,
    j: usize,
) {
    let b0 = V8::from_slice(&bias[j..]);
    let b1 = V8::from_slice(&bias[j + LANES..]);
    let (mut acc00, mut acc01) = (b0, b1);
    let (mut acc10, mut acc11) = (b0, b1);
    let (mut acc20, mut acc21) = (b0, b1);
    let (mut acc30, mut acc31) = (b0, b1);
    let rows = packed.chunks_exact(NR);
    for (((wk, &a0), (&a1, &a2)), &a3) in rows.zip(x0).zip(x1.iter().zip(x2)).zip(x3) {
        let w0 = V8::from_slice(wk);
        let w1 = V8::from_slice(&wk[LANES..]);
        let s0 = V8::splat(a0);
        let s1 = V8::splat(a1);
        let s2 = V8::splat(a2);
        let s3 = V8::splat(a3);
        acc00 = acc00.fma(s0, w0);
        acc01 = acc01.fma(s0, w1);
        acc10 = acc10.fma(s1, w0);
        acc11 = acc11.fma(s1, w1);
        acc20 = acc20.fma(s2, w0);
        acc21 = acc21.fma(s2, w1);
        acc30 = acc30.fma(s3, w0);
        acc31 = acc31.fma(s3, w1);
    }
    acc00.write_to(&mut y.row_mut(i)[j..]);
    acc01.write_to(&mut y.row_mut(i)[j + LANES..]);
    acc10.write_to(&mut y.row_mut(i + 1)[j..]);
    acc11.write_to(&mut y.row_mut(i + 1)[j + LANES..]);
    acc20.write_to(&mut y.row_mut(i + 2)[j..]);
    acc21.write_to(&mut y.row_mut(i + 2)[j + LANES..]);
    acc30.write_to(&mut y.row_mut(i + 3)[j..]);
    acc31.write_to(&mut y.row_mut(i + 3)[j + LANES..]);
}

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(x: &mut DenseMatrix) {
    for v in &mut x.data {
        *v = v.max(0.0);
    }
}

pub fn sigmoid(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    sigmoid_in_place(&mut out);
    out
}

pub fn sigmoid_in_place(x: &mut DenseMatrix) {
    // split by sign so exp never overflows
    for v in &mut x.data {
        *v = if *v >= 0.0 {
            1.0 / (1.0 + (-*v).exp())
        } else {
            let e = v.exp();
            e / (1.0 + e)
        };
    }
}

/// Column-wise concatenation of matrices with equal row counts.
pub fn concat_rows(parts: &[&DenseMatrix]) -> Result<DenseMatrix, KernelError> {
    let rows = parts.first().map_or(0, |p| p.rows);
    for (i, p) in parts.iter().enumerate() {
        if p.rows != rows {
            return Err(KernelError::ShapeMismatch {
                op: "concat_rows",
                detail: format!("part {i} has {} rows, expected {rows}", p.rows),
            });
        }
    }
    let cols: usize = parts.iter().map(|p| p.cols).sum();
    let mut out = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        let dst = out.row_mut(r);
        let mut at = 0;
        for p in parts {
            dst[at..at + p.cols].copy_from_slice(p.row(r));
            at += p.cols;
        }
    }
    Ok(out)
}
