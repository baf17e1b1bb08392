//! Dense 2-D tensors (row-major `f64`) with reverse-mode differentiation.
//!
//! [`Tensor`] is plain data. Differentiable computations are built on a
//! [`Tape`]: leaves are registered as trainable parameters or constants,
//! primitives append nodes, and [`Tape::backward`] replays adjoints. Scalars
//! and vectors are 1x1 and 1xN tensors.

mod optim;
mod tape;

pub use optim::AdamState;
pub use tape::{Gradients, Tape, Var};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Broadcast form of the right operand in `add`/`mul`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Broadcast {
    Same,
    Row,
    Col,
    Scalar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![1.0; rows * cols] }
    }

    pub fn scalar(x: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![x] }
    }

    /// A 1xN row vector.
    pub fn row_vec(data: Vec<f64>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// The single entry of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.shape(), (1, 1), "item() on non-scalar");
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// FNV-1a digest over the exact bit patterns; used for frozen-parameter
    /// checks and config fingerprints.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        eat(self.rows as u64);
        eat(self.cols as u64);
        for v in &self.data {
            eat(v.to_bits());
        }
        h
    }

    // ---- raw math (shared by the tape and by plain callers) ----

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut data[i * n..(i + 1) * n];
            for (kk, &a) in arow.iter().enumerate() {
                if a != 0.0 {
                    let brow = &other.data[kk * n..(kk + 1) * n];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(Tensor { rows: m, cols: n, data })
    }

    pub(crate) fn broadcast_kind(&self, rhs: &Tensor, op: &'static str) -> Result<Broadcast> {
        if rhs.shape() == self.shape() {
            Ok(Broadcast::Same)
        } else if rhs.shape() == (1, 1) {
            Ok(Broadcast::Scalar)
        } else if rhs.rows == 1 && rhs.cols == self.cols {
            Ok(Broadcast::Row)
        } else if rhs.cols == 1 && rhs.rows == self.rows {
            Ok(Broadcast::Col)
        } else {
            Err(Error::ShapeMismatch { op, lhs: self.shape(), rhs: rhs.shape() })
        }
    }

    pub(crate) fn zip_broadcast(
        &self,
        rhs: &Tensor,
        kind: Broadcast,
        f: impl Fn(f64, f64) -> f64,
    ) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        match kind {
            Broadcast::Same => {
                for (o, (&a, &b)) in out.data.iter_mut().zip(self.data.iter().zip(&rhs.data)) {
                    *o = f(a, b);
                }
            }
            Broadcast::Scalar => {
                let b = rhs.data[0];
                for (o, &a) in out.data.iter_mut().zip(&self.data) {
                    *o = f(a, b);
                }
            }
            Broadcast::Row => {
                for r in 0..self.rows {
                    let arow = self.row(r);
                    let orow = &mut out.data[r * self.cols..(r + 1) * self.cols];
                    for ((o, &a), &b) in orow.iter_mut().zip(arow).zip(&rhs.data) {
                        *o = f(a, b);
                    }
                }
            }
            Broadcast::Col => {
                for r in 0..self.rows {
                    let b = rhs.data[r];
                    let arow = self.row(r);
                    let orow = &mut out.data[r * self.cols..(r + 1) * self.cols];
                    for (o, &a) in orow.iter_mut().zip(arow) {
                        *o = f(a, b);
                    }
                }
            }
        }
        out
    }

    /// Sum `self` down to the given broadcast shape of `rhs` (adjoint of a
    /// broadcast operand).
    pub(crate) fn reduce_to(&self, kind: Broadcast, rhs_shape: (usize, usize)) -> Tensor {
        match kind {
            Broadcast::Same => self.clone(),
            Broadcast::Scalar => Tensor::scalar(self.data.iter().sum()),
            Broadcast::Row => {
                let mut out = Tensor::zeros(1, rhs_shape.1);
                for r in 0..self.rows {
                    for (o, &v) in out.data.iter_mut().zip(self.row(r)) {
                        *o += v;
                    }
                }
                out
            }
            Broadcast::Col => {
                let mut out = Tensor::zeros(rhs_shape.0, 1);
                for r in 0..self.rows {
                    out.data[r] = self.row(r).iter().sum();
                }
                out
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
