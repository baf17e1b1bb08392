//! Reverse-mode differentiation over an append-only tape.
//!
//! Each primitive records its parents and enough saved state to replay the
//! adjoint. `backward` walks the tape once in reverse; parameters that do not
//! reach the loss get zero gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{sigmoid, Broadcast, Tensor};

/// Handle to a value on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Matmul(Var, Var),
    Add(Var, Var, Broadcast),
    Mul(Var, Var, Broadcast),
    Relu(Var),
    Sigmoid(Var),
    Log(Var),
    ClampMin(Var, f64),
    Scale(Var, f64),
    AddConst(Var),
    MeanRows(Var),
    SumAll(Var),
    RowGather(Var, Vec<usize>),
    RowScatterAdd(Var, Vec<usize>),
    SoftmaxRows(Var),
    L2NormalizeRows(Var),
    PermuteRows(Var, Vec<usize>),
    Transpose(Var),
    ConcatRows(Vec<Var>),
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Recorded computation; build forward values, then call [`Tape::backward`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Register a trainable leaf.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, true)
    }

    /// Register a non-trainable input.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, false)
    }

    // ---- primitives ----

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Matmul(a, b), value, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let kind = self.value(a).broadcast_kind(self.value(b), "add")?;
        let value = self.value(a).zip_broadcast(self.value(b), kind, |x, y| x + y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b, kind), value, needs))
    }

    /// Element-wise product. The right operand may be a row vector, a column
    /// vector, or a scalar; it is broadcast over the left operand.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let kind = self.value(a).broadcast_kind(self.value(b), "mul")?;
        let value = self.value(a).zip_broadcast(self.value(b), kind, |x, y| x * y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Mul(a, b, kind), value, needs))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        let needs = self.needs(a);
        self.push(Op::Relu(a), value, needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let needs = self.needs(a);
        self.push(Op::Sigmoid(a), value, needs)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).data().iter().find(|x| **x <= 0.0) {
            return Err(Error::LogDomain { value: bad });
        }
        let value = self.value(a).map(libm::log);
        let needs = self.needs(a);
        Ok(self.push(Op::Log(a), value, needs))
    }

    pub fn clamp_min(&mut self, a: Var, floor: f64) -> Var {
        let value = self.value(a).map(|x| if x < floor { floor } else { x });
        let needs = self.needs(a);
        self.push(Op::ClampMin(a, floor), value, needs)
    }

    /// Multiply by a compile-time constant.
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| c * x);
        let needs = self.needs(a);
        self.push(Op::Scale(a, c), value, needs)
    }

    /// Add a constant to every entry.
    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x + c);
        let needs = self.needs(a);
        self.push(Op::AddConst(a), value, needs)
    }

    /// Column-wise mean: (r, c) -> (1, c).
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.rows() == 0 {
            return Err(Error::EmptyInput { op: "mean_rows" });
        }
        let mut out = Tensor::zeros(1, t.cols());
        for r in 0..t.rows() {
            for (o, &v) in out.data_mut().iter_mut().zip(t.row(r)) {
                *o += v;
            }
        }
        let inv = 1.0 / t.rows() as f64;
        for o in out.data_mut() {
            *o *= inv;
        }
        let needs = self.needs(a);
        Ok(self.push(Op::MeanRows(a), out, needs))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        let needs = self.needs(a);
        self.push(Op::SumAll(a), value, needs)
    }

    /// Gather rows by index: out[k] = a[idx[k]].
    pub fn row_gather(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let t = self.value(a);
        let mut out = Tensor::zeros(idx.len(), t.cols());
        for (k, &i) in idx.iter().enumerate() {
            if i >= t.rows() {
                return Err(Error::RowIndex { op: "row_gather", index: i, rows: t.rows() });
            }
            out.row_mut(k).copy_from_slice(t.row(i));
        }
        let needs = self.needs(a);
        Ok(self.push(Op::RowGather(a, idx.to_vec()), out, needs))
    }

    /// Scatter-add rows into an `out_rows`-row output: out[idx[k]] += a[k].
    pub fn row_scatter_add(&mut self, a: Var, idx: &[usize], out_rows: usize) -> Result<Var> {
        let t = self.value(a);
        if idx.len() != t.rows() {
            return Err(Error::ShapeMismatch {
                op: "row_scatter_add",
                lhs: t.shape(),
                rhs: (idx.len(), 1),
            });
        }
        let mut out = Tensor::zeros(out_rows, t.cols());
        for (k, &i) in idx.iter().enumerate() {
            if i >= out_rows {
                return Err(Error::RowIndex { op: "row_scatter_add", index: i, rows: out_rows });
            }
            for (o, &v) in out.row_mut(i).iter_mut().zip(t.row(k)) {
                *o += v;
            }
        }
        let needs = self.needs(a);
        Ok(self.push(Op::RowScatterAdd(a, idx.to_vec()), out, needs))
    }

    /// Row-wise softmax.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut out = Tensor::zeros(t.rows(), t.cols());
        for r in 0..t.rows() {
            let row = t.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let orow = out.row_mut(r);
            let mut sum = 0.0;
            for (o, &v) in orow.iter_mut().zip(row) {
                *o = libm::exp(v - max);
                sum += *o;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        let needs = self.needs(a);
        self.push(Op::SoftmaxRows(a), out, needs)
    }

    /// Normalize each row to unit L2 norm; all-zero rows stay zero.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut out = Tensor::zeros(t.rows(), t.cols());
        for r in 0..t.rows() {
            let row = t.row(r);
            let norm = libm::sqrt(row.iter().map(|x| x * x).sum());
            if norm > 0.0 {
                for (o, &v) in out.row_mut(r).iter_mut().zip(row) {
                    *o = v / norm;
                }
            }
        }
        let needs = self.needs(a);
        self.push(Op::L2NormalizeRows(a), out, needs)
    }

    /// Reorder rows: out[i] = a[perm[i]].
    pub fn permute_rows(&mut self, a: Var, perm: &[usize]) -> Result<Var> {
        let t = self.value(a);
        if perm.len() != t.rows() {
            return Err(Error::ShapeMismatch {
                op: "permute_rows",
                lhs: t.shape(),
                rhs: (perm.len(), 1),
            });
        }
        let mut out = Tensor::zeros(t.rows(), t.cols());
        for (i, &p) in perm.iter().enumerate() {
            if p >= t.rows() {
                return Err(Error::RowIndex { op: "permute_rows", index: p, rows: t.rows() });
            }
            out.row_mut(i).copy_from_slice(t.row(p));
        }
        let needs = self.needs(a);
        Ok(self.push(Op::PermuteRows(a, perm.to_vec()), out, needs))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let needs = self.needs(a);
        self.push(Op::Transpose(a), value, needs)
    }

    /// Stack several tensors with equal column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::EmptyInput { op: "concat_rows" });
        }
        let cols = self.shape(parts[0]).1;
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.1 != cols {
                return Err(Error::ShapeMismatch { op: "concat_rows", lhs: (rows, cols), rhs: s });
            }
            rows += s.0;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Op::ConcatRows(parts.to_vec()), Tensor::new(rows, cols, data), needs))
    }

    // ---- reverse pass ----

    /// Reverse-mode gradients of a scalar `loss` with respect to every
    /// trainable leaf. Leaves that do not reach the loss get `None` (treated
    /// as zero by [`Gradients::take`]).
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::NonScalarLoss { shape: self.shape(loss) });
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = adj[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Leaf => {
                    adj[i] = Some(g); // keep for collection
                    continue;
                }
                Op::Matmul(a, b) => {
                    if self.needs(*a) {
                        let bt = self.value(*b).transpose();
                        accumulate(&mut adj[a.0], g.matmul(&bt).expect("matmul adjoint"));
                    }
                    if self.needs(*b) {
                        let at = self.value(*a).transpose();
                        accumulate(&mut adj[b.0], at.matmul(&g).expect("matmul adjoint"));
                    }
                }
                Op::Add(a, b, kind) => {
                    if self.needs(*a) {
                        accumulate(&mut adj[a.0], g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut adj[b.0], g.reduce_to(*kind, self.shape(*b)));
                    }
                }
                Op::Mul(a, b, kind) => {
                    if self.needs(*a) {
                        let da = g.zip_broadcast(self.value(*b), *kind, |gv, bv| gv * bv);
                        accumulate(&mut adj[a.0], da);
                    }
                    if self.needs(*b) {
                        let prod = g.zip_broadcast(self.value(*a), Broadcast::Same, |gv, av| gv * av);
                        accumulate(&mut adj[b.0], prod.reduce_to(*kind, self.shape(*b)));
                    }
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut da = g;
                    for (d, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        if xv <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::Sigmoid(a) => {
                    let y = &self.nodes[i].value;
                    let mut da = g;
                    for (d, &yv) in da.data_mut().iter_mut().zip(y.data()) {
                        *d *= yv * (1.0 - yv);
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::Log(a) => {
                    let x = self.value(*a);
                    let mut da = g;
                    for (d, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        *d /= xv;
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::ClampMin(a, floor) => {
                    let x = self.value(*a);
                    let mut da = g;
                    for (d, &xv) in da.data_mut().iter_mut().zip(x.data()) {
                        if xv < *floor {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::Scale(a, c) => {
                    accumulate(&mut adj[a.0], g.map(|v| c * v));
                }
                Op::AddConst(a) => {
                    accumulate(&mut adj[a.0], g);
                }
                Op::MeanRows(a) => {
                    let (rows, cols) = self.shape(*a);
                    let inv = 1.0 / rows as f64;
                    let mut da = Tensor::zeros(rows, cols);
                    for r in 0..rows {
                        for (d, &gv) in da.row_mut(r).iter_mut().zip(g.data()) {
                            *d = gv * inv;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::SumAll(a) => {
                    let (rows, cols) = self.shape(*a);
                    let gv = g.item();
                    accumulate(&mut adj[a.0], Tensor::new(rows, cols, vec![gv; rows * cols]));
                }
                Op::RowGather(a, idx) => {
                    let (rows, cols) = self.shape(*a);
                    let mut da = Tensor::zeros(rows, cols);
                    for (k, &src) in idx.iter().enumerate() {
                        for (d, &gv) in da.row_mut(src).iter_mut().zip(g.row(k)) {
                            *d += gv;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::RowScatterAdd(a, idx) => {
                    let (rows, cols) = self.shape(*a);
                    let mut da = Tensor::zeros(rows, cols);
                    for (k, &dst) in idx.iter().enumerate() {
                        da.row_mut(k).copy_from_slice(g.row(dst));
                        let _ = cols;
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::SoftmaxRows(a) => {
                    let y = &self.nodes[i].value;
                    let mut da = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(&yv, &gv)| yv * gv).sum();
                        for ((d, &yv), &gv) in da.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d = yv * (gv - dot);
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::L2NormalizeRows(a) => {
                    let x = self.value(*a);
                    let y = &self.nodes[i].value;
                    let mut da = Tensor::zeros(x.rows(), x.cols());
                    for r in 0..x.rows() {
                        let norm = libm::sqrt(x.row(r).iter().map(|v| v * v).sum());
                        if norm == 0.0 {
                            continue; // zero rows are held at zero
                        }
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(&yv, &gv)| yv * gv).sum();
                        for ((d, &yv), &gv) in da.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d = (gv - yv * dot) / norm;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::PermuteRows(a, perm) => {
                    let (rows, cols) = self.shape(*a);
                    let mut da = Tensor::zeros(rows, cols);
                    for (i_out, &src) in perm.iter().enumerate() {
                        for (d, &gv) in da.row_mut(src).iter_mut().zip(g.row(i_out)) {
                            *d += gv;
                        }
                    }
                    accumulate(&mut adj[a.0], da);
                }
                Op::Transpose(a) => {
                    accumulate(&mut adj[a.0], g.transpose());
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        if self.needs(p) {
                            let mut dp = Tensor::zeros(rows, cols);
                            for r in 0..rows {
                                dp.row_mut(r).copy_from_slice(g.row(offset + r));
                            }
                            accumulate(&mut adj[p.0], dp);
                        }
                        offset += rows;
                    }
                }
            }
        }

        Ok(Gradients { grads: adj })
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(t) => t.add_assign(&delta),
        None => *slot = Some(delta),
    }
}

/// Gradient table produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// The gradient for `v`, or zeros if `v` never reached the loss.
    pub fn take(&mut self, tape: &Tape, v: Var) -> Tensor {
        let shape = tape.shape(v);
        self.grads
            .get_mut(v.0)
            .and_then(Option::take)
            .unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    }
}
