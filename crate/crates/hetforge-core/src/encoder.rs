//! Prompt-aware message-passing encoder.
//!
//! The backbone projects node features to a hidden width, turns each edge
//! feature into a scalar attention weight through a two-layer perceptron,
//! and stacks residual layers: every node averages attention-weighted
//! messages from its in-neighbors, adds its own state, is modulated by an
//! optional per-layer structure prompt, and passes through ReLU.
//!
//! Prompts are per-dimension row vectors broadcast over rows (so their
//! shapes are independent of the graph size): a feature prompt on node
//! inputs, an edge prompt on edge inputs, and one structure prompt per
//! layer on hidden states. All-ones prompts are exact no-ops.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::HomoGraph;
use crate::rng::{derive, Rng};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    /// Node feature width.
    pub d: usize,
    /// Edge feature width (the transform always produces `f = d`).
    pub f: usize,
    /// Hidden width.
    pub h: usize,
    /// Hidden width of the edge-attention perceptron.
    pub h_e: usize,
    pub n_layers: usize,
}

impl EncoderConfig {
    pub fn new(d: usize, f: usize) -> Self {
        EncoderConfig { d, f, h: 64, h_e: 32, n_layers: 2 }
    }

    pub fn with_hidden(mut self, h: usize, h_e: usize) -> Self {
        self.h = h;
        self.h_e = h_e;
        self
    }

    pub fn with_layers(mut self, n: usize) -> Self {
        self.n_layers = n;
        self
    }
}

/// Which prompt kinds are active; used by the prompt-removal ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptMask {
    pub fea: bool,
    pub edge: bool,
    pub structure: bool,
}

impl Default for PromptMask {
    fn default() -> Self {
        PromptMask { fea: true, edge: true, structure: true }
    }
}

impl PromptMask {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn without(kind: PromptKind) -> Self {
        let mut m = Self::all();
        match kind {
            PromptKind::Feature => m.fea = false,
            PromptKind::Edge => m.edge = false,
            PromptKind::Structure => m.structure = false,
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptKind {
    Feature,
    Edge,
    Structure,
}

/// Learnable backbone parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    /// d x h input projection.
    pub w_in: Tensor,
    /// Per-layer h x h weights.
    pub layers: Vec<Tensor>,
    /// Edge perceptron f -> h_e -> 1 with biases.
    pub edge_w1: Tensor,
    pub edge_b1: Tensor,
    pub edge_w2: Tensor,
    pub edge_b2: Tensor,
    /// h x h bilinear discriminator used by pre-training.
    pub w_disc: Tensor,
}

fn uniform_fan_in(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
    let bound = 1.0 / libm::sqrt(rows as f64);
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    t
}

impl EncoderParams {
    /// Fan-in-scaled uniform init; the discriminator starts at zero so the
    /// initial contrastive loss has a closed form.
    pub fn init(config: EncoderConfig, seed: u64) -> Self {
        let mut rng = Rng::new(derive(seed, "encoder-init"));
        let w_in = uniform_fan_in(&mut rng, config.d, config.h);
        let layers =
            (0..config.n_layers).map(|_| uniform_fan_in(&mut rng, config.h, config.h)).collect();
        let edge_w1 = uniform_fan_in(&mut rng, config.f, config.h_e);
        let edge_w2 = uniform_fan_in(&mut rng, config.h_e, 1);
        EncoderParams {
            config,
            w_in,
            layers,
            edge_w1,
            edge_b1: Tensor::zeros(1, config.h_e),
            edge_w2,
            edge_b2: Tensor::zeros(1, 1),
            w_disc: Tensor::zeros(config.h, config.h),
        }
    }

    /// Stable parameter order shared by gradient collection and the optimizer.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = alloc::vec![&self.w_in];
        v.extend(self.layers.iter());
        v.extend([&self.edge_w1, &self.edge_b1, &self.edge_w2, &self.edge_b2, &self.w_disc]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = alloc::vec![&mut self.w_in];
        v.extend(self.layers.iter_mut());
        v.push(&mut self.edge_w1);
        v.push(&mut self.edge_b1);
        v.push(&mut self.edge_w2);
        v.push(&mut self.edge_b2);
        v.push(&mut self.w_disc);
        v
    }

    /// Byte-level digest over all parameters; fine-tuning must not change it.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0x100_0193;
        for t in self.tensors() {
            h = h.rotate_left(7) ^ t.digest();
        }
        h
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> EncoderVars {
        let mut reg = |t: &Tensor| if trainable { tape.leaf(t.clone()) } else { tape.constant(t.clone()) };
        EncoderVars {
            w_in: reg(&self.w_in),
            layers: self.layers.iter().map(&mut reg).collect(),
            edge_w1: reg(&self.edge_w1),
            edge_b1: reg(&self.edge_b1),
            edge_w2: reg(&self.edge_w2),
            edge_b2: reg(&self.edge_b2),
            w_disc: reg(&self.w_disc),
        }
    }
}

/// Tape handles for [`EncoderParams`], in the same order as
/// [`EncoderParams::tensors`].
pub struct EncoderVars {
    pub w_in: Var,
    pub layers: Vec<Var>,
    pub edge_w1: Var,
    pub edge_b1: Var,
    pub edge_w2: Var,
    pub edge_b2: Var,
    pub w_disc: Var,
}

impl EncoderVars {
    pub fn vars(&self) -> Vec<Var> {
        let mut v = alloc::vec![self.w_in];
        v.extend(self.layers.iter().copied());
        v.extend([self.edge_w1, self.edge_b1, self.edge_w2, self.edge_b2, self.w_disc]);
        v
    }
}

/// One domain's prompt triple: feature, edge, and per-layer structure
/// prompts. All-ones is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct TriPrompt {
    pub fea: Tensor,
    pub edge: Tensor,
    pub structure: Vec<Tensor>,
}

impl TriPrompt {
    pub fn identity(config: &EncoderConfig) -> Self {
        TriPrompt {
            fea: Tensor::ones(1, config.d),
            edge: Tensor::ones(1, config.f),
            structure: (0..config.n_layers).map(|_| Tensor::ones(1, config.h)).collect(),
        }
    }

    /// Trainable tensors honoring the mask (disabled kinds are excluded and
    /// therefore stay at their current values).
    pub fn tensors(&self, mask: PromptMask) -> Vec<&Tensor> {
        let mut v = Vec::new();
        if mask.fea {
            v.push(&self.fea);
        }
        if mask.edge {
            v.push(&self.edge);
        }
        if mask.structure {
            v.extend(self.structure.iter());
        }
        v
    }

    pub fn tensors_mut(&mut self, mask: PromptMask) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = Vec::new();
        if mask.fea {
            v.push(&mut self.fea);
        }
        if mask.edge {
            v.push(&mut self.edge);
        }
        if mask.structure {
            v.extend(self.structure.iter_mut());
        }
        v
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool, mask: PromptMask) -> TriPromptVars {
        let mut reg = |t: &Tensor, on: bool| {
            if trainable && on {
                tape.leaf(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        TriPromptVars {
            fea: reg(&self.fea, mask.fea),
            edge: reg(&self.edge, mask.edge),
            structure: self.structure.iter().map(|t| reg(t, mask.structure)).collect(),
        }
    }
}

pub struct TriPromptVars {
    pub fea: Var,
    pub edge: Var,
    pub structure: Vec<Var>,
}

impl TriPromptVars {
    pub fn vars(&self, mask: PromptMask) -> Vec<Var> {
        let mut v = Vec::new();
        if mask.fea {
            v.push(self.fea);
        }
        if mask.edge {
            v.push(self.edge);
        }
        if mask.structure {
            v.extend(self.structure.iter().copied());
        }
        v
    }
}

/// Message-passing view of a graph: edge endpoint arrays, inverse in-degree,
/// and the input matrices. Pre-training perturbs copies of this.
#[derive(Clone, Debug)]
pub struct GraphView {
    pub n_nodes: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// Column vector of 1/in-degree per node (0 for nodes all of whose
    /// in-edges were dropped by augmentation; they aggregate nothing).
    pub inv_deg: Tensor,
    pub x_v: Tensor,
    pub x_e: Tensor,
}

impl GraphView {
    /// Build from a transformed graph. Errors if some node has no in-edge,
    /// which the transformation's self-loop rule makes impossible.
    pub fn new(g: &HomoGraph) -> Result<Self> {
        let n = g.n_nodes();
        let src: Vec<usize> = g.edges.iter().map(|&(u, _)| u).collect();
        let dst: Vec<usize> = g.edges.iter().map(|&(_, v)| v).collect();
        let mut deg = alloc::vec![0usize; n];
        for &v in &dst {
            deg[v] += 1;
        }
        if let Some(node) = deg.iter().position(|&c| c == 0) {
            return Err(Error::RowIndex { op: "encode: node without in-edges", index: node, rows: n });
        }
        let inv_deg =
            Tensor::new(n, 1, deg.iter().map(|&c| 1.0 / c as f64).collect());
        Ok(GraphView { n_nodes: n, src, dst, inv_deg, x_v: g.x_v.clone(), x_e: g.x_e.clone() })
    }

    /// Same topology with permuted node feature rows.
    pub fn with_features(&self, x_v: Tensor) -> GraphView {
        let mut v = self.clone();
        v.x_v = x_v;
        v
    }

    /// Keep only the edges whose mask entry is true; in-degrees recomputed,
    /// zero-in-degree nodes allowed (they aggregate nothing).
    pub fn with_edges_masked(&self, keep: &[bool]) -> GraphView {
        debug_assert_eq!(keep.len(), self.src.len());
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut rows = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                src.push(self.src[i]);
                dst.push(self.dst[i]);
                rows.push(i);
            }
        }
        let mut deg = alloc::vec![0usize; self.n_nodes];
        for &v in &dst {
            deg[v] += 1;
        }
        let inv_deg = Tensor::new(
            self.n_nodes,
            1,
            deg.iter().map(|&c| if c == 0 { 0.0 } else { 1.0 / c as f64 }).collect(),
        );
        let mut x_e = Tensor::zeros(rows.len(), self.x_e.cols());
        for (r, &orig) in rows.iter().enumerate() {
            x_e.row_mut(r).copy_from_slice(self.x_e.row(orig));
        }
        GraphView { n_nodes: self.n_nodes, src, dst, inv_deg, x_v: self.x_v.clone(), x_e }
    }
}

/// Scalar attention per edge: sigmoid of a two-layer perceptron over the
/// (possibly prompt-modulated) edge features. Always strictly inside (0, 1).
pub fn edge_attention(x_e_mod: &Tensor, params: &EncoderParams) -> Result<Tensor> {
    let mut tape = Tape::new();
    let e = tape.constant(x_e_mod.clone());
    let vars = params.register(&mut tape, false);
    let alpha = attention_vars(&mut tape, e, &vars)?;
    Ok(tape.value(alpha).clone())
}

pub(crate) fn attention_vars(tape: &mut Tape, x_e: Var, params: &EncoderVars) -> Result<Var> {
    let z1 = tape.matmul(x_e, params.edge_w1)?;
    let z1 = tape.add(z1, params.edge_b1)?;
    let a1 = tape.relu(z1);
    let z2 = tape.matmul(a1, params.edge_w2)?;
    let z2 = tape.add(z2, params.edge_b2)?;
    Ok(tape.sigmoid(z2))
}

/// The backbone over explicit (already modulated) inputs on a tape.
///
/// Per layer: messages `M = H W`, attention-weighted mean over in-neighbors,
/// residual add, optional structure-prompt modulation, ReLU.
pub(crate) fn encode_inputs(
    tape: &mut Tape,
    view: &GraphView,
    x_v: Var,
    x_e: Var,
    params: &EncoderVars,
    structure: Option<&[Var]>,
) -> Result<Var> {
    if tape.shape(x_v).1 != tape.shape(params.w_in).0 {
        return Err(Error::DimMismatch {
            expected: tape.shape(params.w_in).0,
            got: tape.shape(x_v).1,
            what: "encoder input",
        });
    }
    let alpha = attention_vars(tape, x_e, params)?;
    let inv_deg = tape.constant(view.inv_deg.clone());
    let mut h = tape.matmul(x_v, params.w_in)?;
    for (l, &w) in params.layers.iter().enumerate() {
        let m = tape.matmul(h, w)?;
        let msrc = tape.row_gather(m, &view.src)?;
        let weighted = tape.mul(msrc, alpha)?;
        let summed = tape.row_scatter_add(weighted, &view.dst, view.n_nodes)?;
        let z = tape.mul(summed, inv_deg)?;
        let mut pre = tape.add(z, h)?;
        if let Some(prompts) = structure {
            pre = tape.mul(pre, prompts[l])?;
        }
        h = tape.relu(pre);
    }
    Ok(h)
}

/// Encode a view with optional prompts (the mask selects which prompt kinds
/// apply). Feature and edge prompts modulate the inputs; structure prompts
/// modulate each layer's pre-activation.
pub fn encode_view(
    tape: &mut Tape,
    view: &GraphView,
    params: &EncoderVars,
    prompts: Option<(&TriPromptVars, PromptMask)>,
) -> Result<Var> {
    let mut x_v = tape.constant(view.x_v.clone());
    let mut x_e = tape.constant(view.x_e.clone());
    let mut structure = None;
    if let Some((p, mask)) = prompts {
        if mask.fea {
            x_v = tape.mul(x_v, p.fea)?;
        }
        if mask.edge {
            x_e = tape.mul(x_e, p.edge)?;
        }
        if mask.structure {
            structure = Some(p.structure.as_slice());
        }
    }
    encode_inputs(tape, view, x_v, x_e, params, structure)
}

/// Plain-tensor encode: embeds all nodes of `g`, applying whichever prompts
/// the mask enables. With `prompts = None` (or all-ones prompts) this is the
/// raw backbone.
pub fn encode(
    g: &HomoGraph,
    params: &EncoderParams,
    prompts: Option<&TriPrompt>,
    mask: PromptMask,
) -> Result<Tensor> {
    let view = GraphView::new(g)?;
    let mut tape = Tape::new();
    let enc = params.register(&mut tape, false);
    let pv = prompts.map(|p| p.register(&mut tape, false, mask));
    let h = encode_view(&mut tape, &view, &enc, pv.as_ref().map(|p| (p, mask)))?;
    Ok(tape.value(h).clone())
}

/// Arithmetic mean of the selected rows.
pub fn readout_mean(h: &Tensor, rows: &[usize]) -> Result<Tensor> {
    if rows.is_empty() {
        return Err(Error::EmptyInput { op: "readout_mean" });
    }
    let mut out = Tensor::zeros(1, h.cols());
    for &r in rows {
        if r >= h.rows() {
            return Err(Error::RowIndex { op: "readout_mean", index: r, rows: h.rows() });
        }
        for (o, &v) in out.data_mut().iter_mut().zip(h.row(r)) {
            *o += v;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for o in out.data_mut() {
        *o *= inv;
    }
    Ok(out)
}
