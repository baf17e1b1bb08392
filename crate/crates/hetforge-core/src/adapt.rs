//! Cross-domain fine-tuning on a frozen backbone.
//!
//! Source-domain prompts are mixed by softmax-weighted composition and
//! combined with freshly initialized open prompts. Edge features are
//! modulated first; a feature-driven branch encodes prompt-modulated node
//! features without structure prompts, a structure-driven branch runs the
//! backbone twice (composed and open structure prompts) on the original
//! features, and the two branches fuse through learned scalar coefficients.
//! Instances are classified by temperature-scaled cosine similarity to class
//! prototypes (support-set means); only the composer state is optimized.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::encoder::{
    encode_inputs, EncoderVars, GraphView, PromptKind, PromptMask,
};
use crate::error::{Error, Result};
use crate::graph::HomoGraph;
use crate::metrics::micro_macro_f1;
use crate::pretrain::{PretrainedBundle, LOG_FLOOR};
use crate::rng::{derive, Rng};
use crate::tensor::{AdamState, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    /// Instances are single nodes.
    Node,
    /// Instances are hop-limited neighborhoods, mean-pooled.
    Subgraph,
}

/// A |C|-way K-shot episode over one target graph. All ids are local node
/// indices of the homogeneous graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FewShotTask {
    pub n_classes: usize,
    pub k_shot: usize,
    /// Exactly `n_classes * k_shot` labeled instances.
    pub support: Vec<(usize, usize)>,
    pub val: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
    pub kind: TaskKind,
    pub hop_radius: usize,
}

impl FewShotTask {
    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.n_classes * self.k_shot {
            return Err(Error::BadConfig { what: "support size must be n_classes * k_shot" });
        }
        for class in 0..self.n_classes {
            let k = self.support.iter().filter(|(_, c)| *c == class).count();
            if k < self.k_shot {
                return Err(Error::MissingClass { class });
            }
        }
        // sizes match and no class is short, so every class has exactly k_shot
        let mut seen = BTreeSet::new();
        for &(id, _) in self.support.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(id) {
                return Err(Error::BadConfig { what: "support/val/test must be disjoint" });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Early-stopping patience on validation micro-F1, in epochs.
    pub patience: usize,
    /// Softmax temperature for prototype scoring.
    pub tau: f64,
    pub seed: u64,
    pub mask: PromptMask,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            epochs: 300,
            lr: 5e-3,
            patience: 20,
            tau: 0.5,
            seed: 0,
            mask: PromptMask::all(),
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::BadConfig { what: "tau must be positive" });
        }
        if self.epochs == 0 {
            return Err(Error::BadConfig { what: "epochs must be >= 1" });
        }
        Ok(())
    }
}

/// Everything fine-tuning optimizes: composition logits per prompt kind,
/// open prompts, and the fusion scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposerState {
    pub lambda_fea: Tensor,
    pub lambda_edge: Tensor,
    pub lambda_str: Tensor,
    pub open_fea: Tensor,
    pub open_edge: Tensor,
    pub open_str: Vec<Tensor>,
    /// Open-edge fusion intensity.
    pub beta: Tensor,
    pub gamma_fea: Tensor,
    pub gamma_str: Tensor,
    /// Structure-branch weight in the final fusion.
    pub alpha_branch: Tensor,
    pub tau: f64,
}

impl ComposerState {
    /// Identity-leaning start: uniform composition, near-zero open prompts,
    /// zero fusion coefficients, half-weight structure branch.
    pub fn init(bundle: &PretrainedBundle, tau: f64, seed: u64) -> Result<Self> {
        if bundle.prompts.is_empty() {
            return Err(Error::NoSourcePrompts);
        }
        if tau <= 0.0 {
            return Err(Error::BadConfig { what: "tau must be positive" });
        }
        let k = bundle.prompts.len();
        let cfg = &bundle.params.config;
        let mut rng = Rng::new(derive(seed, "open-prompts"));
        let mut open = |cols: usize| {
            let mut t = Tensor::zeros(1, cols);
            for v in t.data_mut() {
                *v = rng.uniform(-0.01, 0.01);
            }
            t
        };
        Ok(ComposerState {
            lambda_fea: Tensor::zeros(1, k),
            lambda_edge: Tensor::zeros(1, k),
            lambda_str: Tensor::zeros(1, k),
            open_fea: open(cfg.d),
            open_edge: open(cfg.f),
            open_str: (0..cfg.n_layers).map(|_| open(cfg.h)).collect(),
            beta: Tensor::scalar(0.0),
            gamma_fea: Tensor::scalar(0.0),
            gamma_str: Tensor::scalar(0.0),
            alpha_branch: Tensor::scalar(0.5),
            tau,
        })
    }

    pub fn tensors(&self, mask: PromptMask) -> Vec<&Tensor> {
        let mut v = Vec::new();
        if mask.fea {
            v.extend([&self.lambda_fea, &self.open_fea, &self.gamma_fea]);
        }
        if mask.edge {
            v.extend([&self.lambda_edge, &self.open_edge, &self.beta]);
        }
        if mask.structure {
            v.push(&self.lambda_str);
            v.extend(self.open_str.iter());
            v.push(&self.gamma_str);
        }
        v.push(&self.alpha_branch);
        v
    }

    pub fn tensors_mut(&mut self, mask: PromptMask) -> Vec<&mut Tensor> {
        let mut v: Vec<&mut Tensor> = Vec::new();
        if mask.fea {
            v.push(&mut self.lambda_fea);
            v.push(&mut self.open_fea);
            v.push(&mut self.gamma_fea);
        }
        if mask.edge {
            v.push(&mut self.lambda_edge);
            v.push(&mut self.open_edge);
            v.push(&mut self.beta);
        }
        if mask.structure {
            v.push(&mut self.lambda_str);
            v.extend(self.open_str.iter_mut());
            v.push(&mut self.gamma_str);
        }
        v.push(&mut self.alpha_branch);
        v
    }

    fn register(&self, tape: &mut Tape, trainable: bool, mask: PromptMask) -> ComposerVars {
        let mut reg = |t: &Tensor, on: bool| {
            if trainable && on {
                tape.leaf(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        ComposerVars {
            lambda_fea: reg(&self.lambda_fea, mask.fea),
            lambda_edge: reg(&self.lambda_edge, mask.edge),
            lambda_str: reg(&self.lambda_str, mask.structure),
            open_fea: reg(&self.open_fea, mask.fea),
            open_edge: reg(&self.open_edge, mask.edge),
            open_str: self.open_str.iter().map(|t| reg(t, mask.structure)).collect(),
            beta: reg(&self.beta, mask.edge),
            gamma_fea: reg(&self.gamma_fea, mask.fea),
            gamma_str: reg(&self.gamma_str, mask.structure),
            alpha_branch: reg(&self.alpha_branch, true),
        }
    }
}

struct ComposerVars {
    lambda_fea: Var,
    lambda_edge: Var,
    lambda_str: Var,
    open_fea: Var,
    open_edge: Var,
    open_str: Vec<Var>,
    beta: Var,
    gamma_fea: Var,
    gamma_str: Var,
    alpha_branch: Var,
}

impl ComposerVars {
    fn vars(&self, mask: PromptMask) -> Vec<Var> {
        let mut v = Vec::new();
        if mask.fea {
            v.extend([self.lambda_fea, self.open_fea, self.gamma_fea]);
        }
        if mask.edge {
            v.extend([self.lambda_edge, self.open_edge, self.beta]);
        }
        if mask.structure {
            v.push(self.lambda_str);
            v.extend(self.open_str.iter().copied());
            v.push(self.gamma_str);
        }
        v.push(self.alpha_branch);
        v
    }
}

/// Softmax of the composition logits; weights sum to one.
pub fn softmax_weights(lambda: &Tensor) -> Vec<f64> {
    let max = lambda.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = lambda.data().iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax-weighted mixture of the source prompts of one kind. Returns one
/// tensor for feature/edge prompts and one per layer for structure prompts.
pub fn compose_prompts(
    bundle: &PretrainedBundle,
    lambda: &Tensor,
    kind: PromptKind,
) -> Result<Vec<Tensor>> {
    let k = bundle.prompts.len();
    if k == 0 {
        return Err(Error::NoSourcePrompts);
    }
    if lambda.shape() != (1, k) {
        return Err(Error::ShapeMismatch { op: "compose_prompts", lhs: (1, k), rhs: lambda.shape() });
    }
    let w = softmax_weights(lambda);
    let mix = |pick: &dyn Fn(&crate::encoder::TriPrompt) -> &Tensor| {
        let cols = pick(&bundle.prompts[0]).cols();
        let mut out = Tensor::zeros(1, cols);
        for (wk, p) in w.iter().zip(&bundle.prompts) {
            for (o, &v) in out.data_mut().iter_mut().zip(pick(p).data()) {
                *o += wk * v;
            }
        }
        out
    };
    Ok(match kind {
        PromptKind::Feature => alloc::vec![mix(&|p| &p.fea)],
        PromptKind::Edge => alloc::vec![mix(&|p| &p.edge)],
        PromptKind::Structure => {
            let n_layers = bundle.prompts[0].structure.len();
            (0..n_layers).map(|l| mix(&move |p: &crate::encoder::TriPrompt| &p.structure[l])).collect()
        }
    })
}

/// Edge features under the composed and open edge prompts:
/// `x_e o p_comp + beta * (x_e o p_open)`.
pub fn modulate_edges(
    x_e: &Tensor,
    state: &ComposerState,
    bundle: &PretrainedBundle,
) -> Result<Tensor> {
    let comp = compose_prompts(bundle, &state.lambda_edge, PromptKind::Edge)?.remove(0);
    if comp.cols() != x_e.cols() || state.open_edge.cols() != x_e.cols() {
        return Err(Error::DimMismatch { expected: x_e.cols(), got: comp.cols(), what: "edge prompt" });
    }
    let beta = state.beta.item();
    let mut out = Tensor::zeros(x_e.rows(), x_e.cols());
    for r in 0..x_e.rows() {
        for ((o, &e), (&c, &p)) in out
            .row_mut(r)
            .iter_mut()
            .zip(x_e.row(r))
            .zip(comp.data().iter().zip(state.open_edge.data()))
        {
            *o = e * c + beta * (e * p);
        }
    }
    Ok(out)
}

/// Tape handles for the frozen bundle: backbone constants plus stacked
/// source prompts (one K x len matrix per kind) for differentiable mixing.
pub struct BundleVars {
    pub enc: EncoderVars,
    fea_stack: Var,
    edge_stack: Var,
    str_stacks: Vec<Var>,
}

pub fn register_bundle(tape: &mut Tape, bundle: &PretrainedBundle) -> Result<BundleVars> {
    if bundle.prompts.is_empty() {
        return Err(Error::NoSourcePrompts);
    }
    let enc = bundle.params.register(tape, false);
    let stack = |tape: &mut Tape, rows: Vec<&Tensor>| {
        let cols = rows[0].cols();
        let mut t = Tensor::zeros(rows.len(), cols);
        for (r, src) in rows.iter().enumerate() {
            t.row_mut(r).copy_from_slice(src.row(0));
        }
        tape.constant(t)
    };
    let fea_stack = stack(tape, bundle.prompts.iter().map(|p| &p.fea).collect());
    let edge_stack = stack(tape, bundle.prompts.iter().map(|p| &p.edge).collect());
    let n_layers = bundle.params.config.n_layers;
    let str_stacks = (0..n_layers)
        .map(|l| stack(tape, bundle.prompts.iter().map(|p| &p.structure[l]).collect()))
        .collect();
    Ok(BundleVars { enc, fea_stack, edge_stack, str_stacks })
}

fn compose_var(tape: &mut Tape, lambda: Var, stack: Var) -> Result<Var> {
    let w = tape.softmax_rows(lambda);
    tape.matmul(w, stack)
}

/// The full adaptation forward pass on a tape; returns the fused embedding
/// matrix. The backbone is registered read-only, so gradients reach only the
/// composer state.
fn dual_branch_vars(
    tape: &mut Tape,
    view: &GraphView,
    bundle_vars: &BundleVars,
    sv: &ComposerVars,
    mask: PromptMask,
) -> Result<Var> {
    let x_v = tape.constant(view.x_v.clone());
    let x_e = tape.constant(view.x_e.clone());

    let x_e_used = if mask.edge {
        let comp = compose_var(tape, sv.lambda_edge, bundle_vars.edge_stack)?;
        let base = tape.mul(x_e, comp)?;
        let open = tape.mul(x_e, sv.open_edge)?;
        let open = tape.mul(open, sv.beta)?;
        tape.add(base, open)?
    } else {
        x_e
    };

    let x_v_used = if mask.fea {
        let comp = compose_var(tape, sv.lambda_fea, bundle_vars.fea_stack)?;
        let base = tape.mul(x_v, comp)?;
        let open = tape.mul(x_v, sv.open_fea)?;
        let open = tape.mul(open, sv.gamma_fea)?;
        tape.add(base, open)?
    } else {
        x_v
    };

    let z_fea = encode_inputs(tape, view, x_v_used, x_e_used, &bundle_vars.enc, None)?;

    let z_str = if mask.structure {
        let comp: Vec<Var> = bundle_vars
            .str_stacks
            .iter()
            .map(|&stack| compose_var(tape, sv.lambda_str, stack))
            .collect::<Result<_>>()?;
        let z_comp = encode_inputs(tape, view, x_v, x_e_used, &bundle_vars.enc, Some(&comp))?;
        let z_open =
            encode_inputs(tape, view, x_v, x_e_used, &bundle_vars.enc, Some(&sv.open_str))?;
        let z_open = tape.mul(z_open, sv.gamma_str)?;
        tape.add(z_comp, z_open)?
    } else {
        let z = encode_inputs(tape, view, x_v, x_e_used, &bundle_vars.enc, None)?;
        let scaled = tape.mul(z, sv.gamma_str)?;
        tape.add(z, scaled)?
    };

    let weighted = tape.mul(z_str, sv.alpha_branch)?;
    tape.add(z_fea, weighted)
}

/// Plain-tensor adaptation forward pass.
pub fn dual_branch_encode(
    g: &HomoGraph,
    bundle: &PretrainedBundle,
    state: &ComposerState,
    mask: PromptMask,
) -> Result<Tensor> {
    check_dims(g, bundle)?;
    let view = GraphView::new(g)?;
    let mut tape = Tape::new();
    let bv = register_bundle(&mut tape, bundle)?;
    let sv = state.register(&mut tape, false, mask);
    let z = dual_branch_vars(&mut tape, &view, &bv, &sv, mask)?;
    Ok(tape.value(z).clone())
}

fn check_dims(g: &HomoGraph, bundle: &PretrainedBundle) -> Result<()> {
    let d = bundle.params.config.d;
    if g.dim() != d {
        return Err(Error::DimMismatch { expected: d, got: g.dim(), what: "target graph" });
    }
    Ok(())
}

/// Nodes within `hops` of `start` (including it), ascending.
pub fn hop_neighborhood(adj: &[Vec<usize>], start: usize, hops: usize) -> Vec<usize> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    seen.insert(start);
    let mut frontier = alloc::vec![start];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// Instance embedding: the node's own row, or the mean over its hop-limited
/// neighborhood for subgraph tasks.
pub fn instance_embed(
    z_final: &Tensor,
    g: &HomoGraph,
    task: &FewShotTask,
    id: usize,
) -> Result<Tensor> {
    if id >= z_final.rows() {
        return Err(Error::RowIndex { op: "instance_embed", index: id, rows: z_final.rows() });
    }
    match task.kind {
        TaskKind::Node => Ok(Tensor::row_vec(z_final.row(id).to_vec())),
        TaskKind::Subgraph => {
            let adj = g.adjacency();
            let hood = hop_neighborhood(&adj, id, task.hop_radius);
            crate::encoder::readout_mean(z_final, &hood)
        }
    }
}

fn embed_ids_var(
    tape: &mut Tape,
    z: Var,
    adj: &[Vec<usize>],
    task: &FewShotTask,
    ids: &[usize],
) -> Result<Var> {
    match task.kind {
        TaskKind::Node => tape.row_gather(z, ids),
        TaskKind::Subgraph => {
            let mut parts = Vec::with_capacity(ids.len());
            for &id in ids {
                let hood = hop_neighborhood(adj, id, task.hop_radius);
                let rows = tape.row_gather(z, &hood)?;
                parts.push(tape.mean_rows(rows)?);
            }
            tape.concat_rows(&parts)
        }
    }
}

/// Class prototypes: support-mean embedding per class, with a normalized
/// copy for cosine scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeSet {
    /// |C| x h prototype matrix.
    pub protos: Tensor,
    /// Row-normalized copy (zero rows stay zero).
    pub normalized: Tensor,
}

pub fn compute_prototypes(
    embeddings: &Tensor,
    labels: &[usize],
    n_classes: usize,
) -> Result<PrototypeSet> {
    if embeddings.rows() != labels.len() {
        return Err(Error::ShapeMismatch {
            op: "compute_prototypes",
            lhs: embeddings.shape(),
            rhs: (labels.len(), 1),
        });
    }
    let mut protos = Tensor::zeros(n_classes, embeddings.cols());
    let mut counts = alloc::vec![0usize; n_classes];
    for (r, &class) in labels.iter().enumerate() {
        counts[class] += 1;
        for (o, &v) in protos.row_mut(class).iter_mut().zip(embeddings.row(r)) {
            *o += v;
        }
    }
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::MissingClass { class });
        }
        let inv = 1.0 / count as f64;
        for v in protos.row_mut(class) {
            *v *= inv;
        }
    }
    let normalized = normalize_rows(&protos);
    Ok(PrototypeSet { protos, normalized })
}

fn normalize_rows(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for r in 0..out.rows() {
        let norm = libm::sqrt(out.row(r).iter().map(|v| v * v).sum());
        if norm > 0.0 {
            for v in out.row_mut(r) {
                *v /= norm;
            }
        } else {
            for v in out.row_mut(r) {
                *v = 0.0;
            }
        }
    }
    out
}

/// Class probabilities from temperature-scaled cosine similarity between the
/// normalized queries (rows of `h_q`) and the normalized prototypes.
/// Zero-norm rows behave as cosine zero.
pub fn predict_proba(h_q: &Tensor, protos: &PrototypeSet, tau: f64) -> Result<Tensor> {
    if tau <= 0.0 {
        return Err(Error::BadConfig { what: "tau must be positive" });
    }
    if h_q.cols() != protos.protos.cols() {
        return Err(Error::ShapeMismatch {
            op: "predict_proba",
            lhs: h_q.shape(),
            rhs: protos.protos.shape(),
        });
    }
    let qn = normalize_rows(h_q);
    let sims = qn.matmul(&protos.normalized.transpose())?;
    let mut tape = Tape::new();
    let logits = tape.constant(sims.map(|v| v / tau));
    let probs = tape.softmax_rows(logits);
    Ok(tape.value(probs).clone())
}

/// Cross-entropy over the support set (prototypes recomputed from the same
/// support embeddings) plus the trainable-variable order. Shared between
/// fine-tuning and gradient checks.
#[allow(clippy::too_many_arguments)]
pub fn support_loss_vars(
    tape: &mut Tape,
    view: &GraphView,
    adj: &[Vec<usize>],
    bundle: &PretrainedBundle,
    state: &ComposerState,
    task: &FewShotTask,
    mask: PromptMask,
    trainable: bool,
) -> Result<(Var, Vec<Var>)> {
    let bv = register_bundle(tape, bundle)?;
    let sv = state.register(tape, trainable, mask);
    let z = dual_branch_vars(tape, view, &bv, &sv, mask)?;

    let ids: Vec<usize> = task.support.iter().map(|&(id, _)| id).collect();
    let labels: Vec<usize> = task.support.iter().map(|&(_, c)| c).collect();
    let h_s = embed_ids_var(tape, z, adj, task, &ids)?;

    // Averaging matrix folds the per-class means into one matmul.
    let mut avg = Tensor::zeros(task.n_classes, ids.len());
    for (col, &class) in labels.iter().enumerate() {
        avg.set(class, col, 1.0 / task.k_shot as f64);
    }
    let avg = tape.constant(avg);
    let protos = tape.matmul(avg, h_s)?;

    let qn = tape.l2_normalize_rows(h_s);
    let pn = tape.l2_normalize_rows(protos);
    let pt = tape.transpose(pn);
    let sims = tape.matmul(qn, pt)?;
    let logits = tape.scale(sims, 1.0 / state.tau);
    let probs = tape.softmax_rows(logits);
    let safe = tape.clamp_min(probs, LOG_FLOOR);
    let logp = tape.log(safe)?;

    let mut onehot = Tensor::zeros(ids.len(), task.n_classes);
    for (r, &class) in labels.iter().enumerate() {
        onehot.set(r, class, 1.0);
    }
    let onehot = tape.constant(onehot);
    let picked = tape.mul(logp, onehot)?;
    let total = tape.sum_all(picked);
    let loss = tape.scale(total, -1.0);
    Ok((loss, sv.vars(mask)))
}

/// Micro/macro-F1 of prototype predictions on the given labeled split under
/// the current composer state.
pub fn evaluate(
    g: &HomoGraph,
    bundle: &PretrainedBundle,
    state: &ComposerState,
    task: &FewShotTask,
    mask: PromptMask,
    split: &[(usize, usize)],
) -> Result<(f64, f64)> {
    if split.is_empty() {
        return Err(Error::EmptyInput { op: "evaluate" });
    }
    let z = dual_branch_encode(g, bundle, state, mask)?;
    let support_ids: Vec<usize> = task.support.iter().map(|&(id, _)| id).collect();
    let support_labels: Vec<usize> = task.support.iter().map(|&(_, c)| c).collect();
    let embed_all = |ids: &[usize]| -> Result<Tensor> {
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            rows.push(instance_embed(&z, g, task, id)?.row(0).to_vec());
        }
        Ok(Tensor::from_rows(&rows))
    };
    let h_support = embed_all(&support_ids)?;
    let protos = compute_prototypes(&h_support, &support_labels, task.n_classes)?;

    let ids: Vec<usize> = split.iter().map(|&(id, _)| id).collect();
    let truth: Vec<usize> = split.iter().map(|&(_, c)| c).collect();
    let h_q = embed_all(&ids)?;
    let probs = predict_proba(&h_q, &protos, state.tau)?;
    let preds: Vec<usize> = (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            let mut best = 0;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    micro_macro_f1(&truth, &preds, task.n_classes)
}

/// Per-epoch record of a fine-tuning run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FinetuneTrace {
    pub losses: Vec<f64>,
    pub val_micro: Vec<f64>,
    /// Epoch whose state the run returned (0 = initial composition).
    pub best_epoch: usize,
}

/// Fine-tune the composer state on the support set with early stopping on
/// validation micro-F1. The backbone stays frozen (verified by digest).
/// Returns the best state by validation score and the metric trace.
pub fn finetune(
    g: &HomoGraph,
    bundle: &PretrainedBundle,
    task: &FewShotTask,
    cfg: &AdaptConfig,
) -> Result<(ComposerState, FinetuneTrace)> {
    cfg.validate()?;
    task.validate()?;
    check_dims(g, bundle)?;
    let digest_before = bundle.params.digest();

    let view = GraphView::new(g)?;
    let adj = g.adjacency();
    let mut state = ComposerState::init(bundle, cfg.tau, cfg.seed)?;
    let mut opt = AdamState::new(cfg.lr);

    let mut trace = FinetuneTrace::default();
    let mut best_val = evaluate(g, bundle, &state, task, cfg.mask, &task.val)?.0;
    let mut best_state = state.clone();
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        let mut tape = Tape::new();
        let (loss_var, order) =
            support_loss_vars(&mut tape, &view, &adj, bundle, &state, task, cfg.mask, true)?;
        let loss = tape.value(loss_var).item();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let mut table = tape.backward(loss_var)?;
        let grads: Vec<Tensor> = order.iter().map(|&v| table.take(&tape, v)).collect();
        opt.apply(&mut state.tensors_mut(cfg.mask), &grads)?;

        let (val_micro, _) = evaluate(g, bundle, &state, task, cfg.mask, &task.val)?;
        trace.losses.push(loss);
        trace.val_micro.push(val_micro);

        if val_micro > best_val {
            best_val = val_micro;
            best_state = state.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    trace.best_epoch = best_epoch;

    if bundle.params.digest() != digest_before {
        return Err(Error::BackboneChanged);
    }
    Ok((best_state, trace))
}
