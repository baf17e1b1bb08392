//! Multi-domain self-supervised pre-training.
//!
//! Each epoch builds three views of a domain graph: the positive view (as
//! is), an augmented view (random edge dropping; self-loops survive), and a
//! negative view (node feature rows shuffled). The backbone encodes the
//! positive and negative views without prompts; the augmented view runs with
//! the domain's full prompt set and its mean embedding, squashed by a
//! sigmoid, becomes the global summary. A bilinear discriminator scores
//! node-summary pairs and a binary cross-entropy loss pushes positive scores
//! up and negative scores down.
//!
//! Across domains the backbone is shared while each domain optimizes its own
//! prompt triple; one optimizer per domain keeps prompt updates isolated.

use alloc::string::String;
use alloc::vec::Vec;

use crate::encoder::{
    encode_view, EncoderConfig, EncoderParams, GraphView, PromptMask, TriPrompt,
};
use crate::error::{Error, Result};
use crate::graph::HomoGraph;
use crate::rng::{derive, derive_idx, Rng};
use crate::tensor::{AdamState, Tape, Tensor, Var};

/// Log arguments are clamped below at this floor, making the loss total.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainConfig {
    /// Probability of dropping each non-self-loop edge in the augmented view.
    pub edge_drop_p: f64,
    /// Epochs per domain (the multi-domain loop is round-robin per epoch).
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Hidden width of the backbone.
    pub hidden: usize,
    /// Hidden width of the edge-attention perceptron.
    pub edge_hidden: usize,
    pub n_layers: usize,
    /// Prompt kinds in play (disabled kinds stay at identity and untrained).
    pub mask: PromptMask,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            edge_drop_p: 0.2,
            epochs: 200,
            lr: 1e-2,
            seed: 0,
            hidden: 64,
            edge_hidden: 32,
            n_layers: 2,
            mask: PromptMask::all(),
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.edge_drop_p) {
            return Err(Error::BadConfig { what: "edge_drop_p must be in [0, 1)" });
        }
        if self.epochs == 0 {
            return Err(Error::BadConfig { what: "epochs must be >= 1" });
        }
        if self.hidden == 0 || self.edge_hidden == 0 || self.n_layers == 0 {
            return Err(Error::BadConfig { what: "hidden sizes and layer count must be >= 1" });
        }
        Ok(())
    }

    pub fn encoder_config(&self, d: usize, f: usize) -> EncoderConfig {
        EncoderConfig { d, f, h: self.hidden, h_e: self.edge_hidden, n_layers: self.n_layers }
    }
}

/// Shared backbone plus one trained prompt triple per source domain.
#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedBundle {
    pub params: EncoderParams,
    pub prompts: Vec<TriPrompt>,
    pub domain_names: Vec<String>,
    pub config: PretrainConfig,
}

impl PretrainedBundle {
    pub fn n_domains(&self) -> usize {
        self.prompts.len()
    }

    /// Randomly initialized bundle with identity prompts; the
    /// no-pre-training ablation fine-tunes this directly.
    pub fn untrained(d: usize, f: usize, names: &[String], cfg: &PretrainConfig) -> Self {
        let enc_cfg = cfg.encoder_config(d, f);
        PretrainedBundle {
            params: EncoderParams::init(enc_cfg, derive(cfg.seed, "init")),
            prompts: names.iter().map(|_| TriPrompt::identity(&enc_cfg)).collect(),
            domain_names: names.to_vec(),
            config: cfg.clone(),
        }
    }
}

/// Shuffle the node feature rows by a seed-determined uniform permutation.
/// The row multiset is preserved; a single row maps to itself.
pub fn corrupt_features(x_v: &Tensor, seed: u64) -> Tensor {
    let perm = Rng::new(seed).permutation(x_v.rows());
    let mut out = Tensor::zeros(x_v.rows(), x_v.cols());
    for (i, &p) in perm.iter().enumerate() {
        out.row_mut(i).copy_from_slice(x_v.row(p));
    }
    out
}

/// Independently drop each non-self-loop edge with probability `p`;
/// self-loops always survive. Edge feature rows are filtered along.
pub fn drop_edges(view: &GraphView, p: f64, seed: u64) -> Result<GraphView> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::BadConfig { what: "edge_drop_p must be in [0, 1)" });
    }
    let mut rng = Rng::new(seed);
    let keep: Vec<bool> = view
        .src
        .iter()
        .zip(&view.dst)
        .map(|(&u, &v)| u == v || rng.next_f64() >= p)
        .collect();
    Ok(view.with_edges_masked(&keep))
}

/// Sigmoid of the mean node embedding of the prompted, augmented view.
pub fn global_summary(
    aug: &GraphView,
    params: &EncoderParams,
    prompt: &TriPrompt,
    mask: PromptMask,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let enc = params.register(&mut tape, false);
    let pv = prompt.register(&mut tape, false, mask);
    let h = encode_view(&mut tape, aug, &enc, Some((&pv, mask)))?;
    let m = tape.mean_rows(h)?;
    let c = tape.sigmoid(m);
    Ok(tape.value(c).clone())
}

/// Binary cross-entropy over bilinear discriminator scores: positives
/// against the summary score high, negatives low.
pub(crate) fn dgi_loss_vars(
    tape: &mut Tape,
    h_pos: Var,
    h_neg: Var,
    c_global: Var,
    w_disc: Var,
) -> Result<Var> {
    let n = tape.shape(h_pos).0;
    if tape.shape(h_neg).0 != n {
        return Err(Error::ShapeMismatch {
            op: "dgi_loss",
            lhs: tape.shape(h_pos),
            rhs: tape.shape(h_neg),
        });
    }
    let ct = tape.transpose(c_global);
    let score = |tape: &mut Tape, h: Var| -> Result<Var> {
        let hw = tape.matmul(h, w_disc)?;
        let s = tape.matmul(hw, ct)?;
        Ok(tape.sigmoid(s))
    };
    let d_pos = score(tape, h_pos)?;
    let d_neg = score(tape, h_neg)?;
    let clamped_pos = tape.clamp_min(d_pos, LOG_FLOOR);
    let log_pos = tape.log(clamped_pos)?;
    let neg_flipped = tape.scale(d_neg, -1.0);
    let one_minus = tape.add_const(neg_flipped, 1.0);
    let clamped_neg = tape.clamp_min(one_minus, LOG_FLOOR);
    let log_neg = tape.log(clamped_neg)?;
    let per_node = tape.add(log_pos, log_neg)?;
    let total = tape.sum_all(per_node);
    Ok(tape.scale(total, -1.0 / n as f64))
}

/// Plain-tensor loss for tests and oracles.
pub fn dgi_loss(h_pos: &Tensor, h_neg: &Tensor, c_global: &Tensor, w_disc: &Tensor) -> Result<f64> {
    let mut tape = Tape::new();
    let hp = tape.constant(h_pos.clone());
    let hn = tape.constant(h_neg.clone());
    let c = tape.constant(c_global.clone());
    let w = tape.constant(w_disc.clone());
    let loss = dgi_loss_vars(&mut tape, hp, hn, c, w)?;
    Ok(tape.value(loss).item())
}

/// Build the epoch's three views and the full contrastive loss on `tape`.
/// Exposed so gradient checks can rebuild the identical loss.
#[allow(clippy::too_many_arguments)]
pub fn pretrain_loss_vars(
    tape: &mut Tape,
    view: &GraphView,
    params: &EncoderParams,
    prompt: &TriPrompt,
    mask: PromptMask,
    trainable: bool,
    shuffle_seed: u64,
    drop_seed: u64,
    drop_p: f64,
) -> Result<(Var, Vec<Var>)> {
    let neg = view.with_features(corrupt_features(&view.x_v, shuffle_seed));
    let aug = drop_edges(view, drop_p, drop_seed)?;

    let enc = params.register(tape, trainable);
    let pv = prompt.register(tape, trainable, mask);

    let h_pos = encode_view(tape, view, &enc, None)?;
    let h_neg = encode_view(tape, &neg, &enc, None)?;
    let h_aug = encode_view(tape, &aug, &enc, Some((&pv, mask)))?;
    let mean = tape.mean_rows(h_aug)?;
    let c_global = tape.sigmoid(mean);

    let loss = dgi_loss_vars(tape, h_pos, h_neg, c_global, enc.w_disc)?;
    let mut params_order = enc.vars();
    params_order.extend(pv.vars(mask));
    Ok((loss, params_order))
}

/// One optimizer step on a domain: build views, compute the loss, update the
/// backbone and this domain's prompt.
#[allow(clippy::too_many_arguments)]
pub fn pretrain_step(
    view: &GraphView,
    params: &mut EncoderParams,
    prompt: &mut TriPrompt,
    opt: &mut AdamState,
    mask: PromptMask,
    drop_p: f64,
    shuffle_seed: u64,
    drop_seed: u64,
    epoch: usize,
) -> Result<f64> {
    let mut tape = Tape::new();
    let (loss_var, order) = pretrain_loss_vars(
        &mut tape, view, params, prompt, mask, true, shuffle_seed, drop_seed, drop_p,
    )?;
    let loss = tape.value(loss_var).item();
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch });
    }
    let mut grads_table = tape.backward(loss_var)?;
    let grads: Vec<Tensor> = order.iter().map(|&v| grads_table.take(&tape, v)).collect();

    let mut targets = params.tensors_mut();
    targets.extend(prompt.tensors_mut(mask));
    opt.apply(&mut targets, &grads)?;
    Ok(loss)
}

/// Pre-train across `domains`, sharing the backbone and keeping one prompt
/// triple and one optimizer per domain. Returns the bundle plus per-domain
/// loss traces (one entry per epoch).
pub fn pretrain_multi(
    domains: &[HomoGraph],
    names: &[String],
    cfg: &PretrainConfig,
) -> Result<(PretrainedBundle, Vec<Vec<f64>>)> {
    cfg.validate()?;
    if domains.is_empty() {
        return Err(Error::BadConfig { what: "pretraining needs at least one domain" });
    }
    if names.len() != domains.len() {
        return Err(Error::BadConfig { what: "domain name count must match domain count" });
    }
    let d = domains[0].dim();
    for g in domains {
        if g.dim() != d {
            return Err(Error::DimMismatch { expected: d, got: g.dim(), what: "domain feature" });
        }
    }

    let views: Vec<GraphView> = domains.iter().map(GraphView::new).collect::<Result<_>>()?;
    let enc_cfg = cfg.encoder_config(d, d);
    let mut params = EncoderParams::init(enc_cfg, derive(cfg.seed, "init"));
    let mut prompts: Vec<TriPrompt> =
        domains.iter().map(|_| TriPrompt::identity(&enc_cfg)).collect();
    let mut opts: Vec<AdamState> = domains.iter().map(|_| AdamState::new(cfg.lr)).collect();
    let mut traces: Vec<Vec<f64>> = domains.iter().map(|_| Vec::new()).collect();

    for epoch in 0..cfg.epochs {
        for (k, view) in views.iter().enumerate() {
            let tag = ((k as u64) << 32) | epoch as u64;
            let loss = pretrain_step(
                view,
                &mut params,
                &mut prompts[k],
                &mut opts[k],
                cfg.mask,
                cfg.edge_drop_p,
                derive_idx(cfg.seed, "shuffle", tag),
                derive_idx(cfg.seed, "drop", tag),
                epoch,
            )?;
            traces[k].push(loss);
        }
    }

    Ok((
        PretrainedBundle {
            params,
            prompts,
            domain_names: names.to_vec(),
            config: cfg.clone(),
        },
        traces,
    ))
}

/// Single-domain pre-training (the K = 1 case of [`pretrain_multi`]).
pub fn pretrain_domain(
    g: &HomoGraph,
    name: &str,
    cfg: &PretrainConfig,
) -> Result<(PretrainedBundle, Vec<f64>)> {
    let (bundle, mut traces) = pretrain_multi(
        core::slice::from_ref(g),
        &[String::from(name)],
        cfg,
    )?;
    Ok((bundle, traces.remove(0)))
}
