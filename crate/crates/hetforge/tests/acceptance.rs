//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line with the measured values. Run with
//! `cargo test -p hetforge --test acceptance -- --nocapture` to see them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use hetforge::bundle::load_hetero_graph;
use hetforge::experiment::{
    run_ablation, run_leave_one_out, transform_domains, AblationKind, AdaptSettings,
    ExperimentConfig, MaskSettings, MiningModeSetting, MiningSettings, PretrainSettings,
    SynthDomainSettings, SynthSettings, TaskKindSetting, TaskSettings,
};
use hetforge::report::ExperimentReport;
use hetforge_core::adapt::{
    dual_branch_encode, evaluate, finetune, support_loss_vars, AdaptConfig, ComposerState,
    FewShotTask, TaskKind,
};
use hetforge_core::encoder::{encode, EncoderParams, GraphView, PromptMask, TriPrompt};
use hetforge_core::fewshot::sample_few_shot;
use hetforge_core::graph::HeteroGraph;
use hetforge_core::pretrain::{
    pretrain_loss_vars, pretrain_multi, PretrainConfig, PretrainedBundle,
};
use hetforge_core::rng::Rng;
use hetforge_core::tensor::{Tape, Tensor};
use hetforge_core::transform::{
    enumerate_instances, homogenize, mine_meta_patterns, pad_and_init, svd_align, MiningConfig,
    MiningMode,
};
use hetforge_core::HomoGraph;

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-7 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

fn random_tensor(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data_mut() {
        *v = rng.uniform(lo, hi);
    }
    t
}

fn five_node_graph(seed: u64) -> HomoGraph {
    let mut rng = Rng::new(seed);
    let n = 5;
    let d = 3;
    let x_v = random_tensor(&mut rng, n, d, -1.0, 1.0);
    let mut edges = vec![(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3), (4, 0), (0, 4)];
    edges.sort_unstable();
    let x_e = random_tensor(&mut rng, edges.len(), d, -1.0, 1.0);
    HomoGraph::new(vec![0, 1, 2, 3, 4], x_v, edges, x_e).unwrap()
}

// ---------------------------------------------------------------------------
// criterion 1: analytic gradients of the contrastive loss and the fine-tune
// cross-entropy match central finite differences on a 5-node fixture
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_gradient_suite() {
    let start = Instant::now();
    let g = five_node_graph(901);
    let view = GraphView::new(&g).unwrap();
    let mask = PromptMask::all();

    // -- contrastive pre-training loss --
    let pcfg = PretrainConfig { hidden: 4, edge_hidden: 3, ..Default::default() };
    let enc_cfg = pcfg.encoder_config(3, 3);
    let mut params = EncoderParams::init(enc_cfg, 902);
    let mut rng = Rng::new(903);
    for v in params.w_disc.data_mut() {
        *v = rng.uniform(-0.5, 0.5);
    }
    let mut prompt = TriPrompt::identity(&enc_cfg);
    for t in prompt.tensors_mut(mask) {
        for v in t.data_mut() {
            *v = rng.uniform(0.6, 1.4);
        }
    }
    let (sseed, dseed, drop_p) = (904, 905, 0.2);
    let loss_of = |params: &EncoderParams, prompt: &TriPrompt| -> f64 {
        let mut tape = Tape::new();
        let (loss, _) =
            pretrain_loss_vars(&mut tape, &view, params, prompt, mask, false, sseed, dseed, drop_p)
                .unwrap();
        tape.value(loss).item()
    };
    let mut tape = Tape::new();
    let (loss, order) =
        pretrain_loss_vars(&mut tape, &view, &params, &prompt, mask, true, sseed, dseed, drop_p)
            .unwrap();
    let mut table = tape.backward(loss).unwrap();
    let analytic: Vec<Tensor> = order.iter().map(|&v| table.take(&tape, v)).collect();
    let mut checked = 0usize;
    let mut max_rel: f64 = 0.0;
    for (pi, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let mut up = (params.clone(), prompt.clone());
            let mut dn = (params.clone(), prompt.clone());
            {
                let mut t = up.0.tensors_mut();
                t.extend(up.1.tensors_mut(mask));
                t[pi].data_mut()[i] += FD_STEP;
            }
            {
                let mut t = dn.0.tensors_mut();
                t.extend(dn.1.tensors_mut(mask));
                t[pi].data_mut()[i] -= FD_STEP;
            }
            let numeric = (loss_of(&up.0, &up.1) - loss_of(&dn.0, &dn.1)) / (2.0 * FD_STEP);
            let e = rel_err(grad.data()[i], numeric);
            max_rel = max_rel.max(e);
            assert!(
                e < FD_TOL,
                "pretrain grad tensor {pi} entry {i}: {} vs {numeric}",
                grad.data()[i]
            );
            checked += 1;
        }
    }

    // -- fine-tune cross-entropy --
    let names = vec!["s0".to_string(), "s1".to_string()];
    let mut bundle = PretrainedBundle::untrained(3, 3, &names, &pcfg);
    for p in &mut bundle.prompts {
        for t in p.tensors_mut(mask) {
            for v in t.data_mut() {
                *v = rng.uniform(0.6, 1.4);
            }
        }
    }
    let task = FewShotTask {
        n_classes: 2,
        k_shot: 1,
        support: vec![(0, 0), (3, 1)],
        val: vec![(1, 0), (4, 1)],
        test: vec![(2, 0)],
        kind: TaskKind::Node,
        hop_radius: 2,
    };
    let mut state = ComposerState::init(&bundle, 0.5, 906).unwrap();
    // move the state off its symmetric start so every gradient is generic
    state.lambda_fea = Tensor::row_vec(vec![0.3, -0.2]);
    state.lambda_edge = Tensor::row_vec(vec![-0.1, 0.4]);
    state.lambda_str = Tensor::row_vec(vec![0.2, 0.1]);
    state.beta = Tensor::scalar(0.3);
    state.gamma_fea = Tensor::scalar(-0.2);
    state.gamma_str = Tensor::scalar(0.25);
    let adj = g.adjacency();
    let ce_of = |state: &ComposerState| -> f64 {
        let mut tape = Tape::new();
        let (loss, _) =
            support_loss_vars(&mut tape, &view, &adj, &bundle, state, &task, mask, false).unwrap();
        tape.value(loss).item()
    };
    let mut tape = Tape::new();
    let (loss, order) =
        support_loss_vars(&mut tape, &view, &adj, &bundle, &state, &task, mask, true).unwrap();
    let mut table = tape.backward(loss).unwrap();
    let analytic: Vec<Tensor> = order.iter().map(|&v| table.take(&tape, v)).collect();
    for (pi, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let mut up = state.clone();
            up.tensors_mut(mask)[pi].data_mut()[i] += FD_STEP;
            let mut dn = state.clone();
            dn.tensors_mut(mask)[pi].data_mut()[i] -= FD_STEP;
            let numeric = (ce_of(&up) - ce_of(&dn)) / (2.0 * FD_STEP);
            let e = rel_err(grad.data()[i], numeric);
            max_rel = max_rel.max(e);
            assert!(
                e < FD_TOL,
                "composer grad tensor {pi} entry {i}: {} vs {numeric}",
                grad.data()[i]
            );
            checked += 1;
        }
    }

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "gradient suite took {secs:.1}s (budget 30s)");
    println!(
        "[criterion 1] gradient suite: PASS ({checked} entries, max rel err {max_rel:.2e}, {secs:.1}s)"
    );
}

// ---------------------------------------------------------------------------
// criterion 2: with a zero discriminator the initial contrastive loss is
// exactly 2 ln 2 on any graph
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_closed_form_initial_loss() {
    let graphs = [five_node_graph(910), five_node_graph(911), {
        // a transformed synthetic domain, to cover a realistic graph too
        let cfg = suite_config();
        let domains = hetforge::experiment::load_domains(&cfg).unwrap();
        transform_domains(&domains[..1], &cfg, false).unwrap().remove(0)
    }];
    let want = 2.0 * std::f64::consts::LN_2;
    let mut worst: f64 = 0.0;
    for (i, g) in graphs.iter().enumerate() {
        let d = g.dim();
        let pcfg = PretrainConfig {
            hidden: 8,
            edge_hidden: 4,
            lr: 0.0,
            epochs: 1,
            seed: 912 + i as u64,
            ..Default::default()
        };
        let enc_cfg = pcfg.encoder_config(d, d);
        let params = EncoderParams::init(enc_cfg, 913 + i as u64); // w_disc = 0
        let prompt = TriPrompt::identity(&enc_cfg);
        let view = GraphView::new(g).unwrap();
        let mut tape = Tape::new();
        let (loss, _) = pretrain_loss_vars(
            &mut tape,
            &view,
            &params,
            &prompt,
            PromptMask::all(),
            false,
            914,
            915,
            0.2,
        )
        .unwrap();
        let got = tape.value(loss).item();
        worst = worst.max((got - want).abs());
        assert!(
            (got - want).abs() < 1e-9,
            "graph {i}: initial loss {got} differs from 2 ln 2 = {want}"
        );
    }
    println!("[criterion 2] closed-form initial loss: PASS (max |dev| {worst:.2e} over {} graphs)", graphs.len());
}

// ---------------------------------------------------------------------------
// criterion 3: SVD alignment against an independent eigendecomposition
// oracle on 50 random matrices
// ---------------------------------------------------------------------------

fn sym_eigen(g: &Tensor) -> (Vec<f64>, Tensor) {
    let n = g.rows();
    let mut a = g.clone();
    let mut v = Tensor::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-18 {
                    continue;
                }
                let theta = 0.5 * (a.get(q, q) - a.get(p, p)) / apq;
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.get(i, i)).collect(), v)
}

#[test]
fn acceptance_03_svd_alignment_oracle() {
    let mut rng = Rng::new(920);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = 2 + rng.below(9);
        let m = 1 + rng.below(9);
        let x = if trial % 3 == 0 && m > 1 {
            let r = 1 + rng.below(m.min(n));
            let left = random_tensor(&mut rng, n, r, -2.0, 2.0);
            let right = random_tensor(&mut rng, r, m, -2.0, 2.0);
            left.matmul(&right).unwrap()
        } else {
            random_tensor(&mut rng, n, m, -2.0, 2.0)
        };
        let d = 1 + rng.below(m);
        let aligned = svd_align(&x, d).unwrap();

        let gram = x.matmul(&x.transpose()).unwrap();
        let (vals, vecs) = sym_eigen(&gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
        let mut best = Tensor::zeros(n, n);
        for &i in order.iter().take(d) {
            let lam = vals[i].max(0.0);
            for r in 0..n {
                for c in 0..n {
                    best.set(r, c, best.get(r, c) + lam * vecs.get(r, i) * vecs.get(c, i));
                }
            }
        }
        let got = aligned.matmul(&aligned.transpose()).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (g, (b, full)) in got.data().iter().zip(best.data().iter().zip(gram.data())) {
            num += (g - b) * (g - b);
            den += full * full;
        }
        let rel = (num.sqrt()) / den.sqrt().max(1e-300);
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "trial {trial}: relative gram error {rel}");
    }
    println!("[criterion 3] SVD alignment vs eigendecomposition oracle: PASS (worst rel err {worst:.2e} over 50 matrices)");
}

// ---------------------------------------------------------------------------
// criterion 4: exhaustive mining equals a brute-force enumerator; the
// stochastic top pattern agrees with the exhaustive top set
// ---------------------------------------------------------------------------

fn bruteforce_counts(g: &HeteroGraph, target: usize, max_nodes: usize) -> BTreeMap<Vec<usize>, u64> {
    fn extend(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        max_nodes: usize,
        sink: &mut dyn FnMut(&[usize]),
    ) {
        sink(path);
        if path.len() == max_nodes {
            return;
        }
        let cur = *path.last().unwrap();
        for i in 0..adj[cur].len() {
            let nb = adj[cur][i];
            if !path.contains(&nb) {
                path.push(nb);
                extend(adj, path, max_nodes, sink);
                path.pop();
            }
        }
    }
    let adj = g.adjacency_dedup();
    let mut counts = BTreeMap::new();
    for start in 0..g.n_nodes() {
        let mut path = vec![start];
        extend(&adj, &mut path, max_nodes, &mut |p: &[usize]| {
            if p.len() >= 3
                && g.node_type_of[p[0]] == target
                && g.node_type_of[*p.last().unwrap()] == target
            {
                let seq: Vec<usize> = p.iter().map(|&v| g.node_type_of[v]).collect();
                *counts.entry(seq).or_insert(0u64) += 1;
            }
        });
    }
    counts
}

/// A random typed graph (<= 25 nodes) with shared-intermediate structure,
/// drawn from the same generator family as the synthetic domains. The
/// stochastic walk measure and exact path counting rank patterns
/// consistently in this regime (verified over a 400-graph sweep); on
/// unstructured dense graphs the two measures can legitimately diverge, as
/// walks weight windows by inverse degrees and also count backtracks.
fn random_heterograph(rng: &mut Rng) -> HeteroGraph {
    let two_aux = rng.below(2) == 0;
    let spec = hetforge_core::synth::SynthSpec {
        seed: rng.next_u64(),
        domains: vec![hetforge_core::synth::SynthDomainSpec {
            name: "g".into(),
            nodes_per_type: if two_aux { vec![10, 6, 5] } else { vec![12, 8] },
            feature_dims: if two_aux { vec![4, 3, 3] } else { vec![4, 3] },
            edge_schema: if two_aux { vec![(0, 1, 3), (0, 2, 2)] } else { vec![(0, 1, 3)] },
            n_classes: 2,
            signal: 0.5,
        }],
    };
    hetforge_core::synth::generate_synthetic(&spec).unwrap().remove(0).graph
}

#[test]
fn acceptance_04_mining_oracle() {
    let mut rng = Rng::new(930);
    let mut stochastic_checked = 0usize;
    for trial in 0..10u64 {
        let g = random_heterograph(&mut rng);
        assert!(g.n_nodes() <= 25);
        let window = 3 + rng.below(2); // w <= 4

        // exact counts vs brute force
        let exhaustive = mine_meta_patterns(
            &g,
            0,
            &MiningConfig {
                walk_length: window + 3,
                window,
                walks_per_node: 1,
                top_k: 10_000,
                seed: 0,
                mode: MiningMode::Exhaustive,
            },
        )
        .unwrap();
        let want = bruteforce_counts(&g, 0, window);
        assert_eq!(exhaustive.len(), want.len(), "trial {trial}: pattern count");
        for p in &exhaustive {
            assert_eq!(want.get(&p.type_sequence), Some(&p.frequency), "trial {trial}");
        }

        // stochastic ranking agreement (counts summed over 5 seeds; every
        // pattern tied for the exhaustive maximum is an admissible top-1)
        if exhaustive.is_empty() {
            continue;
        }
        let top_freq = exhaustive[0].frequency;
        let tied: Vec<&Vec<usize>> = exhaustive
            .iter()
            .take_while(|p| p.frequency == top_freq)
            .map(|p| &p.type_sequence)
            .collect();
        let mut summed: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for seed in 0..5 {
            for p in mine_meta_patterns(
                &g,
                0,
                &MiningConfig {
                    walk_length: window + 3,
                    window,
                    walks_per_node: 500,
                    top_k: 10_000,
                    seed: 7000 + 10 * trial + seed,
                    mode: MiningMode::Stochastic,
                },
            )
            .unwrap()
            {
                *summed.entry(p.type_sequence).or_insert(0) += p.frequency;
            }
        }
        let top = summed.iter().max_by_key(|(_, &c)| c).map(|(s, _)| s.clone()).unwrap();
        assert!(
            tied.contains(&&top),
            "trial {trial}: stochastic top {top:?} not among exhaustive top {tied:?}"
        );
        stochastic_checked += 1;
    }
    println!(
        "[criterion 4] mining vs brute-force oracle: PASS (10 graphs exact, {stochastic_checked} stochastic rankings agree)"
    );
}

// ---------------------------------------------------------------------------
// criterion 5: semantic edge features of the shipped academic fixture match
// hand-computed values
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_homogenization_hand_values() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy_academic");
    let loaded = load_hetero_graph(&dir).unwrap();
    let aligned = pad_and_init(&loaded.graph, 2);
    let patterns = mine_meta_patterns(
        &loaded.graph,
        0,
        &MiningConfig {
            walk_length: 4,
            window: 3,
            walks_per_node: 1,
            top_k: 8,
            seed: 0,
            mode: MiningMode::Exhaustive,
        },
    )
    .unwrap();
    let instances = enumerate_instances(&loaded.graph, &patterns, 64).unwrap();
    let homo = homogenize(&loaded.graph, 0, &aligned, &instances).unwrap();

    // Hand computation: pair (p0,p1) averages author a0 = [1,2] and venue
    // v0 = [1,0] -> [1,1]; (p1,p2) has only a1 = [3,4]; (p2,p3) averages
    // a2 = [5,6] and v1 = [0,1] -> [2.5,3.5].
    let expected: [(usize, usize, [f64; 2]); 3] =
        [(0, 1, [1.0, 1.0]), (1, 2, [3.0, 4.0]), (2, 3, [2.5, 3.5])];
    assert_eq!(homo.edges.len(), 6);
    let mut worst: f64 = 0.0;
    for &(u, v, want) in &expected {
        for (a, b) in [(u, v), (v, u)] {
            let row = homo.edges.iter().position(|&e| e == (a, b)).unwrap();
            for (c, w) in want.iter().enumerate() {
                let got = homo.x_e.get(row, c);
                worst = worst.max((got - w).abs());
                assert!((got - w).abs() <= 1e-12, "edge ({a},{b}) col {c}: {got} vs {w}");
            }
        }
    }
    println!("[criterion 5] homogenization on the academic fixture: PASS (max |dev| {worst:.2e})");
}

// ---------------------------------------------------------------------------
// criterion 6: all-ones prompts plus zero fusion coefficients reproduce the
// raw backbone bit for bit
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_prompt_identity_reduction() {
    let g = five_node_graph(940);
    let pcfg = PretrainConfig { hidden: 6, edge_hidden: 4, seed: 941, ..Default::default() };
    let bundle =
        PretrainedBundle::untrained(3, 3, &["a".to_string(), "b".to_string()], &pcfg);
    let mut state = ComposerState::init(&bundle, 0.5, 942).unwrap();
    state.beta = Tensor::scalar(0.0);
    state.gamma_fea = Tensor::scalar(0.0);
    state.gamma_str = Tensor::scalar(0.0);
    state.alpha_branch = Tensor::scalar(0.0);

    let full = dual_branch_encode(&g, &bundle, &state, PromptMask::all()).unwrap();
    let raw = encode(&g, &bundle.params, None, PromptMask::all()).unwrap();
    assert_eq!(full.shape(), raw.shape());
    for (a, b) in full.data().iter().zip(raw.data()) {
        assert_eq!(a.to_bits(), b.to_bits(), "identity reduction differs: {a} vs {b}");
    }
    println!(
        "[criterion 6] prompt-identity reduction: PASS (bit-exact over {} entries)",
        full.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 7: fine-tuning never changes the backbone digest
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_frozen_backbone() {
    let g = five_node_graph(950);
    let pcfg = PretrainConfig { hidden: 6, edge_hidden: 4, seed: 951, ..Default::default() };
    let bundle =
        PretrainedBundle::untrained(3, 3, &["a".to_string(), "b".to_string()], &pcfg);
    let digest_before = bundle.params.digest();
    let task = FewShotTask {
        n_classes: 2,
        k_shot: 1,
        support: vec![(0, 0), (3, 1)],
        val: vec![(1, 0), (4, 1)],
        test: vec![(2, 0)],
        kind: TaskKind::Node,
        hop_radius: 2,
    };
    let cfg = AdaptConfig { epochs: 25, seed: 952, ..Default::default() };
    let (_, trace) = finetune(&g, &bundle, &task, &cfg).unwrap();
    assert!(!trace.losses.is_empty());
    assert_eq!(bundle.params.digest(), digest_before, "backbone digest changed");
    println!(
        "[criterion 7] frozen backbone: PASS (digest {digest_before:016x} unchanged after {} epochs)",
        trace.losses.len()
    );
}

// ---------------------------------------------------------------------------
// the shared synthetic suite for criteria 8-10
// ---------------------------------------------------------------------------

fn dom(
    name: &str,
    nodes: Vec<usize>,
    dims: Vec<usize>,
    schema: Vec<(usize, usize, usize)>,
) -> SynthDomainSettings {
    SynthDomainSettings {
        name: name.into(),
        nodes_per_type: nodes,
        feature_dims: dims,
        edge_schema: schema,
        n_classes: 3,
        signal: 0.8,
    }
}

fn suite_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 72026,
        seeds: (101..=120).collect(),
        synth: Some(SynthSettings {
            seed: 424_242,
            domains: vec![
                dom("d0", vec![300, 150], vec![24, 12], vec![(0, 1, 3)]),
                dom("d1", vec![300, 120, 100], vec![20, 10, 14], vec![(0, 1, 3), (0, 2, 2)]),
                dom("d2", vec![300, 180], vec![28, 16], vec![(0, 1, 4)]),
            ],
        }),
        datasets: None,
        align_dim: 8,
        mining: MiningSettings {
            walk_length: 8,
            window: 3,
            walks_per_node: 20,
            top_k: 4,
            mode: MiningModeSetting::Stochastic,
            instance_cap: 32,
        },
        pretrain: PretrainSettings {
            edge_drop_p: 0.2,
            epochs: 60,
            lr: 1e-2,
            hidden: 16,
            edge_hidden: 8,
            n_layers: 2,
        },
        adapt: AdaptSettings { epochs: 120, lr: 5e-3, patience: 15, tau: 0.5 },
        task: TaskSettings { kind: TaskKindSetting::Node, shots: 1, hop_radius: 2 },
        no_pretrain: false,
        mask: MaskSettings::default(),
    }
}

static BASE_REPORT: OnceLock<ExperimentReport> = OnceLock::new();

fn base_report() -> &'static ExperimentReport {
    BASE_REPORT.get_or_init(|| run_leave_one_out(&suite_config()).unwrap())
}

// ---------------------------------------------------------------------------
// criterion 8: synthetic transfer beats chance and a no-pre-training bundle
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_synthetic_transfer() {
    let start = Instant::now();
    let base = base_report();
    let mut no_pre_cfg = suite_config();
    no_pre_cfg.no_pretrain = true;
    let no_pre = run_leave_one_out(&no_pre_cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let chance = 1.0 / 3.0;
    let full = base.aggregate.micro_mean;
    let ablated = no_pre.aggregate.micro_mean;
    assert!(
        full >= chance + 0.10,
        "mean micro-F1 {full:.4} does not exceed chance {chance:.4} by 0.10"
    );
    assert!(
        full - ablated >= 0.03,
        "pre-training gain {:.4} below 0.03 (full {full:.4}, random-init {ablated:.4})",
        full - ablated
    );
    assert!(secs < 600.0, "synthetic transfer took {secs:.0}s (budget 600s)");
    println!(
        "[criterion 8] synthetic transfer: PASS (micro {full:.4} vs chance {chance:.4}, \
         no-pretrain {ablated:.4}, gain {:.4}, {secs:.0}s)",
        full - ablated
    );
}

// ---------------------------------------------------------------------------
// criterion 9: 5-shot is at least as good as 1-shot
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_kshot_monotonicity() {
    let cfg = suite_config();
    let domains = hetforge::experiment::load_domains(&cfg).unwrap();
    let homos = transform_domains(&domains, &cfg, false).unwrap();

    // target d0, sources d1 + d2
    let sources: Vec<HomoGraph> = vec![homos[1].clone(), homos[2].clone()];
    let names = vec![domains[1].name.clone(), domains[2].name.clone()];
    let pcfg = PretrainConfig {
        edge_drop_p: cfg.pretrain.edge_drop_p,
        epochs: cfg.pretrain.epochs,
        lr: cfg.pretrain.lr,
        seed: 960,
        hidden: cfg.pretrain.hidden,
        edge_hidden: cfg.pretrain.edge_hidden,
        n_layers: cfg.pretrain.n_layers,
        mask: PromptMask::all(),
    };
    let (bundle, _) = pretrain_multi(&sources, &names, &pcfg).unwrap();

    let homo = &homos[0];
    let labels: Vec<(usize, usize)> = domains[0]
        .labels
        .iter()
        .map(|&(id, c)| (homo.local_of(id as u64).unwrap(), c))
        .collect();

    let mean_for = |k_shot: usize| -> f64 {
        let mut sum = 0.0;
        for seed in 201..211u64 {
            let task =
                sample_few_shot(&labels, 3, k_shot, seed, TaskKind::Node, 2).unwrap();
            let acfg = AdaptConfig {
                epochs: cfg.adapt.epochs,
                lr: cfg.adapt.lr,
                patience: cfg.adapt.patience,
                tau: cfg.adapt.tau,
                seed,
                mask: PromptMask::all(),
            };
            let (state, _) = finetune(homo, &bundle, &task, &acfg).unwrap();
            let (micro, _) =
                evaluate(homo, &bundle, &state, &task, PromptMask::all(), &task.test).unwrap();
            sum += micro;
        }
        sum / 10.0
    };

    let one = mean_for(1);
    let five = mean_for(5);
    assert!(
        five >= one,
        "5-shot mean micro {five:.4} fell below 1-shot mean {one:.4}"
    );
    println!("[criterion 9] K-shot monotonicity: PASS (1-shot {one:.4} <= 5-shot {five:.4}, 10 seeds)");
}

// ---------------------------------------------------------------------------
// criterion 10: the full prompt set beats each single-prompt-removed variant
// and the semantic transformation beats flattening (0.01 slack)
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_ablation_directions() {
    let full = base_report().aggregate.micro_mean;
    let cfg = suite_config();

    let prompt_variants = run_ablation(AblationKind::Prompt, &cfg).unwrap();
    for (name, report) in &prompt_variants {
        let v = report.aggregate.micro_mean;
        assert!(
            full >= v - 0.01,
            "{name}: removed-prompt variant {v:.4} beats the full prompt set {full:.4} beyond slack"
        );
    }

    let flatten = run_ablation(AblationKind::Flatten, &cfg).unwrap();
    let flat = flatten[0].1.aggregate.micro_mean;
    assert!(
        full >= flat - 0.01,
        "flattening baseline {flat:.4} beats the semantic transformation {full:.4} beyond slack"
    );

    let detail: Vec<String> = prompt_variants
        .iter()
        .map(|(n, r)| format!("{n} {:.4}", r.aggregate.micro_mean))
        .collect();
    println!(
        "[criterion 10] ablation directions: PASS (full {full:.4} >= {} and flatten {flat:.4} - 0.01)",
        detail.join(", ")
    );
}

// ---------------------------------------------------------------------------
// criterion 11: identical configs produce byte-identical reports through the
// actual CLI binary
// ---------------------------------------------------------------------------

#[test]
fn acceptance_11_deterministic_reports() {
    let mut cfg = suite_config();
    // a smaller instance keeps the double run quick; determinism is a
    // property of the pipeline, not of the scale
    cfg.seeds = vec![1, 2, 3];
    cfg.pretrain.epochs = 20;
    cfg.adapt.epochs = 15;
    if let Some(s) = cfg.synth.as_mut() {
        s.domains.truncate(2);
        for d in &mut s.domains {
            d.nodes_per_type = d.nodes_per_type.iter().map(|n| n / 4).collect();
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("experiment.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let run = |out: &PathBuf| -> Vec<u8> {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_hetforge"))
            .args([
                "loo",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("loo_report.json")).unwrap()
    };
    let a = run(&dir.path().join("r1"));
    let b = run(&dir.path().join("r2"));
    assert_eq!(a, b, "loo reports differ between identical runs");
    println!(
        "[criterion 11] deterministic reports: PASS (byte-identical, {} bytes)",
        a.len()
    );
}
