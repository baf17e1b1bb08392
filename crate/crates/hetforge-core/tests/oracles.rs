//! Independent-oracle checks: the SVD alignment against a from-scratch
//! symmetric eigendecomposition, and exhaustive pattern mining against a
//! naive all-simple-paths enumerator.

use std::collections::BTreeMap;

use hetforge_core::graph::HeteroGraph;
use hetforge_core::rng::Rng;
use hetforge_core::tensor::Tensor;
use hetforge_core::transform::{
    mine_meta_patterns, svd_align, MiningConfig, MiningMode,
};

// ---- symmetric Jacobi eigendecomposition (test-only oracle) ----

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
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
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
    let eigvals: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    (eigvals, v)
}

/// Best rank-d approximation of a symmetric PSD matrix via the oracle
/// eigendecomposition.
fn best_rank_d(g: &Tensor, d: usize) -> Tensor {
    let n = g.rows();
    let (vals, vecs) = sym_eigen(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut out = Tensor::zeros(n, n);
    for &i in order.iter().take(d) {
        let lam = vals[i].max(0.0);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, out.get(r, c) + lam * vecs.get(r, i) * vecs.get(c, i));
            }
        }
    }
    out
}

fn frob(t: &Tensor) -> f64 {
    t.data().iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn svd_gram_matches_eigendecomposition_oracle() {
    let mut rng = Rng::new(400);
    for trial in 0..50 {
        let n = 2 + rng.below(8);
        let m = 1 + rng.below(8);
        // every third matrix is deliberately low-rank
        let x = if trial % 3 == 0 && m > 1 {
            let r = 1 + rng.below(m.min(n));
            let mut a = Tensor::zeros(n, r);
            for v in a.data_mut() {
                *v = rng.uniform(-2.0, 2.0);
            }
            let mut b = Tensor::zeros(r, m);
            for v in b.data_mut() {
                *v = rng.uniform(-2.0, 2.0);
            }
            a.matmul(&b).unwrap()
        } else {
            let mut t = Tensor::zeros(n, m);
            for v in t.data_mut() {
                *v = rng.uniform(-2.0, 2.0);
            }
            t
        };
        let d = 1 + rng.below(m);
        let aligned = svd_align(&x, d).unwrap();
        assert_eq!(aligned.shape(), (n, d));

        let gram_full = x.matmul(&x.transpose()).unwrap();
        let gram_aligned = aligned.matmul(&aligned.transpose()).unwrap();
        let want = best_rank_d(&gram_full, d);

        let mut diff = gram_aligned.clone();
        for (dv, &wv) in diff.data_mut().iter_mut().zip(want.data()) {
            *dv -= wv;
        }
        let rel = frob(&diff) / frob(&gram_full).max(1e-300);
        assert!(rel <= 1e-6, "trial {trial}: relative gram error {rel}");
    }
}

// ---- mining oracle ----

/// Naive enumerator, structured differently from the library: walks every
/// simple path from every node, then filters closed target-type loops.
fn bruteforce_pattern_counts(
    g: &HeteroGraph,
    target: usize,
    max_nodes: usize,
) -> BTreeMap<Vec<usize>, u64> {
    fn extend(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        max_nodes: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        out.push(path.clone());
        if path.len() == max_nodes {
            return;
        }
        let cur = *path.last().unwrap();
        for &nb in &adj[cur] {
            if !path.contains(&nb) {
                path.push(nb);
                extend(adj, path, max_nodes, out);
                path.pop();
            }
        }
    }
    let adj = g.adjacency_dedup();
    let mut all_paths = Vec::new();
    for start in 0..g.n_nodes() {
        let mut path = vec![start];
        extend(&adj, &mut path, max_nodes, &mut all_paths);
    }
    let mut counts = BTreeMap::new();
    for p in all_paths {
        if p.len() >= 3
            && g.node_type_of[p[0]] == target
            && g.node_type_of[*p.last().unwrap()] == target
        {
            let seq: Vec<usize> = p.iter().map(|&v| g.node_type_of[v]).collect();
            *counts.entry(seq).or_insert(0u64) += 1;
        }
    }
    counts
}

fn random_typed_graph(rng: &mut Rng, n_nodes: usize, n_types: usize, n_edges: usize) -> HeteroGraph {
    let node_type_of: Vec<usize> = (0..n_nodes)
        .map(|i| if i < n_types { i } else { rng.below(n_types) })
        .collect();
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut attempts = 0;
    while edges.len() < 2 * n_edges && attempts < 50 * n_edges {
        attempts += 1;
        let u = rng.below(n_nodes);
        let v = rng.below(n_nodes);
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            continue;
        }
        edges.push((u, v, 0));
        edges.push((v, u, 0));
    }
    HeteroGraph {
        node_types: (0..n_types).map(|t| format!("t{t}")).collect(),
        edge_types: vec!["e".to_string(), "unused".to_string()],
        node_type_of,
        edges,
        features: BTreeMap::new(),
    }
}

#[test]
fn exhaustive_mining_matches_bruteforce_enumerator() {
    let mut rng = Rng::new(500);
    for trial in 0..10 {
        let n_nodes = 8 + rng.below(18); // <= 25
        let n_types = 2 + rng.below(3);
        let g = random_typed_graph(&mut rng, n_nodes, n_types, n_nodes * 2);
        let window = 3 + rng.below(2); // w in {3, 4}
        let cfg = MiningConfig {
            walk_length: window + 2,
            window,
            walks_per_node: 1,
            top_k: 1000,
            seed: trial as u64,
            mode: MiningMode::Exhaustive,
        };
        let got = mine_meta_patterns(&g, 0, &cfg).unwrap();
        let want = bruteforce_pattern_counts(&g, 0, window);
        assert_eq!(got.len(), want.len(), "trial {trial}: pattern set size");
        for p in &got {
            assert_eq!(
                want.get(&p.type_sequence),
                Some(&p.frequency),
                "trial {trial}: {:?}",
                p.type_sequence
            );
        }
    }
}

#[test]
fn stochastic_top_pattern_agrees_with_exhaustive() {
    let mut rng = Rng::new(600);
    for trial in 0..10 {
        let g = random_typed_graph(&mut rng, 20, 3, 40);
        let exhaustive = mine_meta_patterns(
            &g,
            0,
            &MiningConfig {
                walk_length: 8,
                window: 3,
                walks_per_node: 1,
                top_k: 1000,
                seed: 0,
                mode: MiningMode::Exhaustive,
            },
        )
        .unwrap();
        if exhaustive.is_empty() {
            continue;
        }
        // patterns tied for the exhaustive maximum are all valid top-1 answers
        let top_freq = exhaustive[0].frequency;
        let tied_top: Vec<&Vec<usize>> = exhaustive
            .iter()
            .take_while(|p| p.frequency == top_freq)
            .map(|p| &p.type_sequence)
            .collect();

        // counts summed over 5 independent stochastic seeds
        let mut summed: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for seed in 0..5u64 {
            let got = mine_meta_patterns(
                &g,
                0,
                &MiningConfig {
                    walk_length: 8,
                    window: 3,
                    walks_per_node: 500,
                    top_k: 1000,
                    seed: 1000 + seed,
                    mode: MiningMode::Stochastic,
                },
            )
            .unwrap();
            for p in got {
                *summed.entry(p.type_sequence).or_insert(0) += p.frequency;
            }
        }
        let top = summed
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(seq, _)| seq.clone())
            .unwrap();
        assert!(
            tied_top.contains(&&top),
            "trial {trial}: stochastic top {top:?} not among exhaustive top {tied_top:?}"
        );
    }
}
