//! Synthetic heterogeneous domains with a plantable class signal.
//!
//! Each domain has a target type (type 0) plus auxiliary types. Target nodes
//! get uniform class labels; auxiliary nodes get a hidden class affiliation.
//! The signal strength `s` controls both the feature signal (class-dependent
//! Gaussian means on a few randomly placed dimensions) and the structure
//! signal (edges prefer same-class endpoints with probability
//! `s + (1 - s)/|C|`). At `s = 0` classes are indistinguishable; at `s = 1`
//! class means sit far apart and wiring is fully assortative.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::rng::{derive_idx, Rng};
use crate::tensor::Tensor;

/// Distance between class feature means at `s = 1` (in noise units).
const MEAN_SEPARATION: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthDomainSpec {
    pub name: String,
    /// Node count per type; index 0 is the target type.
    pub nodes_per_type: Vec<usize>,
    /// Feature width per type; 0 means featureless.
    pub feature_dims: Vec<usize>,
    /// `(src type, dst type, edges per src node)`; emitted undirected.
    pub edge_schema: Vec<(usize, usize, usize)>,
    pub n_classes: usize,
    /// Planted class signal strength in [0, 1].
    pub signal: f64,
}

impl SynthDomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::BadConfig { what: "synthetic domains need at least 2 classes" });
        }
        if self.nodes_per_type.len() < 2 {
            return Err(Error::BadConfig { what: "synthetic domains need at least 2 node types" });
        }
        if self.nodes_per_type.len() != self.feature_dims.len() {
            return Err(Error::BadConfig { what: "nodes_per_type and feature_dims lengths differ" });
        }
        if !(0.0..=1.0).contains(&self.signal) {
            return Err(Error::BadConfig { what: "signal must be in [0, 1]" });
        }
        if self.edge_schema.is_empty() {
            return Err(Error::BadConfig { what: "edge schema must not be empty" });
        }
        for &(a, b, deg) in &self.edge_schema {
            if a >= self.nodes_per_type.len() || b >= self.nodes_per_type.len() {
                return Err(Error::BadConfig { what: "edge schema references unknown type" });
            }
            if deg == 0 {
                return Err(Error::BadConfig { what: "schema degree must be >= 1" });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub domains: Vec<SynthDomainSpec>,
    pub seed: u64,
}

/// A generated domain: the typed graph plus target-node labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDomain {
    pub name: String,
    pub graph: HeteroGraph,
    /// `(node id, class)` for every target-type node.
    pub labels: Vec<(usize, usize)>,
    pub target_type: usize,
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<SynthDomain>> {
    spec.domains
        .iter()
        .enumerate()
        .map(|(k, d)| generate_domain(d, derive_idx(spec.seed, "domain", k as u64)))
        .collect()
}

fn generate_domain(spec: &SynthDomainSpec, seed: u64) -> Result<SynthDomain> {
    spec.validate()?;
    let n_types = spec.nodes_per_type.len();
    let c = spec.n_classes;
    let mut rng = Rng::new(seed);

    // type-major dense node ids
    let mut offsets = Vec::with_capacity(n_types);
    let mut total = 0usize;
    for &n in &spec.nodes_per_type {
        offsets.push(total);
        total += n;
    }
    let mut node_type_of = Vec::with_capacity(total);
    for (t, &n) in spec.nodes_per_type.iter().enumerate() {
        node_type_of.extend(core::iter::repeat_n(t, n));
    }

    // classes for target nodes, hidden affiliations for auxiliary nodes
    let mut group = Vec::with_capacity(total);
    let mut labels = Vec::new();
    for (t, &n) in spec.nodes_per_type.iter().enumerate() {
        for local in 0..n {
            let g = if t == 0 {
                let class = rng.below(c);
                labels.push((offsets[0] + local, class));
                class
            } else {
                local % c
            };
            group.push(g);
        }
    }

    // class-dependent Gaussian features on randomly placed signal dims
    let mut features = alloc::collections::BTreeMap::new();
    for (t, (&n, &d_a)) in spec.nodes_per_type.iter().zip(&spec.feature_dims).enumerate() {
        if d_a == 0 {
            continue;
        }
        let per_class = (d_a / (4 * c)).clamp(if d_a >= c { 1 } else { 0 }, d_a / c);
        let dim_perm = rng.permutation(d_a);
        let amp = if per_class == 0 {
            0.0
        } else {
            MEAN_SEPARATION * spec.signal / libm::sqrt(2.0 * per_class as f64)
        };
        let mut m = Tensor::zeros(n, d_a);
        for local in 0..n {
            let cls = group[offsets[t] + local];
            let row = m.row_mut(local);
            for v in row.iter_mut() {
                *v = rng.normal();
            }
            for &dim in &dim_perm[cls * per_class..(cls + 1) * per_class] {
                row[dim] += amp;
            }
        }
        features.insert(t, m);
    }

    // assortative wiring: same-group partner with prob s + (1 - s)/|C|
    let p_same = spec.signal + (1.0 - spec.signal) / c as f64;
    let mut edges = Vec::new();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (rel, &(ta, tb, deg)) in spec.edge_schema.iter().enumerate() {
        let mut by_group: Vec<Vec<usize>> = alloc::vec![Vec::new(); c];
        for local in 0..spec.nodes_per_type[tb] {
            let id = offsets[tb] + local;
            by_group[group[id]].push(id);
        }
        let all: Vec<usize> =
            (0..spec.nodes_per_type[tb]).map(|l| offsets[tb] + l).collect();
        for local in 0..spec.nodes_per_type[ta] {
            let u = offsets[ta] + local;
            let mut placed = 0;
            let mut attempts = 0;
            while placed < deg && attempts < 50 * deg {
                attempts += 1;
                let pool: &[usize] = if rng.next_f64() < p_same {
                    &by_group[group[u]]
                } else {
                    &all
                };
                if pool.is_empty() {
                    break;
                }
                let v = pool[rng.below(pool.len())];
                if v == u || !seen.insert((u.min(v), u.max(v))) {
                    continue;
                }
                edges.push((u, v, rel));
                edges.push((v, u, rel));
                placed += 1;
            }
        }
    }

    let node_types: Vec<String> = (0..n_types)
        .map(|t| if t == 0 { String::from("target") } else { format!("aux{t}") })
        .collect();
    let edge_types: Vec<String> =
        (0..spec.edge_schema.len()).map(|r| format!("rel{r}")).collect();

    let graph = HeteroGraph { node_types, edge_types, node_type_of, edges, features };
    graph.validate()?;
    Ok(SynthDomain { name: spec.name.clone(), graph, labels, target_type: 0 })
}
