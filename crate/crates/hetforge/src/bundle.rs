//! The heterogeneous graph bundle: a directory with `schema.json`,
//! `nodes.tsv`, `edges.tsv`, and optional `features_<type>.tsv` tables.
//! UTF-8, `\n` line endings, `#`-prefixed comment lines ignored. Attributes
//! are strictly numeric; anything else is rejected (text-free setting).
//!
//! Node ids in the files are arbitrary integers; loading densifies them to
//! `0..n` (ascending original order) and keeps the originals in a sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hetforge_core::graph::HeteroGraph;
use hetforge_core::synth::SynthDomain;
use hetforge_core::tensor::Tensor;

use crate::error::{io_err, HetforgeError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleSchema {
    pub node_types: Vec<String>,
    pub edge_types: Vec<String>,
    /// Name of the target node type.
    pub target: String,
    /// Undirected bundles are doubled at load so message passing stays
    /// uniform over directed edges.
    pub undirected: bool,
}

/// A loaded bundle: the validated graph, the target type id, and the
/// original node ids (sidecar; index = dense id).
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub graph: HeteroGraph,
    pub target_type: usize,
    pub original_ids: Vec<u64>,
}

impl LoadedBundle {
    pub fn dense_of(&self, original: u64) -> Option<usize> {
        self.original_ids.binary_search(&original).ok()
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect())
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> HetforgeError {
    HetforgeError::Parse { file: file.to_path_buf(), line, msg: msg.into() }
}

/// Load and validate a heterogeneous graph bundle.
pub fn load_hetero_graph(dir: &Path) -> Result<LoadedBundle> {
    let schema_path = dir.join("schema.json");
    let schema_text = fs::read_to_string(&schema_path).map_err(io_err(&schema_path))?;
    let schema: BundleSchema = serde_json::from_str(&schema_text)
        .map_err(|e| parse_err(&schema_path, e.line(), e.to_string()))?;

    let type_id: BTreeMap<&str, usize> =
        schema.node_types.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let edge_type_id: BTreeMap<&str, usize> =
        schema.edge_types.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let target_type = *type_id.get(schema.target.as_str()).ok_or_else(|| {
        HetforgeError::Format {
            path: schema_path.clone(),
            msg: format!("target type {:?} not in node_types", schema.target),
        }
    })?;

    // nodes.tsv: id <tab> type-name
    let nodes_path = dir.join("nodes.tsv");
    let mut declared: BTreeMap<u64, usize> = BTreeMap::new();
    for (line_no, line) in read_lines(&nodes_path)? {
        let mut fields = line.split('\t');
        let id_field = fields.next().unwrap_or("");
        let id: u64 = id_field
            .trim()
            .parse()
            .map_err(|_| parse_err(&nodes_path, line_no, format!("bad node id {id_field:?}")))?;
        let ty = fields
            .next()
            .ok_or_else(|| parse_err(&nodes_path, line_no, "missing type field"))?
            .trim();
        let t = *type_id
            .get(ty)
            .ok_or_else(|| parse_err(&nodes_path, line_no, format!("unknown node type {ty:?}")))?;
        if declared.insert(id, t).is_some() {
            return Err(parse_err(&nodes_path, line_no, format!("duplicate node id {id}")));
        }
    }
    let original_ids: Vec<u64> = declared.keys().copied().collect();
    let dense: BTreeMap<u64, usize> =
        original_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let node_type_of: Vec<usize> = declared.values().copied().collect();

    // edges.tsv: src <tab> dst <tab> edge-type-name
    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (line_no, line) in read_lines(&edges_path)? {
        let mut fields = line.split('\t');
        let mut endpoint = |what: &str| -> Result<usize> {
            let raw = fields
                .next()
                .ok_or_else(|| parse_err(&edges_path, line_no, format!("missing {what}")))?
                .trim();
            let id: u64 = raw
                .parse()
                .map_err(|_| parse_err(&edges_path, line_no, format!("bad {what} {raw:?}")))?;
            dense.get(&id).copied().ok_or_else(|| {
                parse_err(
                    &edges_path,
                    line_no,
                    format!("dangling endpoint: node id {id} not declared in nodes.tsv"),
                )
            })
        };
        let u = endpoint("src")?;
        let v = endpoint("dst")?;
        let ty = fields
            .next()
            .ok_or_else(|| parse_err(&edges_path, line_no, "missing edge type"))?
            .trim();
        let t = *edge_type_id
            .get(ty)
            .ok_or_else(|| parse_err(&edges_path, line_no, format!("unknown edge type {ty:?}")))?;
        edges.push((u, v, t));
        if schema.undirected && u != v {
            edges.push((v, u, t));
        }
    }

    // features_<type>.tsv: id then d_a floats
    let mut features = BTreeMap::new();
    for (t, name) in schema.node_types.iter().enumerate() {
        let path = dir.join(format!("features_{name}.tsv"));
        if !path.exists() {
            continue;
        }
        let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut width: Option<usize> = None;
        for (line_no, line) in read_lines(&path)? {
            let mut fields = line.split('\t');
            let id_raw = fields.next().unwrap_or("").trim();
            let id: u64 = id_raw
                .parse()
                .map_err(|_| parse_err(&path, line_no, format!("bad node id {id_raw:?}")))?;
            let d = *dense.get(&id).ok_or_else(|| {
                parse_err(&path, line_no, format!("feature row for undeclared node id {id}"))
            })?;
            if node_type_of[d] != t {
                return Err(parse_err(
                    &path,
                    line_no,
                    format!("node {id} is not of type {name:?}"),
                ));
            }
            let mut vals = Vec::new();
            for raw in fields {
                let raw = raw.trim();
                let v: f64 = raw.parse().map_err(|_| {
                    parse_err(
                        &path,
                        line_no,
                        format!("non-numeric attribute {raw:?} (text attributes are unsupported)"),
                    )
                })?;
                vals.push(v);
            }
            match width {
                None => width = Some(vals.len()),
                Some(w) if w != vals.len() => {
                    return Err(parse_err(
                        &path,
                        line_no,
                        format!("expected {w} attributes, found {}", vals.len()),
                    ));
                }
                _ => {}
            }
            if rows.insert(d, vals).is_some() {
                return Err(parse_err(&path, line_no, format!("duplicate feature row for id {id}")));
            }
        }
        let type_nodes: Vec<usize> =
            (0..node_type_of.len()).filter(|&v| node_type_of[v] == t).collect();
        let w = width.unwrap_or(0);
        let mut m = Tensor::zeros(type_nodes.len(), w);
        for (local, &v) in type_nodes.iter().enumerate() {
            match rows.remove(&v) {
                Some(row) => m.row_mut(local).copy_from_slice(&row),
                None => {
                    return Err(HetforgeError::Format {
                        path: path.clone(),
                        msg: format!("missing feature row for node id {}", original_ids[v]),
                    });
                }
            }
        }
        features.insert(t, m);
    }

    let graph = HeteroGraph {
        node_types: schema.node_types,
        edge_types: schema.edge_types,
        node_type_of,
        edges,
        features,
    };
    graph.validate()?;
    Ok(LoadedBundle { graph, target_type, original_ids })
}

/// Labeled instances (`(node index, class index)` pairs) plus the sorted
/// class names that define the index assignment.
pub type LabeledNodes = (Vec<(usize, usize)>, Vec<String>);

/// Parse `labels.tsv` (node-id, class-name) against a loaded bundle.
/// Class indices are assigned by sorted class name.
pub fn load_labels(path: &Path, bundle: &LoadedBundle) -> Result<LabeledNodes> {
    let mut raw = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.split('\t');
        let id_raw = fields.next().unwrap_or("").trim();
        let id: u64 = id_raw
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad node id {id_raw:?}")))?;
        let dense = bundle.dense_of(id).ok_or_else(|| {
            parse_err(path, line_no, format!("label for undeclared node id {id}"))
        })?;
        let class = fields
            .next()
            .ok_or_else(|| parse_err(path, line_no, "missing class field"))?
            .trim()
            .to_string();
        names.push(class.clone());
        raw.push((dense, class));
    }
    names.sort();
    names.dedup();
    let index: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels = raw.into_iter().map(|(id, c)| (id, index[c.as_str()])).collect();
    Ok((labels, names))
}

/// Write a synthetic domain as a bundle directory (plus `labels.tsv`).
pub fn write_synth_domain(domain: &SynthDomain, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let g = &domain.graph;
    let schema = BundleSchema {
        node_types: g.node_types.clone(),
        edge_types: g.edge_types.clone(),
        target: g.node_types[domain.target_type].clone(),
        // generated graphs are already stored doubled
        undirected: false,
    };
    let schema_path = dir.join("schema.json");
    fs::write(&schema_path, serde_json::to_string_pretty(&schema).expect("schema json") + "\n")
        .map_err(io_err(&schema_path))?;

    let mut nodes = String::new();
    for (v, &t) in g.node_type_of.iter().enumerate() {
        nodes.push_str(&format!("{v}\t{}\n", g.node_types[t]));
    }
    fs::write(dir.join("nodes.tsv"), nodes).map_err(io_err(dir.join("nodes.tsv")))?;

    let mut edges = String::new();
    for &(u, v, t) in &g.edges {
        edges.push_str(&format!("{u}\t{v}\t{}\n", g.edge_types[t]));
    }
    fs::write(dir.join("edges.tsv"), edges).map_err(io_err(dir.join("edges.tsv")))?;

    let local = g.type_local_index();
    for (&t, m) in &g.features {
        let name = &g.node_types[t];
        let mut out = String::new();
        for (v, local_idx) in local.iter().enumerate() {
            if g.node_type_of[v] == t {
                out.push_str(&v.to_string());
                for &x in m.row(*local_idx) {
                    out.push_str(&format!("\t{x}"));
                }
                out.push('\n');
            }
        }
        let path = dir.join(format!("features_{name}.tsv"));
        fs::write(&path, out).map_err(io_err(&path))?;
    }

    let mut labels = String::new();
    for &(id, class) in &domain.labels {
        labels.push_str(&format!("{id}\tc{class}\n"));
    }
    fs::write(dir.join("labels.tsv"), labels).map_err(io_err(dir.join("labels.tsv")))?;
    Ok(())
}

/// Path helper: the labels file that `write_synth_domain` emits.
pub fn labels_path(dir: &Path) -> PathBuf {
    dir.join("labels.tsv")
}
