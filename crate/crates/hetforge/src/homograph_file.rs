//! Versioned JSON for transformed homogeneous graphs.
//!
//! `{"version":1,"node_ids":[...],"d":N,"X_V":[[...]],"edges":[[u,v]],
//! "X_E":[[...]]}` with floats rendered as shortest round-trippable
//! decimals, so serialize/deserialize round-trips bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use hetforge_core::graph::HomoGraph;
use hetforge_core::tensor::Tensor;

use crate::error::{io_err, HetforgeError, Result};

pub const HOMOGRAPH_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HomoGraphFile {
    version: u32,
    node_ids: Vec<u64>,
    d: usize,
    #[serde(rename = "X_V")]
    x_v: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    #[serde(rename = "X_E")]
    x_e: Vec<Vec<f64>>,
}

fn tensor_rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

pub fn serialize_homo(g: &HomoGraph, path: &Path) -> Result<()> {
    let file = HomoGraphFile {
        version: HOMOGRAPH_VERSION,
        node_ids: g.node_ids.clone(),
        d: g.dim(),
        x_v: tensor_rows(&g.x_v),
        edges: g.edges.clone(),
        x_e: tensor_rows(&g.x_e),
    };
    let json = serde_json::to_string(&file).expect("homograph serializes");
    fs::write(path, json + "\n").map_err(io_err(path))
}

pub fn deserialize_homo(path: &Path) -> Result<HomoGraph> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: HomoGraphFile = serde_json::from_str(&text).map_err(|e| HetforgeError::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.version != HOMOGRAPH_VERSION {
        return Err(HetforgeError::Version {
            path: path.to_path_buf(),
            found: file.version,
            expected: HOMOGRAPH_VERSION,
        });
    }
    let n = file.node_ids.len();
    let rows_to_tensor = |rows: &[Vec<f64>], cols: usize, what: &str| -> Result<Tensor> {
        let mut t = Tensor::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(HetforgeError::Format {
                    path: path.to_path_buf(),
                    msg: format!("{what} row {r} has {} entries, expected {cols}", row.len()),
                });
            }
            t.row_mut(r).copy_from_slice(row);
        }
        Ok(t)
    };
    if file.x_v.len() != n {
        return Err(HetforgeError::Format {
            path: path.to_path_buf(),
            msg: format!("X_V has {} rows for {n} node ids", file.x_v.len()),
        });
    }
    let x_v = rows_to_tensor(&file.x_v, file.d, "X_V")?;
    let x_e = rows_to_tensor(&file.x_e, file.d, "X_E")?;
    HomoGraph::new(file.node_ids, x_v, file.edges, x_e).map_err(Into::into)
}
