//! Versioned JSON for pre-trained bundles: every parameter tensor stored as
//! shape plus row-major data.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use hetforge_core::encoder::{EncoderConfig, EncoderParams, PromptMask, TriPrompt};
use hetforge_core::pretrain::{PretrainConfig, PretrainedBundle};
use hetforge_core::tensor::Tensor;

use crate::error::{io_err, HetforgeError, Result};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorDto {
    shape: (usize, usize),
    data: Vec<f64>,
}

impl TensorDto {
    fn from(t: &Tensor) -> Self {
        TensorDto { shape: t.shape(), data: t.data().to_vec() }
    }
    fn build(self, path: &Path) -> Result<Tensor> {
        if self.data.len() != self.shape.0 * self.shape.1 {
            return Err(HetforgeError::Format {
                path: path.to_path_buf(),
                msg: format!(
                    "tensor data length {} does not match shape {}x{}",
                    self.data.len(),
                    self.shape.0,
                    self.shape.1
                ),
            });
        }
        Ok(Tensor::new(self.shape.0, self.shape.1, self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct MaskDto {
    fea: bool,
    edge: bool,
    structure: bool,
}

#[derive(Serialize, Deserialize)]
struct ConfigDto {
    edge_drop_p: f64,
    epochs: usize,
    lr: f64,
    seed: u64,
    hidden: usize,
    edge_hidden: usize,
    n_layers: usize,
    mask: MaskDto,
}

#[derive(Serialize, Deserialize)]
struct DimsDto {
    d: usize,
    f: usize,
    h: usize,
    h_e: usize,
    n_layers: usize,
}

#[derive(Serialize, Deserialize)]
struct ParamsDto {
    w_in: TensorDto,
    layers: Vec<TensorDto>,
    edge_w1: TensorDto,
    edge_b1: TensorDto,
    edge_w2: TensorDto,
    edge_b2: TensorDto,
    w_disc: TensorDto,
}

#[derive(Serialize, Deserialize)]
struct PromptDto {
    fea: TensorDto,
    edge: TensorDto,
    structure: Vec<TensorDto>,
}

#[derive(Serialize, Deserialize)]
struct BundleFile {
    version: u32,
    config: ConfigDto,
    dims: DimsDto,
    domains: Vec<String>,
    params: ParamsDto,
    prompts: Vec<PromptDto>,
}

pub fn save_bundle(bundle: &PretrainedBundle, path: &Path) -> Result<()> {
    let p = &bundle.params;
    let c = &bundle.config;
    let file = BundleFile {
        version: BUNDLE_VERSION,
        config: ConfigDto {
            edge_drop_p: c.edge_drop_p,
            epochs: c.epochs,
            lr: c.lr,
            seed: c.seed,
            hidden: c.hidden,
            edge_hidden: c.edge_hidden,
            n_layers: c.n_layers,
            mask: MaskDto { fea: c.mask.fea, edge: c.mask.edge, structure: c.mask.structure },
        },
        dims: DimsDto {
            d: p.config.d,
            f: p.config.f,
            h: p.config.h,
            h_e: p.config.h_e,
            n_layers: p.config.n_layers,
        },
        domains: bundle.domain_names.clone(),
        params: ParamsDto {
            w_in: TensorDto::from(&p.w_in),
            layers: p.layers.iter().map(TensorDto::from).collect(),
            edge_w1: TensorDto::from(&p.edge_w1),
            edge_b1: TensorDto::from(&p.edge_b1),
            edge_w2: TensorDto::from(&p.edge_w2),
            edge_b2: TensorDto::from(&p.edge_b2),
            w_disc: TensorDto::from(&p.w_disc),
        },
        prompts: bundle
            .prompts
            .iter()
            .map(|pr| PromptDto {
                fea: TensorDto::from(&pr.fea),
                edge: TensorDto::from(&pr.edge),
                structure: pr.structure.iter().map(TensorDto::from).collect(),
            })
            .collect(),
    };
    let json = serde_json::to_string(&file).expect("bundle serializes");
    fs::write(path, json + "\n").map_err(io_err(path))
}

pub fn load_bundle(path: &Path) -> Result<PretrainedBundle> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: BundleFile = serde_json::from_str(&text).map_err(|e| HetforgeError::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.version != BUNDLE_VERSION {
        return Err(HetforgeError::Version {
            path: path.to_path_buf(),
            found: file.version,
            expected: BUNDLE_VERSION,
        });
    }
    let dims = EncoderConfig {
        d: file.dims.d,
        f: file.dims.f,
        h: file.dims.h,
        h_e: file.dims.h_e,
        n_layers: file.dims.n_layers,
    };
    let params = EncoderParams {
        config: dims,
        w_in: file.params.w_in.build(path)?,
        layers: file
            .params
            .layers
            .into_iter()
            .map(|t| t.build(path))
            .collect::<Result<_>>()?,
        edge_w1: file.params.edge_w1.build(path)?,
        edge_b1: file.params.edge_b1.build(path)?,
        edge_w2: file.params.edge_w2.build(path)?,
        edge_b2: file.params.edge_b2.build(path)?,
        w_disc: file.params.w_disc.build(path)?,
    };
    let prompts = file
        .prompts
        .into_iter()
        .map(|p| {
            Ok(TriPrompt {
                fea: p.fea.build(path)?,
                edge: p.edge.build(path)?,
                structure: p.structure.into_iter().map(|t| t.build(path)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if prompts.len() != file.domains.len() {
        return Err(HetforgeError::Format {
            path: path.to_path_buf(),
            msg: format!("{} prompts for {} domains", prompts.len(), file.domains.len()),
        });
    }
    let config = PretrainConfig {
        edge_drop_p: file.config.edge_drop_p,
        epochs: file.config.epochs,
        lr: file.config.lr,
        seed: file.config.seed,
        hidden: file.config.hidden,
        edge_hidden: file.config.edge_hidden,
        n_layers: file.config.n_layers,
        mask: PromptMask {
            fea: file.config.mask.fea,
            edge: file.config.mask.edge,
            structure: file.config.mask.structure,
        },
    };
    Ok(PretrainedBundle { params, prompts, domain_names: file.domains, config })
}
