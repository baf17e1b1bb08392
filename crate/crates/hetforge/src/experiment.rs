//! Experiment orchestration: the leave-one-out protocol and its ablations.
//!
//! One config document drives everything. All randomness flows from the
//! config's top-level seed through named sub-streams (per-domain mining,
//! per-target pre-training) plus the explicit episode seed list, so two runs
//! of the same config produce byte-identical reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use hetforge_core::adapt::{evaluate, finetune, softmax_weights, AdaptConfig, TaskKind};
use hetforge_core::encoder::{PromptKind, PromptMask};
use hetforge_core::fewshot::sample_few_shot;
use hetforge_core::graph::{HeteroGraph, HomoGraph};
use hetforge_core::pretrain::{pretrain_multi, PretrainConfig, PretrainedBundle};
use hetforge_core::rng::derive_idx;
use hetforge_core::synth::{SynthDomainSpec, SynthSpec};
use hetforge_core::transform::{
    flatten_baseline, transform, AlignConfig, MiningConfig, MiningMode, TransformConfig,
};

use crate::bundle::{load_hetero_graph, load_labels};
use crate::error::{HetforgeError, Result};
use crate::report::{digest_str, ExperimentReport, PromptWeights, RunReport, TargetReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiningSettings {
    pub walk_length: usize,
    pub window: usize,
    pub walks_per_node: usize,
    pub top_k: usize,
    pub mode: MiningModeSetting,
    pub instance_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiningModeSetting {
    Stochastic,
    Exhaustive,
}

impl From<MiningModeSetting> for MiningMode {
    fn from(m: MiningModeSetting) -> MiningMode {
        match m {
            MiningModeSetting::Stochastic => MiningMode::Stochastic,
            MiningModeSetting::Exhaustive => MiningMode::Exhaustive,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainSettings {
    pub edge_drop_p: f64,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub edge_hidden: usize,
    pub n_layers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptSettings {
    pub epochs: usize,
    pub lr: f64,
    pub patience: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSettings {
    pub kind: TaskKindSetting,
    pub shots: usize,
    pub hop_radius: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKindSetting {
    Node,
    Subgraph,
}

impl From<TaskKindSetting> for TaskKind {
    fn from(k: TaskKindSetting) -> TaskKind {
        match k {
            TaskKindSetting::Node => TaskKind::Node,
            TaskKindSetting::Subgraph => TaskKind::Subgraph,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaskSettings {
    pub fea: bool,
    pub edge: bool,
    pub structure: bool,
}

impl Default for MaskSettings {
    fn default() -> Self {
        MaskSettings { fea: true, edge: true, structure: true }
    }
}

impl From<MaskSettings> for PromptMask {
    fn from(m: MaskSettings) -> PromptMask {
        PromptMask { fea: m.fea, edge: m.edge, structure: m.structure }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthDomainSettings {
    pub name: String,
    pub nodes_per_type: Vec<usize>,
    pub feature_dims: Vec<usize>,
    /// `[src type, dst type, edges per src node]`
    pub edge_schema: Vec<(usize, usize, usize)>,
    pub n_classes: usize,
    pub signal: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSettings {
    pub seed: u64,
    pub domains: Vec<SynthDomainSettings>,
}

impl SynthSettings {
    pub fn to_spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            domains: self
                .domains
                .iter()
                .map(|d| SynthDomainSpec {
                    name: d.name.clone(),
                    nodes_per_type: d.nodes_per_type.clone(),
                    feature_dims: d.feature_dims.clone(),
                    edge_schema: d.edge_schema.clone(),
                    n_classes: d.n_classes,
                    signal: d.signal,
                })
                .collect(),
        }
    }
}

/// One experiment document: domains (synthetic or on-disk), the shared
/// alignment width, and per-phase settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Episode seeds: one fine-tuning repeat per entry per target.
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datasets: Option<Vec<PathBuf>>,
    pub align_dim: usize,
    pub mining: MiningSettings,
    pub pretrain: PretrainSettings,
    pub adapt: AdaptSettings,
    pub task: TaskSettings,
    /// Skip pre-training and fine-tune a randomly initialized bundle.
    #[serde(default)]
    pub no_pretrain: bool,
    /// Prompt kinds in play (ablations disable one at a time).
    #[serde(default)]
    pub mask: MaskSettings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(crate::error::io_err(path))?;
        serde_json::from_str(&text).map_err(|e| HetforgeError::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Canonical fingerprint (independent of the user's JSON formatting).
    pub fn digest(&self) -> String {
        digest_str(&serde_json::to_string(self).expect("config serializes"))
    }
}

/// A resolved domain: typed graph plus target labels in dense node ids.
pub struct DomainData {
    pub name: String,
    pub graph: HeteroGraph,
    pub target_type: usize,
    pub labels: Vec<(usize, usize)>,
    pub n_classes: usize,
}

/// Materialize the config's domains (generate synthetic ones or load
/// bundles from disk).
pub fn load_domains(cfg: &ExperimentConfig) -> Result<Vec<DomainData>> {
    match (&cfg.synth, &cfg.datasets) {
        (Some(synth), None) => {
            let domains = hetforge_core::synth::generate_synthetic(&synth.to_spec())?;
            Ok(domains
                .into_iter()
                .map(|d| {
                    let n_classes = d.labels.iter().map(|&(_, c)| c + 1).max().unwrap_or(0);
                    DomainData {
                        name: d.name,
                        graph: d.graph,
                        target_type: d.target_type,
                        labels: d.labels,
                        n_classes,
                    }
                })
                .collect())
        }
        (None, Some(dirs)) => dirs
            .iter()
            .map(|dir| {
                let loaded = load_hetero_graph(dir)?;
                let (labels, class_names) = load_labels(&dir.join("labels.tsv"), &loaded)?;
                let name = dir
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| dir.display().to_string());
                Ok(DomainData {
                    name,
                    graph: loaded.graph,
                    target_type: loaded.target_type,
                    labels,
                    n_classes: class_names.len(),
                })
            })
            .collect(),
        (Some(_), Some(_)) => {
            Err(HetforgeError::Config("config must set either synth or datasets, not both".into()))
        }
        (None, None) => Err(HetforgeError::Config("config needs synth or datasets".into())),
    }
}

fn transform_config(cfg: &ExperimentConfig, domain_index: usize) -> Result<TransformConfig> {
    Ok(TransformConfig {
        align: AlignConfig::new(cfg.align_dim)?,
        mining: MiningConfig {
            walk_length: cfg.mining.walk_length,
            window: cfg.mining.window,
            walks_per_node: cfg.mining.walks_per_node,
            top_k: cfg.mining.top_k,
            seed: derive_idx(cfg.seed, "mining", domain_index as u64),
            mode: cfg.mining.mode.into(),
        },
        instance_cap: cfg.mining.instance_cap,
    })
}

/// Transform every domain onto its target type (or flatten, for the
/// ablation baseline) at the shared alignment width.
pub fn transform_domains(
    domains: &[DomainData],
    cfg: &ExperimentConfig,
    flatten: bool,
) -> Result<Vec<HomoGraph>> {
    domains
        .iter()
        .enumerate()
        .map(|(k, d)| {
            if flatten {
                flatten_baseline(&d.graph, cfg.align_dim).map_err(Into::into)
            } else {
                let tcfg = transform_config(cfg, k)?;
                transform(&d.graph, d.target_type, &tcfg).map(|(g, _)| g).map_err(Into::into)
            }
        })
        .collect()
}

fn pretrain_config(cfg: &ExperimentConfig, target_index: usize, mask: PromptMask) -> PretrainConfig {
    PretrainConfig {
        edge_drop_p: cfg.pretrain.edge_drop_p,
        epochs: cfg.pretrain.epochs,
        lr: cfg.pretrain.lr,
        seed: derive_idx(cfg.seed, "pretrain", target_index as u64),
        hidden: cfg.pretrain.hidden,
        edge_hidden: cfg.pretrain.edge_hidden,
        n_layers: cfg.pretrain.n_layers,
        mask,
    }
}

fn labels_to_local(homo: &HomoGraph, labels: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    labels
        .iter()
        .map(|&(dense, class)| {
            homo.local_of(dense as u64)
                .map(|local| (local, class))
                .ok_or_else(|| {
                    HetforgeError::Config(format!("labeled node {dense} missing from target graph"))
                })
        })
        .collect()
}

/// Run the full protocol for one target: pre-train on the other domains,
/// then fine-tune and evaluate one episode per seed.
#[allow(clippy::too_many_arguments)]
fn run_target(
    cfg: &ExperimentConfig,
    domains: &[DomainData],
    homos: &[HomoGraph],
    target: usize,
    mask: PromptMask,
    excluded_source: Option<usize>,
    no_pretrain: bool,
) -> Result<TargetReport> {
    let mut source_graphs = Vec::new();
    let mut source_names = Vec::new();
    for (k, homo) in homos.iter().enumerate() {
        if k == target || Some(k) == excluded_source {
            continue;
        }
        source_graphs.push(homo.clone());
        source_names.push(domains[k].name.clone());
    }
    if source_graphs.is_empty() {
        return Err(HetforgeError::Config(format!(
            "target {} has no source domains left",
            domains[target].name
        )));
    }

    let pcfg = pretrain_config(cfg, target, mask);
    let bundle = if no_pretrain {
        PretrainedBundle::untrained(cfg.align_dim, cfg.align_dim, &source_names, &pcfg)
    } else {
        pretrain_multi(&source_graphs, &source_names, &pcfg)?.0
    };

    let homo_t = &homos[target];
    let data = &domains[target];
    let local_labels = labels_to_local(homo_t, &data.labels)?;

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let task = sample_few_shot(
            &local_labels,
            data.n_classes,
            cfg.task.shots,
            seed,
            cfg.task.kind.into(),
            cfg.task.hop_radius,
        )?;
        let acfg = AdaptConfig {
            epochs: cfg.adapt.epochs,
            lr: cfg.adapt.lr,
            patience: cfg.adapt.patience,
            tau: cfg.adapt.tau,
            seed,
            mask,
        };
        let (state, trace) = finetune(homo_t, &bundle, &task, &acfg)?;
        let (micro, macro_) = evaluate(homo_t, &bundle, &state, &task, mask, &task.test)?;
        runs.push(RunReport {
            seed,
            micro_f1: micro,
            macro_f1: macro_,
            best_epoch: trace.best_epoch,
            weights: PromptWeights {
                fea: softmax_weights(&state.lambda_fea),
                edge: softmax_weights(&state.lambda_edge),
                structure: softmax_weights(&state.lambda_str),
            },
        });
    }
    Ok(TargetReport::new(data.name.clone(), runs))
}

fn loo_over(
    cfg: &ExperimentConfig,
    domains: &[DomainData],
    homos: &[HomoGraph],
    mask: PromptMask,
    excluded_source: Option<usize>,
    digest: String,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut targets = Vec::with_capacity(domains.len());
    for t in 0..domains.len() {
        targets.push(run_target(cfg, domains, homos, t, mask, excluded_source, cfg.no_pretrain)?);
    }
    let mut report = ExperimentReport::new(digest, targets);
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// The leave-one-out protocol: every domain takes a turn as the target while
/// the rest pre-train the shared backbone.
pub fn run_leave_one_out(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if let Some(synth) = &cfg.synth {
        if synth.domains.len() < 2 {
            return Err(HetforgeError::Config("leave-one-out needs at least 2 domains".into()));
        }
    }
    let domains = load_domains(cfg)?;
    if domains.len() < 2 {
        return Err(HetforgeError::Config("leave-one-out needs at least 2 domains".into()));
    }
    let homos = transform_domains(&domains, cfg, false)?;
    loo_over(cfg, &domains, &homos, cfg.mask.into(), None, cfg.digest())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationKind {
    /// Re-run with each source domain dropped in turn.
    Source,
    /// Disable one prompt kind at a time, in pre-training and adaptation.
    Prompt,
    /// Replace the semantic transformation with type-blind flattening.
    Flatten,
}

/// Run an ablation family; returns `(variant name, report)` pairs.
pub fn run_ablation(
    kind: AblationKind,
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, ExperimentReport)>> {
    let domains = load_domains(cfg)?;
    if domains.len() < 2 {
        return Err(HetforgeError::Config("ablations need at least 2 domains".into()));
    }
    let digest = cfg.digest();
    match kind {
        AblationKind::Source => {
            let homos = transform_domains(&domains, cfg, false)?;
            (0..domains.len())
                .map(|dropped| {
                    let report = loo_over(
                        cfg,
                        &domains,
                        &homos,
                        cfg.mask.into(),
                        Some(dropped),
                        digest.clone(),
                    )?;
                    Ok((format!("drop_{}", domains[dropped].name), report))
                })
                .collect()
        }
        AblationKind::Prompt => {
            let homos = transform_domains(&domains, cfg, false)?;
            [
                ("no_feature_prompt", PromptKind::Feature),
                ("no_edge_prompt", PromptKind::Edge),
                ("no_structure_prompt", PromptKind::Structure),
            ]
            .into_iter()
            .map(|(name, kind)| {
                let report = loo_over(
                    cfg,
                    &domains,
                    &homos,
                    PromptMask::without(kind),
                    None,
                    digest.clone(),
                )?;
                Ok((name.to_string(), report))
            })
            .collect()
        }
        AblationKind::Flatten => {
            let homos = transform_domains(&domains, cfg, true)?;
            let report = loo_over(cfg, &domains, &homos, cfg.mask.into(), None, digest)?;
            Ok(vec![("flatten".to_string(), report)])
        }
    }
}
