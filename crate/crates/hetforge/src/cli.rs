//! The `hetforge` command line.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use hetforge_core::adapt::{evaluate, finetune, softmax_weights, AdaptConfig, TaskKind};
use hetforge_core::encoder::PromptMask;
use hetforge_core::fewshot::sample_few_shot;
use hetforge_core::pretrain::{pretrain_multi, PretrainConfig};
use hetforge_core::rng::derive_idx;
use hetforge_core::synth::generate_synthetic;
use hetforge_core::transform::{transform, AlignConfig, MiningConfig, MiningMode, TransformConfig};

use crate::bundle::{load_hetero_graph, write_synth_domain};
use crate::experiment::{
    run_ablation, run_leave_one_out, AblationKind, ExperimentConfig, SynthSettings,
};
use crate::homograph_file::{deserialize_homo, serialize_homo};
use crate::model_file::{load_bundle, save_bundle};
use crate::report::{
    digest_str, ExperimentReport, PromptWeights, RunReport, TargetReport,
};

#[derive(Parser)]
#[command(
    name = "hetforge",
    about = "Heterogeneous graph homogenization, prompt-aware pre-training, and few-shot adaptation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Stochastic,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Node,
    Subgraph,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AblateArg {
    Source,
    Prompt,
    Flatten,
}

#[derive(Subcommand)]
pub enum Command {
    /// Transform a heterogeneous bundle into a homogeneous graph.
    Transform {
        /// Bundle directory (schema.json, nodes.tsv, edges.tsv, features_*.tsv).
        #[arg(long)]
        input: PathBuf,
        /// Target node type name (defaults to the bundle schema's target).
        #[arg(long)]
        target: Option<String>,
        /// Shared feature width after alignment.
        #[arg(long)]
        dim: usize,
        #[arg(long = "walk-len", default_value_t = 10)]
        walk_len: usize,
        #[arg(long, default_value_t = 4)]
        window: usize,
        /// Walks per target node.
        #[arg(long, default_value_t = 20)]
        walks: usize,
        #[arg(long, default_value_t = 4)]
        topk: usize,
        /// Max path instances per node pair.
        #[arg(long, default_value_t = 64)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Stochastic)]
        mode: ModeArg,
        /// Output homogeneous graph (a `<out>.patterns.json` sidecar lists
        /// the mined patterns).
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre-train a shared encoder across one or more transformed domains.
    Pretrain {
        /// Homogeneous graph files, one per source domain.
        #[arg(long, num_args = 1.., required = true)]
        domains: Vec<PathBuf>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long = "drop-p", default_value_t = 0.2)]
        drop_p: f64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long = "edge-hidden", default_value_t = 32)]
        edge_hidden: usize,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune prompts on a target domain and report few-shot metrics.
    Finetune {
        #[arg(long)]
        bundle: PathBuf,
        /// Target homogeneous graph file.
        #[arg(long)]
        target: PathBuf,
        /// Tab-separated node-id / class-name pairs.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = TaskArg::Node)]
        task: TaskArg,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        #[arg(long, default_value_t = 2)]
        hops: usize,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-3)]
        lr: f64,
        #[arg(long, default_value_t = 20)]
        patience: usize,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        /// Independent episodes (resampled split + fresh prompts each).
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic heterogeneous domains as bundle directories.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretty-print a report file.
    Eval {
        #[arg(long)]
        report: PathBuf,
        /// Emit the canonical JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Leave-one-out protocol over all domains in an experiment config.
    Loo {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for `loo_report.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Ablations: drop sources, disable prompt kinds, or flatten.
    Ablate {
        #[arg(long, value_enum)]
        kind: AblateArg,
        #[arg(long)]
        config: PathBuf,
        /// Output directory for per-variant reports.
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Transform { input, target, dim, walk_len, window, walks, topk, cap, seed, mode, out } => {
            let loaded = load_hetero_graph(&input)?;
            let target_type = match &target {
                Some(name) => loaded
                    .graph
                    .node_types
                    .iter()
                    .position(|t| t == name)
                    .with_context(|| format!("unknown target type {name:?}"))?,
                None => loaded.target_type,
            };
            let cfg = TransformConfig {
                align: AlignConfig::new(dim)?,
                mining: MiningConfig {
                    walk_length: walk_len,
                    window,
                    walks_per_node: walks,
                    top_k: topk,
                    seed,
                    mode: match mode {
                        ModeArg::Stochastic => MiningMode::Stochastic,
                        ModeArg::Exhaustive => MiningMode::Exhaustive,
                    },
                },
                instance_cap: cap,
            };
            let (mut homo, patterns) = transform(&loaded.graph, target_type, &cfg)?;
            // rewrite dense ids as the bundle's original ids
            for id in &mut homo.node_ids {
                *id = loaded.original_ids[*id as usize];
            }
            serialize_homo(&homo, &out)?;

            let rendered: Vec<serde_json::Value> = patterns
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "pattern": p.render(&loaded.graph.node_types),
                        "type_sequence": p.type_sequence,
                        "frequency": p.frequency,
                    })
                })
                .collect();
            let side = side_path(&out);
            std::fs::write(
                &side,
                serde_json::to_string_pretty(&rendered)? + "\n",
            )
            .with_context(|| format!("writing {}", side.display()))?;
            eprintln!(
                "transformed {} -> {} nodes, {} edges, {} patterns",
                input.display(),
                homo.n_nodes(),
                homo.n_edges(),
                patterns.len()
            );
            Ok(())
        }
        Command::Pretrain { domains, epochs, lr, drop_p, hidden, edge_hidden, layers, seed, out } => {
            let mut graphs = Vec::new();
            let mut names = Vec::new();
            for path in &domains {
                graphs.push(deserialize_homo(path)?);
                names.push(
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| path.display().to_string()),
                );
            }
            let cfg = PretrainConfig {
                edge_drop_p: drop_p,
                epochs,
                lr,
                seed,
                hidden,
                edge_hidden,
                n_layers: layers,
                mask: PromptMask::all(),
            };
            let start = Instant::now();
            let (bundle, traces) = pretrain_multi(&graphs, &names, &cfg)?;
            save_bundle(&bundle, &out)?;
            for (name, trace) in names.iter().zip(&traces) {
                eprintln!(
                    "{name}: loss {:.6} -> {:.6} over {} epochs",
                    trace.first().copied().unwrap_or(f64::NAN),
                    trace.last().copied().unwrap_or(f64::NAN),
                    trace.len()
                );
            }
            eprintln!("pre-trained {} domains in {:.1}s -> {}", names.len(), start.elapsed().as_secs_f64(), out.display());
            Ok(())
        }
        Command::Finetune {
            bundle, target, labels, task, shots, hops, epochs, lr, patience, tau, repeats, seed, out,
        } => {
            let bundle = load_bundle(&bundle)?;
            let homo = deserialize_homo(&target)?;
            let (label_pairs, class_names) = parse_homo_labels(&labels, &homo)?;
            let kind = match task {
                TaskArg::Node => TaskKind::Node,
                TaskArg::Subgraph => TaskKind::Subgraph,
            };
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let start = Instant::now();
            let mask = PromptMask::all();
            let mut runs = Vec::with_capacity(repeats);
            for i in 0..repeats {
                let episode_seed = derive_idx(seed, "repeat", i as u64);
                let few = sample_few_shot(
                    &label_pairs,
                    class_names.len(),
                    shots,
                    episode_seed,
                    kind,
                    hops,
                )?;
                let acfg = AdaptConfig { epochs, lr, patience, tau, seed: episode_seed, mask };
                let (state, trace) = finetune(&homo, &bundle, &few, &acfg)?;
                let (micro, macro_) = evaluate(&homo, &bundle, &state, &few, mask, &few.test)?;
                runs.push(RunReport {
                    seed: episode_seed,
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
            let digest = digest_str(&format!(
                "finetune shots={shots} task={} hops={hops} epochs={epochs} lr={lr} patience={patience} tau={tau} seed={seed} repeats={repeats}",
                match task { TaskArg::Node => "node", TaskArg::Subgraph => "subgraph" },
            ));
            let target_name = target
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut report =
                ExperimentReport::new(digest, vec![TargetReport::new(target_name, runs)]);
            report.wall_clock_secs = start.elapsed().as_secs_f64();
            report.save(&out)?;
            eprint!("{}", report.render_table());
            eprintln!("finished {repeats} episodes in {:.1}s -> {}", report.wall_clock_secs, out.display());
            Ok(())
        }
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let settings: SynthSettings = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", spec.display()))?;
            let domains = generate_synthetic(&settings.to_spec())?;
            for d in &domains {
                let dir = out.join(&d.name);
                write_synth_domain(d, &dir)?;
                eprintln!(
                    "{}: {} nodes, {} edges -> {}",
                    d.name,
                    d.graph.n_nodes(),
                    d.graph.n_edges(),
                    dir.display()
                );
            }
            Ok(())
        }
        Command::Eval { report, json } => {
            let report = ExperimentReport::load(&report)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render_table());
            }
            Ok(())
        }
        Command::Loo { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let report = run_leave_one_out(&cfg)?;
            let path = out.join("loo_report.json");
            report.save(&path)?;
            eprint!("{}", report.render_table());
            eprintln!("leave-one-out finished in {:.1}s -> {}", report.wall_clock_secs, path.display());
            Ok(())
        }
        Command::Ablate { kind, config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let kind = match kind {
                AblateArg::Source => AblationKind::Source,
                AblateArg::Prompt => AblationKind::Prompt,
                AblateArg::Flatten => AblationKind::Flatten,
            };
            let variants = run_ablation(kind, &cfg)?;
            for (name, report) in &variants {
                let path = out.join(format!("ablate_{name}.json"));
                report.save(&path)?;
                eprintln!("== {name} ({:.1}s) ==", report.wall_clock_secs);
                eprint!("{}", report.render_table());
                eprintln!("-> {}", path.display());
            }
            Ok(())
        }
    }
}

fn side_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".patterns.json");
    out.with_file_name(name)
}

/// Parse a labels.tsv against a homogeneous graph's original node ids.
pub fn parse_homo_labels(
    path: &Path,
    homo: &hetforge_core::HomoGraph,
) -> crate::Result<crate::bundle::LabeledNodes> {
    let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
    let mut raw = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id_raw = fields.next().unwrap_or("").trim();
        let id: u64 = id_raw.parse().map_err(|_| crate::HetforgeError::Parse {
            file: path.to_path_buf(),
            line: line_no + 1,
            msg: format!("bad node id {id_raw:?}"),
        })?;
        let local = homo.local_of(id).ok_or_else(|| crate::HetforgeError::Parse {
            file: path.to_path_buf(),
            line: line_no + 1,
            msg: format!("label for node id {id} absent from the target graph"),
        })?;
        let class = fields
            .next()
            .ok_or_else(|| crate::HetforgeError::Parse {
                file: path.to_path_buf(),
                line: line_no + 1,
                msg: "missing class field".into(),
            })?
            .trim()
            .to_string();
        names.push(class.clone());
        raw.push((local, class));
    }
    names.sort();
    names.dedup();
    let index: std::collections::BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels = raw.into_iter().map(|(id, c)| (id, index[c.as_str()])).collect();
    Ok((labels, names))
}
