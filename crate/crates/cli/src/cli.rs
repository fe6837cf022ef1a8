//! Argument parsing and subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphimpute::cll::Similarity;
use graphimpute::eval::{distribution_shift, link_pred_eval, linear_probe, mad, two_step_infer};
use graphimpute::features::{read_matrix_csv, write_matrix_csv};
use graphimpute::graph::{count_components, load_graph, read_edge_list, write_edge_list};
use graphimpute::mae::{MaskMode, SimilarityInput};
use graphimpute::ndarray::Array2;
use graphimpute::rng::{derive, stream};
use graphimpute::{
    generate_sbm, homophily_index, propagate, Error, FeatureTable, LabelSet, NormalizedAdjacency,
    SparseGraph,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bench::run_bench;
use crate::checkpoint::Checkpoint;
use crate::config::{MissingMode, Mode, RunConfig};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_ASSERTION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "graphimpute", version, about = "Graph feature imputation toolkit")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a stochastic block model dataset.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Fill missing features by feature propagation.
    Impute {
        #[command(flatten)]
        inputs: GraphInputs,
        #[command(flatten)]
        common: Common,
    },
    /// Train the masked autoencoder and write a checkpoint.
    Train {
        #[command(flatten)]
        inputs: GraphInputs,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct features and export embeddings from a checkpoint.
    Infer {
        #[command(flatten)]
        inputs: GraphInputs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Export `Encoder(FP(X))` instead of the two-step embedding.
        #[arg(long)]
        one_step: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score embeddings and features; writes metrics.json.
    Eval {
        #[command(flatten)]
        eval: EvalInputs,
        #[command(flatten)]
        common: Common,
    },
    /// Run the multi-seed benchmark and its directional checks.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct GraphInputs {
    /// Edge list, one `src<TAB>dst` pair per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Feature CSV; `nan` or empty cells are missing.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalInputs {
    /// Embedding CSV to score.
    #[arg(long)]
    pub embedding: PathBuf,
    /// Labels for the linear probe.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// FP-imputed features, the baseline for MAD and accuracy.
    #[arg(long)]
    pub fp_features: Option<PathBuf>,
    /// Held-out positive edges for link prediction.
    #[arg(long, requires = "neg_edges")]
    pub pos_edges: Option<PathBuf>,
    #[arg(long, requires = "pos_edges")]
    pub neg_edges: Option<PathBuf>,
    /// FP features on the training graph and on the full graph.
    #[arg(long, num_args = 2, value_names = ["TRAIN", "FULL"])]
    pub delta_fp: Option<Vec<PathBuf>>,
    /// Reconstructed features on the training graph and on the full graph.
    #[arg(long, num_args = 2, value_names = ["TRAIN", "FULL"])]
    pub delta_ddfi: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimArg {
    One,
    Cosine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimInputArg {
    Raw,
    Fp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MaskModeArg {
    Bernoulli,
    Soft,
}

/// Output directory, config file and per-field overrides.
#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Flat JSON config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    #[arg(long)]
    pub class_mean_scale: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    #[arg(long)]
    pub missing_rate: Option<f64>,
    #[arg(long)]
    pub missing_mode: Option<MissingMode>,

    /// Feature propagation iteration cap.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Feature propagation early-stop tolerance (0 disables).
    #[arg(long)]
    pub tol: Option<f64>,

    /// Skip co-label linking.
    #[arg(long)]
    pub no_cll: bool,
    #[arg(long)]
    pub cll_k: Option<usize>,
    #[arg(long)]
    pub cll_tau: Option<f64>,
    #[arg(long)]
    pub cll_m: Option<usize>,
    #[arg(long)]
    pub cll_sim: Option<SimArg>,
    #[arg(long)]
    pub cll_sim_input: Option<SimInputArg>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// SCE exponent.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mask_rate: Option<f64>,
    #[arg(long)]
    pub drop_rate: Option<f64>,
    #[arg(long)]
    pub mask_mode: Option<MaskModeArg>,

    /// Histogram bins for the distribution shift.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub probe_iters: Option<usize>,
    #[arg(long)]
    pub probe_l2: Option<f64>,
    #[arg(long)]
    pub link_val_frac: Option<f64>,
    #[arg(long)]
    pub link_test_frac: Option<f64>,

    /// Master seed (first seed of a benchmark).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of benchmark seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Use one-step embeddings as the headline method.
    #[arg(long)]
    pub no_rec: bool,
    /// Report directional checks without failing on them.
    #[arg(long)]
    pub no_assert: bool,
}

macro_rules! override_fields {
    ($cfg:ident, $args:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field { $cfg.$target = v; })*
    };
}

impl Common {
    /// Config file (or defaults) with the flags applied, validated.
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| Failure::usage(e.to_string()))?,
            None => RunConfig::default(),
        };
        override_fields!(cfg, self,
            nodes => nodes, classes => classes, p_in => p_in, p_out => p_out,
            feature_dim => feature_dim, class_mean_scale => class_mean_scale,
            noise_sigma => noise_sigma, train_frac => train_frac, val_frac => val_frac,
            missing_rate => missing_rate, missing_mode => missing_mode,
            max_iters => fp_max_iters, tol => fp_tol,
            cll_k => cll_k, cll_tau => cll_tau,
            epochs => epochs, lr => learning_rate, weight_decay => weight_decay,
            hidden_dim => hidden_dim, latent_dim => latent_dim, gamma => sce_gamma,
            mask_rate => mask_rate, drop_rate => drop_rate,
            bins => bins, probe_iters => probe_iters, probe_l2 => probe_l2,
            link_val_frac => link_val_frac, link_test_frac => link_test_frac,
            seed => seed, seeds => seeds, mode => mode,
        );
        if self.cll_m.is_some() {
            cfg.cll_m = self.cll_m;
        }
        if let Some(s) = self.cll_sim {
            cfg.cll_sim = match s {
                SimArg::One => Similarity::ConstantOne,
                SimArg::Cosine => Similarity::Cosine,
            };
        }
        if let Some(s) = self.cll_sim_input {
            cfg.cll_sim_input = match s {
                SimInputArg::Raw => SimilarityInput::Raw,
                SimInputArg::Fp => SimilarityInput::Fp,
            };
        }
        if let Some(m) = self.mask_mode {
            cfg.mask_mode = match m {
                MaskModeArg::Bernoulli => MaskMode::Bernoulli,
                MaskModeArg::Soft => MaskMode::Soft,
            };
        }
        if self.no_cll {
            cfg.cll = false;
        }
        if self.no_rec {
            cfg.rec = false;
        }
        if self.no_assert {
            cfg.assertions = false;
        }
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn stage(stage: &str, e: Error) -> Self {
        let code = match e {
            Error::Numeric { .. } => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: format!("{stage}: {e}"),
        }
    }
}

trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, Failure>;
}

impl<T> StageExt<T> for graphimpute::Result<T> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::stage(stage, e))
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::stage("output", Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::stage("output", Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

/// Provenance record written next to every command's outputs.
#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    version: &'a str,
    #[serde(rename = "config-hash")]
    config_hash: String,
    seeds: Vec<u64>,
    inputs: Value,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

fn write_run_record(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    seeds: Vec<u64>,
    inputs: Value,
    outputs: &[&str],
) -> Result<(), Failure> {
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        seeds,
        inputs,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        config: cfg,
    };
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    write(&dir.join("run.json"), &json)
}

fn load_inputs(inputs: &GraphInputs) -> Result<(SparseGraph, FeatureTable), Failure> {
    let x = FeatureTable::read(&inputs.features).stage("load features")?;
    let g = load_graph(&inputs.graph, x.num_nodes()).stage("load graph")?;
    Ok((g, x))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn mask(cfg: &RunConfig, x: &FeatureTable, seed: u64) -> graphimpute::Result<FeatureTable> {
    let seed = derive(seed, stream::MISSING);
    match cfg.missing_mode {
        MissingMode::Uniform => x.mask_uniform(cfg.missing_rate, seed),
        MissingMode::Structural => x.mask_structural(cfg.missing_rate, seed),
    }
}

fn cmd_synth(common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let d = generate_sbm(&cfg.data_spec(cfg.seed)).stage("synthetic data")?;
    let masked = mask(&cfg, &d.features, cfg.seed).stage("masking")?;
    let dir = &common.out;
    create_dir(dir)?;
    write_edge_list(&dir.join("graph.tsv"), &d.graph).stage("output")?;
    d.features.save(&dir.join("features_full.csv")).stage("output")?;
    masked.save(&dir.join("features.csv")).stage("output")?;
    d.labels.save(&dir.join("labels.csv")).stage("output")?;
    write_run_record(
        dir,
        "synth",
        &cfg,
        vec![cfg.seed],
        json!({}),
        &["graph.tsv", "features_full.csv", "features.csv", "labels.csv"],
    )?;
    println!("nodes       {}", d.graph.num_nodes());
    println!("edges       {}", d.graph.num_edges());
    println!("components  {}", count_components(&d.graph));
    println!("homophily   {:.4}", homophily_index(&d.graph, &d.labels));
    println!("missing     {:.4}", masked.unknown_fraction());
    Ok(())
}

fn cmd_impute(inputs: &GraphInputs, common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let (g, x) = load_inputs(inputs)?;
    let imputed = propagate(&x, &NormalizedAdjacency::new(&g), &cfg.fp()).stage("propagation")?;
    let dir = &common.out;
    create_dir(dir)?;
    write_matrix_csv(&dir.join("imputed.csv"), &imputed.view(), "f").stage("output")?;
    write_run_record(
        dir,
        "impute",
        &cfg,
        vec![],
        json!({"graph": path_str(&inputs.graph), "features": path_str(&inputs.features)}),
        &["imputed.csv"],
    )?;
    println!(
        "imputed {} of {} entries",
        x.known().iter().filter(|&&k| !k).count(),
        x.known().len()
    );
    Ok(())
}

fn cmd_train(inputs: &GraphInputs, labels: &Path, common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let (g, x) = load_inputs(inputs)?;
    let labels_set = LabelSet::load(labels).stage("load labels")?;
    if labels_set.num_nodes() != g.num_nodes() {
        return Err(Failure::stage(
            "load labels",
            Error::Input(format!(
                "{} labels for {} nodes",
                labels_set.num_nodes(),
                g.num_nodes()
            )),
        ));
    }
    let plan = cfg.linking(derive(cfg.seed, stream::CLL));
    let outcome = graphimpute::mae::train(
        &g,
        &x,
        &labels_set,
        cfg.cll.then_some(&plan),
        &cfg.fp(),
        &cfg.train_config(derive(cfg.seed, stream::TRAIN)),
    )
    .stage("training")?;
    let dir = &common.out;
    create_dir(dir)?;
    Checkpoint::new(&outcome.params, &cfg)
        .save(&dir.join("checkpoint.json"))
        .stage("output")?;
    let mut trace = String::from("epoch,loss\n");
    for (i, l) in outcome.losses.iter().enumerate() {
        trace.push_str(&format!("{i},{l}\n"));
    }
    write(&dir.join("loss.csv"), &trace)?;
    write_run_record(
        dir,
        "train",
        &cfg,
        vec![cfg.seed],
        json!({
            "graph": path_str(&inputs.graph),
            "features": path_str(&inputs.features),
            "labels": path_str(labels),
        }),
        &["checkpoint.json", "loss.csv"],
    )?;
    if let Some(link) = &outcome.linking {
        println!("co-label links added  {}", link.added_edges);
    }
    if let (Some(first), Some(last)) = (outcome.losses.first(), outcome.losses.last()) {
        println!("loss                  {first:.6} -> {last:.6}");
    }
    Ok(())
}

fn cmd_infer(
    inputs: &GraphInputs,
    checkpoint: &Path,
    one_step: bool,
    common: &Common,
) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let ck = Checkpoint::load(checkpoint).stage("load checkpoint")?;
    let params = ck.params().stage("load checkpoint")?;
    let (g, x) = load_inputs(inputs)?;
    let inf = two_step_infer(&params, &g, &x, &cfg.fp()).stage("inference")?;
    let z = if one_step { &inf.one_step } else { &inf.embedding };
    let dir = &common.out;
    create_dir(dir)?;
    write_matrix_csv(&dir.join("reconstructed.csv"), &inf.reconstructed.view(), "f")
        .stage("output")?;
    write_matrix_csv(&dir.join("embedding.csv"), &z.matrix.view(), "z").stage("output")?;
    write_matrix_csv(&dir.join("propagated.csv"), &inf.propagated.view(), "f").stage("output")?;
    write_run_record(
        dir,
        "infer",
        &cfg,
        vec![],
        json!({
            "graph": path_str(&inputs.graph),
            "features": path_str(&inputs.features),
            "checkpoint": path_str(checkpoint),
            "embedding": z.provenance,
        }),
        &["reconstructed.csv", "embedding.csv", "propagated.csv"],
    )?;
    println!("embedding {} x {} ({})", z.num_nodes(), z.dim(), z.provenance);
    Ok(())
}

fn read_matrix(path: &Path) -> Result<Array2<f64>, Failure> {
    read_matrix_csv(path).stage("load matrix")
}

fn read_pairs(path: &Path) -> Result<Vec<(usize, usize)>, Failure> {
    read_edge_list(path).stage("load edges")
}

/// Metrics keyed as in `metrics.json`; absent inputs give `null`.
pub fn eval_metrics(eval: &EvalInputs, cfg: &RunConfig) -> Result<Value, Failure> {
    let z = read_matrix(&eval.embedding)?;
    let fp = eval.fp_features.as_deref().map(read_matrix).transpose()?;
    let labels = eval
        .labels
        .as_deref()
        .map(|p| LabelSet::load(p).stage("load labels"))
        .transpose()?;
    let mut accuracy = Value::Null;
    let mut accuracy_fp = Value::Null;
    if let Some(ls) = &labels {
        accuracy = json!(linear_probe(&z.view(), ls, &cfg.probe()).stage("probe")?);
        if let Some(f) = &fp {
            accuracy_fp = json!(linear_probe(&f.view(), ls, &cfg.probe()).stage("probe")?);
        }
    }
    let mad_ddfi = json!(mad(&z.view()).stage("mad")?);
    let mad_fp = match &fp {
        Some(f) => json!(mad(&f.view()).stage("mad")?),
        None => Value::Null,
    };
    let (mut auc, mut ap) = (Value::Null, Value::Null);
    if let (Some(p), Some(n)) = (&eval.pos_edges, &eval.neg_edges) {
        let s = link_pred_eval(&z.view(), &read_pairs(p)?, &read_pairs(n)?).stage("link evaluation")?;
        auc = json!(s.auc);
        ap = json!(s.ap);
    }
    let delta = |pair: &Option<Vec<PathBuf>>| -> Result<Value, Failure> {
        match pair.as_deref() {
            Some([train, full]) => {
                let r = distribution_shift(&read_matrix(train)?.view(), &read_matrix(full)?.view(), cfg.bins)
                    .stage("distribution shift")?;
                Ok(json!(r.delta))
            }
            _ => Ok(Value::Null),
        }
    };
    Ok(json!({
        "accuracy": accuracy,
        "accuracy_fp": accuracy_fp,
        "auc": auc,
        "ap": ap,
        "mad_fp": mad_fp,
        "mad_ddfi": mad_ddfi,
        "delta_fp": delta(&eval.delta_fp)?,
        "delta_ddfi": delta(&eval.delta_ddfi)?,
        "seeds": [cfg.seed],
        "config-hash": cfg.hash(),
    }))
}

fn cmd_eval(eval: &EvalInputs, common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let metrics = eval_metrics(eval, &cfg)?;
    let dir = &common.out;
    create_dir(dir)?;
    write(
        &dir.join("metrics.json"),
        &serde_json::to_string_pretty(&metrics).expect("metrics serialize"),
    )?;
    write_run_record(
        dir,
        "eval",
        &cfg,
        vec![cfg.seed],
        json!({"embedding": path_str(&eval.embedding)}),
        &["metrics.json"],
    )?;
    for key in ["accuracy", "accuracy_fp", "auc", "ap", "mad_fp", "mad_ddfi", "delta_fp", "delta_ddfi"] {
        match metrics[key].as_f64() {
            Some(v) => println!("{key:<12} {v:.4}"),
            None => println!("{key:<12} -"),
        }
    }
    Ok(())
}

fn cmd_bench(common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve()?;
    let report = run_bench(&cfg).map_err(|e| Failure::stage(&e.stage, e.error))?;
    let dir = &common.out;
    create_dir(dir)?;
    write(&dir.join("report.json"), &report.to_json())?;
    let text = report.to_text();
    write(&dir.join("report.txt"), &text)?;
    write_run_record(
        dir,
        "bench",
        &cfg,
        report.seeds.clone(),
        json!({}),
        &["report.json", "report.txt"],
    )?;
    print!("{text}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_ASSERTION,
            message: "directional checks failed".into(),
        })
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Synth { common } => cmd_synth(common),
        Command::Impute { inputs, common } => cmd_impute(inputs, common),
        Command::Train {
            inputs,
            labels,
            common,
        } => cmd_train(inputs, labels, common),
        Command::Infer {
            inputs,
            checkpoint,
            one_step,
            common,
        } => cmd_infer(inputs, checkpoint, *one_step, common),
        Command::Eval { eval, common } => cmd_eval(eval, common),
        Command::Bench { common } => cmd_bench(common),
    }
}
