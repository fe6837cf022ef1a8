//! Multi-seed benchmark: FP baseline against the full imputation pipeline in
//! transductive, inductive, structural-missing and link-prediction settings,
//! plus the reconstruction × co-label-linking ablation grid.

use std::fmt::Write as _;

use graphimpute::eval::{
    distribution_shift, holdout_link_split, link_pred_eval, linear_probe, linear_probe_split, mad,
    two_step_infer, Inference,
};
use graphimpute::ndarray::{Array2, ArrayView2};
use graphimpute::rng::{derive, stream};
use graphimpute::synth::{generate_sbm, inductive_split};
use graphimpute::{Dataset, Error, FeatureTable, LabelSet, SparseGraph, TrainOutcome};
use serde::Serialize;

use crate::config::RunConfig;

/// A failed pipeline stage.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

type StageResult<T> = std::result::Result<T, StageError>;

fn at<T>(stage: impl Into<String>, r: graphimpute::Result<T>) -> StageResult<T> {
    r.map_err(|error| StageError {
        stage: stage.into(),
        error,
    })
}

/// Accuracies of the four reconstruction × linking variants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AblationCells {
    pub full: f64,
    pub no_rec: f64,
    pub no_cll: f64,
    pub no_rec_no_cll: f64,
}

impl AblationCells {
    fn pick(&self, rec: bool, cll: bool) -> f64 {
        match (rec, cll) {
            (true, true) => self.full,
            (false, true) => self.no_rec,
            (true, false) => self.no_cll,
            (false, false) => self.no_rec_no_cll,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRun {
    pub accuracy_fp: f64,
    pub accuracy_ddfi: f64,
    pub mad_fp: f64,
    pub mad_ddfi: f64,
    /// Only measured in inductive mode.
    pub delta_fp: Option<f64>,
    pub delta_ddfi: Option<f64>,
    pub ablation: AblationCells,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkRun {
    pub auc_fp: f64,
    pub auc_ddfi: f64,
    pub ap_fp: f64,
    pub ap_ddfi: f64,
}

/// Loss summary of one training run.
#[derive(Debug, Clone, Serialize)]
pub struct LossCheck {
    pub run: String,
    pub seed: u64,
    pub first10: f64,
    pub last10: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub homophily: f64,
    pub transductive: Option<ModeRun>,
    pub inductive: Option<ModeRun>,
    pub structural: Option<ModeRun>,
    pub link: Option<LinkRun>,
    pub training: Vec<LossCheck>,
}

/// Mean with sample standard deviation and standard error over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (std, stderr) = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (Some(var.sqrt()), Some((var / n).sqrt()))
        } else {
            (None, None)
        };
        Summary {
            mean,
            std,
            stderr,
            values,
        }
    }

    fn display(&self) -> String {
        match self.std {
            Some(s) => format!("{:.4} ± {:.4}", self.mean, s),
            None => format!("{:.4}", self.mean),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub version: String,
    #[serde(rename = "config-hash")]
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub summary: Vec<(String, Summary)>,
    pub runs: Vec<SeedRun>,
    pub assertions: Vec<Assertion>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn metric(&self, name: &str) -> Option<&Summary> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, s)| s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config-hash {}", self.config_hash);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds {}", seeds.join(","));
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<40} {}", "metric", "mean ± std");
        for (name, m) in &self.summary {
            let _ = writeln!(s, "{name:<40} {}", m.display());
        }
        if !self.assertions.is_empty() {
            let _ = writeln!(s);
            for a in &self.assertions {
                let tag = if a.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "[{tag}] {}: {}", a.name, a.detail);
            }
        }
        s
    }
}

fn loss_check(run: &str, seed: u64, outcome: &TrainOutcome) -> LossCheck {
    let l = &outcome.losses;
    let w = l.len().min(10);
    let mean = |s: &[f64]| if s.is_empty() { f64::NAN } else { s.iter().sum::<f64>() / s.len() as f64 };
    LossCheck {
        run: run.to_string(),
        seed,
        first10: mean(&l[..w]),
        last10: mean(&l[l.len() - w..]),
    }
}

struct Trained {
    with_cll: TrainOutcome,
    without_cll: TrainOutcome,
}

fn train_pair(
    cfg: &RunConfig,
    seed: u64,
    name: &str,
    g: &SparseGraph,
    x: &FeatureTable,
    labels: &LabelSet,
    training: &mut Vec<LossCheck>,
) -> StageResult<Trained> {
    let tc = cfg.train_config(derive(seed, stream::TRAIN));
    let plan = cfg.linking(derive(seed, stream::CLL));
    let fp = cfg.fp();
    let with_cll = at(
        format!("{name} training"),
        graphimpute::mae::train(g, x, labels, Some(&plan), &fp, &tc),
    )?;
    let without_cll = at(
        format!("{name} training without linking"),
        graphimpute::mae::train(g, x, labels, None, &fp, &tc),
    )?;
    training.push(loss_check(name, seed, &with_cll));
    training.push(loss_check(&format!("{name}-no-cll"), seed, &without_cll));
    Ok(Trained {
        with_cll,
        without_cll,
    })
}

fn infer(
    stage: &str,
    outcome: &TrainOutcome,
    g: &SparseGraph,
    x: &FeatureTable,
    cfg: &RunConfig,
) -> StageResult<Inference> {
    at(stage, two_step_infer(&outcome.params, g, x, &cfg.fp()))
}

fn probe(stage: &str, z: &ArrayView2<f64>, labels: &LabelSet, cfg: &RunConfig) -> StageResult<f64> {
    at(stage, linear_probe(z, labels, &cfg.probe()))
}

fn transductive(
    cfg: &RunConfig,
    seed: u64,
    name: &str,
    d: &Dataset,
    x: &FeatureTable,
    training: &mut Vec<LossCheck>,
) -> StageResult<ModeRun> {
    let t = train_pair(cfg, seed, name, &d.graph, x, &d.labels, training)?;
    let stage = format!("{name} inference");
    let full = infer(&stage, &t.with_cll, &d.graph, x, cfg)?;
    let no_cll = infer(&stage, &t.without_cll, &d.graph, x, cfg)?;
    let stage = format!("{name} probe");
    let ablation = AblationCells {
        full: probe(&stage, &full.embedding.matrix.view(), &d.labels, cfg)?,
        no_rec: probe(&stage, &full.one_step.matrix.view(), &d.labels, cfg)?,
        no_cll: probe(&stage, &no_cll.embedding.matrix.view(), &d.labels, cfg)?,
        no_rec_no_cll: probe(&stage, &no_cll.one_step.matrix.view(), &d.labels, cfg)?,
    };
    let headline = if cfg.cll { &full } else { &no_cll };
    let z = if cfg.rec {
        &headline.embedding.matrix
    } else {
        &headline.one_step.matrix
    };
    let stage = format!("{name} mad");
    Ok(ModeRun {
        accuracy_fp: probe(&format!("{name} probe"), &full.propagated.view(), &d.labels, cfg)?,
        accuracy_ddfi: ablation.pick(cfg.rec, cfg.cll),
        mad_fp: at(&stage, mad(&full.propagated.view()))?,
        mad_ddfi: at(&stage, mad(&z.view()))?,
        delta_fp: None,
        delta_ddfi: None,
        ablation,
    })
}

fn inductive(
    cfg: &RunConfig,
    seed: u64,
    d: &Dataset,
    x: &FeatureTable,
    training: &mut Vec<LossCheck>,
) -> StageResult<ModeRun> {
    let name = "inductive";
    // Test nodes stay in the training graph as isolated nodes.
    let (train_graph, full_graph) = inductive_split(&d.graph, &d.labels);
    let t = train_pair(cfg, seed, name, &train_graph, x, &d.labels, training)?;
    let stage = "inductive inference";
    let runs = [&t.with_cll, &t.without_cll]
        .into_iter()
        .map(|o| Ok((infer(stage, o, &train_graph, x, cfg)?, infer(stage, o, &full_graph, x, cfg)?)))
        .collect::<StageResult<Vec<_>>>()?;
    let (train_fp, full_fp) = &runs[0];

    let stage = "inductive probe";
    let split_probe = |fit: &Array2<f64>, eval: &Array2<f64>| {
        at(stage, linear_probe_split(&fit.view(), &eval.view(), &d.labels, &cfg.probe()))
    };
    let cell = |i: usize, rec: bool| {
        let (tr, full) = &runs[i];
        if rec {
            split_probe(&tr.embedding.matrix, &full.embedding.matrix)
        } else {
            split_probe(&tr.one_step.matrix, &full.one_step.matrix)
        }
    };
    let ablation = AblationCells {
        full: cell(0, true)?,
        no_rec: cell(0, false)?,
        no_cll: cell(1, true)?,
        no_rec_no_cll: cell(1, false)?,
    };
    let (head_tr, head_full) = &runs[if cfg.cll { 0 } else { 1 }];
    let z = if cfg.rec {
        &head_full.embedding.matrix
    } else {
        &head_full.one_step.matrix
    };

    let stage = "inductive shift";
    let delta_fp = at(
        stage,
        distribution_shift(&train_fp.propagated.view(), &full_fp.propagated.view(), cfg.bins),
    )?;
    let delta_ddfi = at(
        stage,
        distribution_shift(&head_tr.reconstructed.view(), &head_full.reconstructed.view(), cfg.bins),
    )?;
    Ok(ModeRun {
        accuracy_fp: split_probe(&train_fp.propagated, &full_fp.propagated)?,
        accuracy_ddfi: ablation.pick(cfg.rec, cfg.cll),
        mad_fp: at("inductive mad", mad(&full_fp.propagated.view()))?,
        mad_ddfi: at("inductive mad", mad(&z.view()))?,
        delta_fp: Some(delta_fp.delta),
        delta_ddfi: Some(delta_ddfi.delta),
        ablation,
    })
}

fn link(
    cfg: &RunConfig,
    seed: u64,
    d: &Dataset,
    x: &FeatureTable,
    training: &mut Vec<LossCheck>,
) -> StageResult<LinkRun> {
    let split = at(
        "link split",
        holdout_link_split(
            &d.graph,
            cfg.link_val_frac,
            cfg.link_test_frac,
            derive(seed, stream::LINK_SPLIT),
        ),
    )?;
    let tc = cfg.train_config(derive(seed, stream::TRAIN));
    let plan = cfg.linking(derive(seed, stream::CLL));
    let outcome = at(
        "link training",
        graphimpute::mae::train(
            &split.train_graph,
            x,
            &d.labels,
            cfg.cll.then_some(&plan),
            &cfg.fp(),
            &tc,
        ),
    )?;
    training.push(loss_check("link", seed, &outcome));
    let inf = infer("link inference", &outcome, &split.train_graph, x, cfg)?;
    let z = if cfg.rec {
        &inf.embedding.matrix
    } else {
        &inf.one_step.matrix
    };
    let stage = "link evaluation";
    let fp = at(stage, link_pred_eval(&inf.propagated.view(), &split.test_pos, &split.test_neg))?;
    let ddfi = at(stage, link_pred_eval(&z.view(), &split.test_pos, &split.test_neg))?;
    Ok(LinkRun {
        auc_fp: fp.auc,
        auc_ddfi: ddfi.auc,
        ap_fp: fp.ap,
        ap_ddfi: ddfi.ap,
    })
}

/// Every experiment for one seed.
pub fn run_seed(cfg: &RunConfig, seed: u64) -> StageResult<SeedRun> {
    let d = at("synthetic data", generate_sbm(&cfg.data_spec(seed)))?;
    let missing_seed = derive(seed, stream::MISSING);
    let x = at("uniform masking", d.features.mask_uniform(cfg.missing_rate, missing_seed))?;
    let mut training = Vec::new();
    let mut run = SeedRun {
        seed,
        homophily: graphimpute::homophily_index(&d.graph, &d.labels),
        transductive: None,
        inductive: None,
        structural: None,
        link: None,
        training: Vec::new(),
    };
    if cfg.mode.transductive() {
        log::info!("seed {seed}: transductive");
        run.transductive = Some(transductive(cfg, seed, "transductive", &d, &x, &mut training)?);
        log::info!("seed {seed}: structural");
        let xs = at(
            "structural masking",
            d.features.mask_structural(cfg.missing_rate, missing_seed),
        )?;
        run.structural = Some(transductive(cfg, seed, "structural", &d, &xs, &mut training)?);
        log::info!("seed {seed}: link prediction");
        run.link = Some(link(cfg, seed, &d, &x, &mut training)?);
    }
    if cfg.mode.inductive() {
        log::info!("seed {seed}: inductive");
        run.inductive = Some(inductive(cfg, seed, &d, &x, &mut training)?);
    }
    run.training = training;
    Ok(run)
}

fn summarize(runs: &[SeedRun]) -> Vec<(String, Summary)> {
    let mut out = Vec::new();
    let mut push = |name: String, values: Vec<f64>| {
        if !values.is_empty() {
            out.push((name, Summary::of(values)));
        }
    };
    push("homophily".into(), runs.iter().map(|r| r.homophily).collect());
    type Getter = fn(&SeedRun) -> Option<&ModeRun>;
    let modes: [(&str, Getter); 3] = [
        ("transductive", |r| r.transductive.as_ref()),
        ("inductive", |r| r.inductive.as_ref()),
        ("structural", |r| r.structural.as_ref()),
    ];
    for (mode, get) in modes {
        let rows: Vec<&ModeRun> = runs.iter().filter_map(get).collect();
        let field = |f: fn(&ModeRun) -> f64| rows.iter().map(|m| f(m)).collect::<Vec<_>>();
        push(format!("{mode}.accuracy_fp"), field(|m| m.accuracy_fp));
        push(format!("{mode}.accuracy_ddfi"), field(|m| m.accuracy_ddfi));
        push(format!("{mode}.mad_fp"), field(|m| m.mad_fp));
        push(format!("{mode}.mad_ddfi"), field(|m| m.mad_ddfi));
        push(format!("{mode}.delta_fp"), rows.iter().filter_map(|m| m.delta_fp).collect());
        push(format!("{mode}.delta_ddfi"), rows.iter().filter_map(|m| m.delta_ddfi).collect());
        push(format!("{mode}.ablation.full"), field(|m| m.ablation.full));
        push(format!("{mode}.ablation.no_rec"), field(|m| m.ablation.no_rec));
        push(format!("{mode}.ablation.no_cll"), field(|m| m.ablation.no_cll));
        push(format!("{mode}.ablation.no_rec_no_cll"), field(|m| m.ablation.no_rec_no_cll));
    }
    let links: Vec<&LinkRun> = runs.iter().filter_map(|r| r.link.as_ref()).collect();
    push("link.auc_fp".into(), links.iter().map(|l| l.auc_fp).collect());
    push("link.auc_ddfi".into(), links.iter().map(|l| l.auc_ddfi).collect());
    push("link.ap_fp".into(), links.iter().map(|l| l.ap_fp).collect());
    push("link.ap_ddfi".into(), links.iter().map(|l| l.ap_ddfi).collect());
    out
}

/// Seeds needed for a "most seeds" comparison: 4 of 5, rounded up in general.
pub fn majority(seeds: usize) -> usize {
    (4 * seeds).div_ceil(5)
}

/// AUC the full method must exceed on link prediction.
pub const LINK_AUC_FLOOR: f64 = 0.65;

fn assertions(runs: &[SeedRun], summary: &[(String, Summary)]) -> Vec<Assertion> {
    let get = |k: &str| summary.iter().find(|(n, _)| n == k).map(|(_, s)| s.mean);
    let mut out = Vec::new();

    let checks: Vec<&LossCheck> = runs.iter().flat_map(|r| &r.training).collect();
    if !checks.is_empty() {
        let bad: Vec<String> = checks
            .iter()
            .filter(|c| !(c.last10 < c.first10))
            .map(|c| format!("{}@{}", c.run, c.seed))
            .collect();
        out.push(Assertion {
            name: "training loss decreases".into(),
            passed: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("{} runs, last-10 mean below first-10 mean in all", checks.len())
            } else {
                format!("no decrease in {}", bad.join(", "))
            },
        });
    }

    let inductive: Vec<&ModeRun> = runs.iter().filter_map(|r| r.inductive.as_ref()).collect();
    if !inductive.is_empty() {
        let wins = inductive
            .iter()
            .filter(|m| m.delta_ddfi.unwrap_or(f64::NAN) < m.delta_fp.unwrap_or(f64::NAN))
            .count();
        let need = majority(inductive.len());
        out.push(Assertion {
            name: "inductive shift: reconstruction below FP".into(),
            passed: wins >= need,
            detail: format!("{wins}/{} seeds (need {need})", inductive.len()),
        });
        let (full, no_rec) = (
            get("inductive.ablation.full").unwrap_or(f64::NAN),
            get("inductive.ablation.no_rec").unwrap_or(f64::NAN),
        );
        out.push(Assertion {
            name: "inductive ablation: full method not below w/o reconstruction".into(),
            passed: full >= no_rec,
            detail: format!("{full:.4} vs {no_rec:.4}"),
        });
    }

    let trans: Vec<&ModeRun> = runs.iter().filter_map(|r| r.transductive.as_ref()).collect();
    if !trans.is_empty() {
        let wins = trans.iter().filter(|m| m.mad_ddfi > m.mad_fp).count();
        let need = majority(trans.len());
        out.push(Assertion {
            name: "MAD: embeddings above FP features".into(),
            passed: wins >= need,
            detail: format!("{wins}/{} seeds (need {need})", trans.len()),
        });
        for mode in ["transductive", "structural"] {
            let (ddfi, fp) = (
                get(&format!("{mode}.accuracy_ddfi")).unwrap_or(f64::NAN),
                get(&format!("{mode}.accuracy_fp")).unwrap_or(f64::NAN),
            );
            out.push(Assertion {
                name: format!("{mode} accuracy: embeddings not below FP"),
                passed: ddfi >= fp,
                detail: format!("{ddfi:.4} vs {fp:.4}"),
            });
        }
        let (auc, auc_fp) = (
            get("link.auc_ddfi").unwrap_or(f64::NAN),
            get("link.auc_fp").unwrap_or(f64::NAN),
        );
        out.push(Assertion {
            name: "link prediction: AUC above floor and FP".into(),
            passed: auc > LINK_AUC_FLOOR && auc >= auc_fp,
            detail: format!("{auc:.4} vs FP {auc_fp:.4} (floor {LINK_AUC_FLOOR})"),
        });
    }
    out
}

/// Run the benchmark over every configured seed, serially and in seed order.
pub fn run_bench(cfg: &RunConfig) -> StageResult<BenchReport> {
    at("config", cfg.validate())?;
    let seeds = cfg.seed_list();
    let runs = seeds
        .iter()
        .map(|&s| run_seed(cfg, s))
        .collect::<StageResult<Vec<_>>>()?;
    let summary = summarize(&runs);
    let assertions = if cfg.assertions {
        assertions(&runs, &summary)
    } else {
        Vec::new()
    };
    Ok(BenchReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seeds,
        summary,
        runs,
        assertions,
    })
}
