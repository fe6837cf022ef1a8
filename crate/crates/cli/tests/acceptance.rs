//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use graphimpute::cll::co_label_link;
use graphimpute::eval::roc_auc;
use graphimpute::graph::{count_components, homophily_index};
use graphimpute::mae::{gaussian_mask, sce_loss, train, AutoencoderParams, MaskMode};
use graphimpute::ndarray::{array, Array2};
use graphimpute::propagation::dirichlet_energy;
use graphimpute::rng::{derive, rng_from, stream};
use graphimpute::{
    generate_sbm, propagate, CllConfig, FeatureTable, FpConfig, NormalizedAdjacency, Similarity,
    SparseGraph, SyntheticSpec,
};
use graphimpute_cli::bench::majority;
use graphimpute_cli::config::Mode;
use graphimpute_cli::{run_bench, BenchReport, RunConfig};
use rand::Rng as _;

const SEEDS: usize = 5;
const MASK_TOL: f64 = 0.002;
const FP_ORACLE_TOL: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
const SCE_TOL: f64 = 1e-12;
const LINK_AUC_MARGIN: f64 = 0.15;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Runs a check and folds a runtime bound into its verdict.
fn timed(limit: Option<Duration>, check: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut out = check();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            out.passed = false;
            out.detail = format!("{}; runtime {took:.1?} over {limit:?}", out.detail);
        }
    }
    (out, took)
}

fn random_connected(n: usize, chords: usize, seed: u64) -> SparseGraph {
    let mut rng = rng_from(seed);
    let mut pairs: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
    pairs.extend((0..chords).map(|_| (rng.random_range(0..n), rng.random_range(0..n))));
    SparseGraph::from_edges(n, pairs).unwrap()
}

fn fp_identity() -> Outcome {
    let cfg = FpConfig {
        max_iters: 40,
        tolerance: 0.0,
    };
    let mut cases = 0;
    for g_seed in 0..3 {
        let g = random_connected(50, 60, g_seed);
        let adj = NormalizedAdjacency::new(&g);
        for seed in 0..3 {
            let mut rng = rng_from(10 + seed);
            let x = Array2::from_shape_simple_fn((50, 6), || rng.random_range(-3.0..3.0));
            let out = propagate(&FeatureTable::fully_known(x.clone()).unwrap(), &adj, &cfg).unwrap();
            if out.iter().zip(x.iter()).any(|(a, b)| a.to_bits() != b.to_bits()) {
                return outcome(false, format!("graph {g_seed} seed {seed} changed"));
            }
            cases += 1;
        }
    }
    outcome(true, format!("{cases} cases bit-identical"))
}

fn fp_boundary() -> Outcome {
    let (a, b) = (1.0, 0.0);
    let g = SparseGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let x = FeatureTable::new(array![[a], [0.0], [b]], array![[true], [false], [true]]).unwrap();
    let out = propagate(&x, &NormalizedAdjacency::new(&g), &FpConfig::default()).unwrap();
    // Degrees 1, 2, 1: both weights into the midpoint are 1/√(1·2).
    let w = 1.0 / 2f64.sqrt();
    let expected = w * a + w * b;
    let err = (out[[1, 0]] - expected).abs();
    outcome(err < FP_ORACLE_TOL, format!("x1 = {:.9}, oracle {expected:.9}", out[[1, 0]]))
}

fn dirichlet() -> Outcome {
    let mut tested = 0;
    let mut seed = 0;
    while tested < 20 && seed < 200 {
        let d = generate_sbm(&SyntheticSpec {
            num_nodes: 200,
            p_in: 0.1,
            p_out: 0.02,
            feature_dim: 8,
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let x = d.features.mask_uniform(0.8, seed + 1).unwrap();
        seed += 1;
        let column_known = (0..x.dim()).all(|j| x.known().column(j).iter().any(|&k| k));
        if count_components(&d.graph) != 1 || !column_known {
            continue;
        }
        let adj = NormalizedAdjacency::new(&d.graph);
        let out = propagate(&x, &adj, &FpConfig::default()).unwrap();
        let before = dirichlet_energy(&x.values().view(), &adj).unwrap();
        let after = dirichlet_energy(&out.view(), &adj).unwrap();
        if after > before {
            return outcome(false, format!("seed {}: {after} > {before}", seed - 1));
        }
        tested += 1;
    }
    outcome(tested == 20, format!("{tested}/20 graphs non-increasing"))
}

fn cll_homophily() -> Outcome {
    let mut rng = rng_from(77);
    let (mut added, mut saturated) = (0, 0);
    for case in 0..100u64 {
        let p_in = rng.random_range(0.02..0.2);
        let d = generate_sbm(&SyntheticSpec {
            num_nodes: rng.random_range(50..300),
            num_classes: rng.random_range(2..6),
            p_in,
            p_out: rng.random_range(0.0..p_in),
            feature_dim: 4,
            train_frac: rng.random_range(0.1..0.6),
            val_frac: 0.1,
            seed: case,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let train = d.labels.nodes_in(graphimpute::Split::Train).len();
        let cfg = CllConfig {
            k: rng.random_range(1..=train.saturating_sub(1).clamp(1, 25)),
            tau: rng.random_range(0.25..2.0),
            candidate_size: None,
            similarity: if rng.random_bool(0.5) {
                Similarity::Cosine
            } else {
                Similarity::ConstantOne
            },
            seed: case,
        };
        let out = co_label_link(&d.graph, &d.features.values().view(), &d.labels, &cfg).unwrap();
        let before = homophily_index(&d.graph, &d.labels);
        let after = homophily_index(&out.graph, &d.labels);
        if after < before {
            return outcome(false, format!("case {case}: {after} < {before}"));
        }
        if out.added_edges > 0 {
            added += 1;
            if before == 1.0 {
                saturated += 1;
            } else if after <= before {
                return outcome(false, format!("case {case}: edges added, homophily flat"));
            }
        }
    }
    outcome(
        true,
        format!("100 graphs, {added} with added edges (strict increase in all with input homophily < 1; {saturated} at 1.0)"),
    )
}

/// `E[σ(w + c)]`, `w ~ N(0, 1)`, by composite Simpson on [-12, 12].
fn expected_sigmoid(c: f64) -> f64 {
    let (lo, hi, n) = (-12.0f64, 12.0f64, 20_000usize);
    let h = (hi - lo) / n as f64;
    let f = |w: f64| (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt() / (1.0 + (-(w + c)).exp());
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h))
        .sum();
    (f(lo) + f(hi) + inner) * h / 3.0
}

fn masked_fraction(rate: f64, seed: u64) -> f64 {
    let x = Array2::from_elem((1000, 1000), 1.0);
    let (_, mask) = gaussian_mask(&x, rate, seed, MaskMode::Bernoulli).unwrap();
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

fn mask_calibration() -> Outcome {
    let half = masked_fraction(0.5, 1);
    let oracle = expected_sigmoid(3f64.ln());
    let three_q = masked_fraction(0.75, 2);
    let passed = (half - 0.5).abs() < MASK_TOL && (three_q - oracle).abs() < MASK_TOL;
    outcome(
        passed,
        format!(
            "0.5 -> {half:.5}; 0.75 -> {three_q:.5} vs quadrature {oracle:.5} (nominal 0.75 off by {:.4})",
            0.75 - oracle
        ),
    )
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let mut rng = rng_from(seed);
        let n = 12;
        let pairs: Vec<(usize, usize)> =
            (0..24).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        let adj = NormalizedAdjacency::with_self_loops(&SparseGraph::from_edges(n, pairs).unwrap());
        let mut params = AutoencoderParams::init(6, 5, 4, &mut rng);
        for l in params.layers_mut() {
            l.bias.mapv_inplace(|_| rng.random_range(-0.2..0.2));
        }
        let input = Array2::from_shape_simple_fn((n, 6), || rng.random_range(-1.0..1.0));
        let target = Array2::from_shape_simple_fn((n, 6), || rng.random_range(-1.0..1.0));
        let loss = |p: &AutoencoderParams| {
            let out = p.forward(&adj, &input).unwrap().output;
            sce_loss(&out.view(), &target.view(), 2.0).unwrap()
        };
        let (_, grads) = params.loss_and_gradients(&adj, &input, &target, 2.0).unwrap();
        let grads: Vec<_> = grads.layers().cloned().collect();
        let num_layers = grads.len();
        for l in 0..num_layers {
            let (rows, cols) = grads[l].weight.dim();
            for k in 0..rows * cols + cols {
                let perturbed = |delta: f64| {
                    let mut p = params.clone();
                    let layer = p.layers_mut().nth(l).unwrap();
                    if k < rows * cols {
                        layer.weight[[k / cols, k % cols]] += delta;
                    } else {
                        layer.bias[k - rows * cols] += delta;
                    }
                    loss(&p)
                };
                let numeric = (perturbed(GRAD_STEP) - perturbed(-GRAD_STEP)) / (2.0 * GRAD_STEP);
                let analytic = if k < rows * cols {
                    grads[l].weight[[k / cols, k % cols]]
                } else {
                    grads[l].bias[k - rows * cols]
                };
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    outcome(worst < GRAD_TOL, format!("max relative error {worst:.2e} over 3 seeds"))
}

fn sce_cases() -> Outcome {
    let p = array![[0.3, -1.2, 2.0]];
    let same = sce_loss(&p.view(), &p.view(), 2.0).unwrap();
    let orth = sce_loss(&array![[1.0, 0.0]].view(), &array![[0.0, 2.0]].view(), 1.0).unwrap();
    let anti = sce_loss(&p.view(), &p.mapv(|v| -v).view(), 2.0).unwrap();
    let passed = same.abs() < SCE_TOL && (orth - 1.0).abs() < SCE_TOL && (anti - 4.0).abs() < SCE_TOL;
    outcome(passed, format!("identical {same:e}, orthogonal {orth}, antipodal {anti}"))
}

fn training_sanity() -> Outcome {
    let cfg = RunConfig::default();
    let mut rows = Vec::new();
    let mut passed = true;
    for seed in 0..SEEDS as u64 {
        let d = generate_sbm(&cfg.data_spec(seed)).unwrap();
        let x = d.features.mask_uniform(cfg.missing_rate, derive(seed, stream::MISSING)).unwrap();
        let plan = cfg.linking(derive(seed, stream::CLL));
        let out = train(
            &d.graph,
            &x,
            &d.labels,
            Some(&plan),
            &cfg.fp(),
            &cfg.train_config(derive(seed, stream::TRAIN)),
        )
        .unwrap();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let first = mean(&out.losses[..10]);
        let last = mean(&out.losses[out.losses.len() - 10..]);
        passed &= last < first;
        rows.push(format!("{first:.4}->{last:.4}"));
    }
    outcome(passed, format!("first10->last10 per seed: {}", rows.join(", ")))
}

fn bench(mode: Mode) -> BenchReport {
    let cfg = RunConfig {
        mode,
        seeds: SEEDS,
        ..RunConfig::default()
    };
    run_bench(&cfg).unwrap_or_else(|e| panic!("bench failed at {}: {}", e.stage, e.error))
}

fn mean(r: &BenchReport, key: &str) -> f64 {
    r.metric(key).map_or(f64::NAN, |s| s.mean)
}

fn shift_direction(r: &BenchReport) -> Outcome {
    let pairs: Vec<(f64, f64)> = r
        .runs
        .iter()
        .filter_map(|s| s.inductive.as_ref())
        .map(|m| (m.delta_ddfi.unwrap_or(f64::NAN), m.delta_fp.unwrap_or(f64::NAN)))
        .collect();
    let wins = pairs.iter().filter(|(rec, fp)| rec < fp).count();
    let shown: Vec<String> = pairs.iter().map(|(r, f)| format!("{f:.3}->{r:.3}")).collect();
    outcome(
        wins >= majority(SEEDS) && pairs.len() == SEEDS,
        format!("{wins}/{SEEDS} seeds, delta FP->rec: {}", shown.join(", ")),
    )
}

fn mad_direction(r: &BenchReport) -> Outcome {
    let rows: Vec<_> = r.runs.iter().filter_map(|s| s.transductive.as_ref()).collect();
    let wins = rows.iter().filter(|m| m.mad_ddfi > m.mad_fp).count();
    outcome(
        wins >= majority(SEEDS) && rows.len() == SEEDS,
        format!(
            "{wins}/{SEEDS} seeds; means embedding {:.4} vs FP {:.4}",
            mean(r, "transductive.mad_ddfi"),
            mean(r, "transductive.mad_fp")
        ),
    )
}

fn accuracy_direction(r: &BenchReport) -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for mode in ["transductive", "structural"] {
        let ddfi = mean(r, &format!("{mode}.accuracy_ddfi"));
        let fp = mean(r, &format!("{mode}.accuracy_fp"));
        passed &= ddfi >= fp;
        parts.push(format!("{mode} embedding {ddfi:.4} vs FP {fp:.4}"));
    }
    outcome(passed, parts.join("; "))
}

fn ablation(inductive: &BenchReport, transductive: &BenchReport) -> Outcome {
    let cells = ["full", "no_rec", "no_cll", "no_rec_no_cll"];
    let mut emitted = true;
    for (r, mode) in [(inductive, "inductive"), (transductive, "transductive"), (transductive, "structural")] {
        for c in cells {
            let key = format!("{mode}.ablation.{c}");
            emitted &= r.metric(&key).is_some_and(|s| s.values.len() == SEEDS);
        }
    }
    let full = mean(inductive, "inductive.ablation.full");
    let no_rec = mean(inductive, "inductive.ablation.no_rec");
    let shown: Vec<String> = cells
        .iter()
        .map(|c| format!("{c} {:.4}", mean(inductive, &format!("inductive.ablation.{c}"))))
        .collect();
    outcome(
        emitted && full >= no_rec,
        format!(
            "all cells emitted: {emitted}; inductive {}",
            shown.join(", ")
        ),
    )
}

fn link_direction(r: &BenchReport) -> Outcome {
    let hand = roc_auc(&[0.9, 0.8, 0.4], &[0.7, 0.3, 0.2]).unwrap();
    let auc = mean(r, "link.auc_ddfi");
    let auc_fp = mean(r, "link.auc_fp");
    outcome(
        auc > 0.5 + LINK_AUC_MARGIN && auc >= auc_fp && hand == 8.0 / 9.0,
        format!("AUC embedding {auc:.4} vs FP {auc_fp:.4}; hand example {hand:.6} (8/9)"),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let status = Command::new(env!("CARGO_BIN_EXE_graphimpute"))
            .args(["bench", "--nodes", "300", "--epochs", "20", "--seeds", "2", "--no-assert"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("report.txt")).unwrap(),
        )
    };
    let a = run("a");
    let b = run("b");
    outcome(a == b, format!("report.json {} bytes, report.txt {} bytes", a.0.len(), a.1.len()))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id, name, (o, t): (Outcome, Duration)| {
        println!("[{}] {id:>2} {name}: {} ({t:.1?})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, t));
    };

    record(1, "FP identity", timed(Some(secs(1)), fp_identity));
    record(2, "FP boundary oracle", timed(Some(secs(1)), fp_boundary));
    record(3, "Dirichlet non-increase", timed(None, dirichlet));
    record(4, "CLL homophily", timed(Some(secs(30)), cll_homophily));
    record(5, "Gaussian mask calibration", timed(Some(secs(5)), mask_calibration));
    record(6, "gradient correctness", timed(Some(secs(10)), gradient_check));
    record(7, "SCE exactness", timed(None, sce_cases));
    record(8, "training sanity", timed(Some(secs(180)), training_sanity));

    let start = Instant::now();
    let inductive = bench(Mode::Inductive);
    let inductive_time = start.elapsed();
    record(9, "inductive distribution shift", timed(None, || {
        let mut o = shift_direction(&inductive);
        o.detail = format!("{}; bench {inductive_time:.1?}", o.detail);
        if inductive_time > secs(300) {
            o.passed = false;
        }
        o
    }));

    let transductive = bench(Mode::Transductive);
    record(10, "MAD direction", timed(None, || mad_direction(&transductive)));
    record(11, "accuracy direction", timed(None, || accuracy_direction(&transductive)));
    record(12, "ablation grid", timed(None, || ablation(&inductive, &transductive)));
    record(13, "link prediction", timed(None, || link_direction(&transductive)));
    record(14, "bench determinism", timed(None, determinism));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failed {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
