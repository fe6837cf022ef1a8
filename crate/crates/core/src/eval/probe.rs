//! Linear probe: multinomial logistic regression on frozen representations.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelSet, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub iterations: usize,
    /// L2 penalty on the weights (not the intercepts).
    pub l2: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            iterations: 300,
            l2: 1e-3,
        }
    }
}

/// A fitted probe.
#[derive(Debug, Clone)]
pub struct LinearProbe {
    mean: Array1<f64>,
    scale: f64,
    weights: Array2<f64>,
    intercept: Array1<f64>,
}

impl LinearProbe {
    /// Fit on `rows` of `x`. Inputs are centered and divided by one global
    /// RMS scale, which keeps the fit invariant under rotations of `x`.
    pub fn fit(x: &ArrayView2<f64>, labels: &[u32], rows: &[usize], cfg: &ProbeConfig) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::input("linear probe needs training rows"));
        }
        let classes = labels.iter().copied().max().unwrap_or(0) as usize + 1;
        let first = labels[rows[0]];
        if rows.iter().all(|&r| labels[r] == first) {
            return Err(Error::input("linear probe needs at least two classes in training rows"));
        }
        let fit_x = x.select(Axis(0), rows);
        let mean = fit_x.mean_axis(Axis(0)).expect("non-empty");
        let centered = &fit_x - &mean;
        let rms = (centered.iter().map(|v| v * v).sum::<f64>() / centered.len().max(1) as f64).sqrt();
        let scale = if rms > 0.0 { rms } else { 1.0 };
        let feats = centered / scale;
        let n = feats.nrows() as f64;
        let d = feats.ncols();

        let mut onehot = Array2::<f64>::zeros((rows.len(), classes));
        for (i, &r) in rows.iter().enumerate() {
            onehot[[i, labels[r] as usize]] = 1.0;
        }

        // Softmax cross-entropy has curvature at most ½·λmax(XᵀX/n) per
        // direction; step with the inverse of that bound.
        let lipschitz = 0.5 * (top_eigenvalue(&feats) / n).max(1.0) + cfg.l2;
        let lr = 1.0 / lipschitz;

        let mut weights = Array2::<f64>::zeros((d, classes));
        let mut intercept = Array1::<f64>::zeros(classes);
        for _ in 0..cfg.iterations {
            let probs = softmax_rows(feats.dot(&weights) + &intercept);
            let err = (probs - &onehot) / n;
            let gw = feats.t().dot(&err) + &weights * cfg.l2;
            let gb = err.sum_axis(Axis(0));
            weights.scaled_add(-lr, &gw);
            intercept.scaled_add(-lr, &gb);
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("linear probe", "non-finite weights"));
        }
        Ok(LinearProbe {
            mean,
            scale,
            weights,
            intercept,
        })
    }

    pub fn predict(&self, x: &ArrayView2<f64>, rows: &[usize]) -> Vec<u32> {
        let sel = (x.select(Axis(0), rows) - &self.mean) / self.scale;
        let logits = sel.dot(&self.weights) + &self.intercept;
        logits
            .outer_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0usize, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0 as u32
            })
            .collect()
    }
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        row /= z;
    }
    logits
}

/// Largest eigenvalue of `XᵀX` by power iteration.
fn top_eigenvalue(x: &Array2<f64>) -> f64 {
    let d = x.ncols();
    if d == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..100 {
        let w = x.t().dot(&x.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    lambda
}

fn known_labels(labels: &LabelSet) -> Vec<u32> {
    labels.labels().iter().map(|l| l.unwrap_or(0)).collect()
}

/// Fit on the train rows of `z` and report accuracy on its test rows.
pub fn linear_probe(z: &ArrayView2<f64>, labels: &LabelSet, cfg: &ProbeConfig) -> Result<f64> {
    linear_probe_split(z, z, labels, cfg)
}

/// Fit on the train rows of `z_fit`, evaluate on the test rows of `z_eval`.
///
/// Used for inductive evaluation, where training-stage and inference-stage
/// representations differ.
pub fn linear_probe_split(
    z_fit: &ArrayView2<f64>,
    z_eval: &ArrayView2<f64>,
    labels: &LabelSet,
    cfg: &ProbeConfig,
) -> Result<f64> {
    if z_fit.nrows() != labels.num_nodes() || z_eval.nrows() != labels.num_nodes() {
        return Err(Error::input("probe inputs must have one row per node"));
    }
    if z_fit.ncols() != z_eval.ncols() {
        return Err(Error::input("probe inputs differ in width"));
    }
    let train = labels.nodes_in(Split::Train);
    let test: Vec<usize> = labels
        .nodes_in(Split::Test)
        .into_iter()
        .filter(|&i| labels.label(i).is_some())
        .collect();
    if test.is_empty() {
        return Err(Error::input("no labelled test nodes"));
    }
    let y = known_labels(labels);
    let probe = LinearProbe::fit(z_fit, &y, &train, cfg)?;
    let pred = probe.predict(z_eval, &test);
    let correct = pred.iter().zip(&test).filter(|(p, &t)| **p == y[t]).count();
    Ok(correct as f64 / test.len() as f64)
}
