//! Link prediction on embeddings scored by `σ(z_u · z_v)`.

use std::cmp::Ordering;
use std::collections::HashSet;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::mae::sigmoid;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkScores {
    pub auc: f64,
    pub ap: f64,
}

/// Output of [`holdout_link_split`].
#[derive(Debug, Clone)]
pub struct LinkSplit {
    pub train_graph: SparseGraph,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

/// ROC AUC as the Mann–Whitney statistic; tied scores get averaged ranks.
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::input("AUC needs positive and negative scores"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // Ranks are 1-based; the tie group i..=j shares the mean rank.
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = all[i..=j].iter().filter(|e| e.1).count();
        rank_sum += avg_rank * tied_pos as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Average precision: `Σ_k (R_k − R_{k−1}) · P_k` over distinct score thresholds.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::input("AP needs positive and negative scores"));
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let total_pos = pos.len() as f64;
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

fn logits(z: &ArrayView2<f64>, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(u, v)| {
            if u >= z.nrows() || v >= z.nrows() {
                Err(Error::input(format!("pair ({u}, {v}) outside embedding")))
            } else {
                Ok(z.row(u).dot(&z.row(v)))
            }
        })
        .collect()
}

/// Link scores `σ(z_u · z_v)` for each pair.
pub fn link_scores(z: &ArrayView2<f64>, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    Ok(logits(z, pairs)?.into_iter().map(sigmoid).collect())
}

/// AUC and AP of `σ(z_u · z_v)` on positive versus negative pairs.
///
/// Ranking uses the inner products directly: the sigmoid is monotone, and
/// ranking on it would merge distinct large scores that round to 1.0.
pub fn link_pred_eval(
    z: &ArrayView2<f64>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
) -> Result<LinkScores> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::input("link evaluation needs positive and negative pairs"));
    }
    let p = logits(z, pos)?;
    let n = logits(z, neg)?;
    Ok(LinkScores {
        auc: roc_auc(&p, &n)?,
        ap: average_precision(&p, &n)?,
    })
}

/// Hold out `val_frac` and `test_frac` of the edges as positives, removing
/// them from the training graph, with as many non-edges as negatives.
pub fn holdout_link_split(
    g: &SparseGraph,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<LinkSplit> {
    if !(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0) {
        return Err(Error::input("link split fractions must be >= 0 and sum below 1"));
    }
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let m = edges.len();
    let n_val = (val_frac * m as f64).round() as usize;
    let n_test = (test_frac * m as f64).round() as usize;
    let n = g.num_nodes();
    let non_edges = (n * n.saturating_sub(1) / 2).saturating_sub(m);
    if (val_frac > 0.0 && n_val == 0)
        || (test_frac > 0.0 && n_test == 0)
        || n_val + n_test > non_edges
    {
        return Err(Error::input(format!(
            "graph with {n} nodes and {m} edges is too small for fractions {val_frac}/{test_frac}"
        )));
    }
    let mut rng = rng::rng_from(seed);
    edges.shuffle(&mut rng);
    let val_pos = edges[..n_val].to_vec();
    let test_pos = edges[n_val..n_val + n_test].to_vec();
    let held: HashSet<(usize, usize)> = edges[..n_val + n_test].iter().copied().collect();
    let train_graph = g.filter_edges(|u, v| !held.contains(&(u, v)));

    let mut seen = HashSet::new();
    let mut negatives = Vec::with_capacity(n_val + n_test);
    let budget = 100 * (n_val + n_test) + 10_000;
    let mut attempts = 0;
    while negatives.len() < n_val + n_test {
        attempts += 1;
        if attempts > budget {
            return Err(Error::input("could not sample enough negative pairs"));
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (u, v) = (a.min(b), a.max(b));
        if u == v || g.has_edge(u, v) || !seen.insert((u, v)) {
            continue;
        }
        negatives.push((u, v));
    }
    let test_neg = negatives.split_off(n_val);
    Ok(LinkSplit {
        train_graph,
        val_pos,
        val_neg: negatives,
        test_pos,
        test_neg,
    })
}
