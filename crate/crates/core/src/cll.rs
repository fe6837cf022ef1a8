//! Co-label linking: connect each training node to sampled training nodes
//! that carry the same label.
//!
//! Per source node: draw a candidate set of size `M` without replacement
//! from the other training nodes, weight candidates by
//! `softmax(sim(x_i, x_j) / τ)`, draw `k` of them without replacement by
//! those weights, and keep the ones sharing the source's label. The new
//! edges are unioned into the graph.

use ndarray::ArrayView2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labels::{LabelSet, Split};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    /// `sim = 1` for every pair, which makes candidate sampling uniform.
    #[serde(alias = "one")]
    ConstantOne,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CllConfig {
    pub k: usize,
    pub tau: f64,
    /// Candidate set size; `None` uses every other training node.
    pub candidate_size: Option<usize>,
    pub similarity: Similarity,
    pub seed: u64,
}

impl Default for CllConfig {
    fn default() -> Self {
        CllConfig {
            k: 20,
            tau: 1.0,
            candidate_size: None,
            similarity: Similarity::ConstantOne,
            seed: 0,
        }
    }
}

impl CllConfig {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::input("cll k must be >= 1"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::input("cll tau must be > 0"));
        }
        if let Some(m) = self.candidate_size {
            if m < self.k || m + 1 > num_nodes.max(1) {
                return Err(Error::input(format!(
                    "cll needs k <= M <= n - 1 (k={}, M={m}, n={num_nodes})",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CllStatus {
    Linked,
    /// Fewer than two training nodes; the graph is returned unchanged.
    TooFewTrainNodes,
}

#[derive(Debug, Clone)]
pub struct CllOutcome {
    pub graph: SparseGraph,
    /// Edges present in the output but not in the input.
    pub added_edges: usize,
    /// Same-label picks before deduplication against existing edges.
    pub proposed_links: usize,
    pub status: CllStatus,
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `p_j = exp(w_j / τ) / Σ_l exp(w_l / τ)`, shifted by the max for stability.
pub fn candidate_probabilities(weights: &[f64], tau: f64) -> Vec<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = weights.iter().map(|w| ((w - max) / tau).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Run co-label linking over the training nodes of `labels`.
///
/// `features` is only read when the similarity is cosine.
pub fn co_label_link(
    g: &SparseGraph,
    features: &ArrayView2<f64>,
    labels: &LabelSet,
    cfg: &CllConfig,
) -> Result<CllOutcome> {
    cfg.validate(g.num_nodes())?;
    if labels.num_nodes() != g.num_nodes() {
        return Err(Error::input("label count differs from graph size"));
    }
    if cfg.similarity == Similarity::Cosine && features.nrows() != g.num_nodes() {
        return Err(Error::input("feature rows differ from graph size"));
    }
    let train = labels.nodes_in(Split::Train);
    if train.len() < 2 {
        log::warn!("co-label linking skipped: {} training node(s)", train.len());
        return Ok(CllOutcome {
            graph: g.clone(),
            added_edges: 0,
            proposed_links: 0,
            status: CllStatus::TooFewTrainNodes,
        });
    }
    let pool = train.len() - 1;
    let m = cfg.candidate_size.unwrap_or(pool).min(pool);
    let k = cfg.k.min(m);

    let mut links = Vec::new();
    for (pos, &src) in train.iter().enumerate() {
        let mut rng = rng::rng_from(rng::derive2(cfg.seed, stream::CLL, src as u64));
        // Candidate indices address `train` with the source skipped.
        let candidates: Vec<usize> = index::sample(&mut rng, pool, m)
            .into_iter()
            .map(|i| train[if i >= pos { i + 1 } else { i }])
            .collect();
        let weights: Vec<f64> = match cfg.similarity {
            Similarity::ConstantOne => vec![1.0; m],
            Similarity::Cosine => {
                let xi = features.row(src);
                let xi = xi.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| xi.to_vec());
                candidates
                    .iter()
                    .map(|&c| cosine_similarity(&xi, &features.row(c).to_vec()))
                    .collect()
            }
        };
        let probs = candidate_probabilities(&weights, cfg.tau);
        let picked = index::sample_weighted(&mut rng, m, |j| probs[j], k)
            .map_err(|e| Error::numeric("co-label linking", e.to_string()))?;
        let src_label = labels.label(src);
        for j in picked {
            let dst = candidates[j];
            if labels.label(dst) == src_label {
                links.push((src, dst));
            }
        }
    }
    let proposed_links = links.len();
    let graph = g.with_added_edges(links)?;
    Ok(CllOutcome {
        added_edges: graph.num_edges() - g.num_edges(),
        graph,
        proposed_links,
        status: CllStatus::Linked,
    })
}
