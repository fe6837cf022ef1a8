//! Stochastic views used during training: edge dropping and Gaussian-offset
//! feature masking.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Entry is zeroed when `Bernoulli(σ(w + offset))` fires.
    #[default]
    Bernoulli,
    /// Entry is multiplied by `σ(w + offset)`.
    Soft,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(rate / (1 − rate))`.
pub fn mask_offset(rate: f64) -> f64 {
    (rate / (1.0 - rate)).ln()
}

/// Remove each undirected edge independently with probability `rate`.
pub fn drop_edges(g: &SparseGraph, rate: f64, seed: u64) -> Result<SparseGraph> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::input(format!("edge drop rate {rate} not in [0, 1)")));
    }
    if rate == 0.0 {
        return Ok(g.clone());
    }
    let mut rng = rng::rng_from(seed);
    Ok(g.filter_edges(|_, _| rng.random::<f64>() >= rate))
}

/// Mask features with per-entry probability `σ(w + offset)`, `w ~ N(0, 1)`.
///
/// Returns the masked matrix and a mask marking zeroed entries. In
/// [`MaskMode::Soft`] nothing is zeroed and the mask is all `false`.
pub fn gaussian_mask(
    x: &Array2<f64>,
    rate: f64,
    seed: u64,
    mode: MaskMode,
) -> Result<(Array2<f64>, Array2<bool>)> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::input(format!("mask rate {rate} not in (0, 1)")));
    }
    let offset = mask_offset(rate);
    let mut rng = rng::rng_from(seed);
    let mut out = x.clone();
    let mut mask = Array2::from_elem(x.raw_dim(), false);
    for (v, m) in out.iter_mut().zip(mask.iter_mut()) {
        let w: f64 = StandardNormal.sample(&mut rng);
        let p = sigmoid(w + offset);
        match mode {
            MaskMode::Bernoulli => {
                if rng.random::<f64>() < p {
                    *v = 0.0;
                    *m = true;
                }
            }
            MaskMode::Soft => *v *= p,
        }
    }
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_values() {
        assert_eq!(mask_offset(0.5), 0.0);
        assert!((mask_offset(0.75) - 3f64.ln()).abs() < 1e-15);
        assert!((mask_offset(0.75) - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn masked_entries_are_zero() {
        let x = Array2::from_elem((50, 20), 3.0);
        let (m, mask) = gaussian_mask(&x, 0.3, 1, MaskMode::Bernoulli).unwrap();
        assert!(mask.iter().any(|&b| b));
        for (v, &b) in m.iter().zip(&mask) {
            assert_eq!(*v == 0.0, b);
        }
        assert!(gaussian_mask(&x, 0.0, 1, MaskMode::Bernoulli).is_err());
        assert!(gaussian_mask(&x, 1.0, 1, MaskMode::Bernoulli).is_err());
    }

    #[test]
    fn soft_mode_scales() {
        let x = Array2::from_elem((10, 10), 2.0);
        let (m, mask) = gaussian_mask(&x, 0.5, 1, MaskMode::Soft).unwrap();
        assert!(mask.iter().all(|&b| !b));
        assert!(m.iter().all(|&v| v > 0.0 && v < 2.0));
    }

    #[test]
    fn drop_edges_rate_zero_and_symmetry() {
        let g = SparseGraph::from_edges(50, (0..49).map(|i| (i, i + 1))).unwrap();
        assert_eq!(drop_edges(&g, 0.0, 4).unwrap(), g);
        let d = drop_edges(&g, 0.5, 4).unwrap();
        assert!(d.is_subgraph_of(&g));
        for (u, v) in d.edges() {
            assert!(d.has_edge(v, u));
        }
        assert!(drop_edges(&g, 1.0, 4).is_err());
    }

    #[test]
    fn drop_edges_fraction() {
        // Circulant graph with 100 chords per node: 100k edges.
        let n = 1000;
        let pairs = (0..n).flat_map(|u| (1..=100).map(move |s| (u, (u + s) % n)));
        let g = SparseGraph::from_edges(n, pairs).unwrap();
        assert_eq!(g.num_edges(), 100_000);
        let d = drop_edges(&g, 0.1, 12).unwrap();
        let removed = 1.0 - d.num_edges() as f64 / g.num_edges() as f64;
        assert!((removed - 0.1).abs() < 0.005, "{removed}");
    }
}
