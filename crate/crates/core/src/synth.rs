//! Stochastic block model datasets and the inductive train/full graph split.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::graph::SparseGraph;
use crate::labels::{LabelSet, Split};
use crate::rng::{self, stream};

/// Parameters of a planted-partition graph with Gaussian class features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub class_mean_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    #[serde(default = "default_val_frac")]
    pub val_frac: f64,
}

fn default_train_frac() -> f64 {
    0.4
}

fn default_val_frac() -> f64 {
    0.3
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_nodes: 1500,
            num_classes: 3,
            p_in: 0.02,
            p_out: 0.002,
            feature_dim: 64,
            class_mean_scale: 1.0,
            noise_sigma: 0.5,
            seed: 0,
            train_frac: default_train_frac(),
            val_frac: default_val_frac(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let ok_prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(ok_prob(self.p_in) && ok_prob(self.p_out) && self.p_out <= self.p_in) {
            return Err(Error::input(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::input("noise_sigma must be positive"));
        }
        if self.num_classes == 0 || self.num_nodes < self.num_classes {
            return Err(Error::input("need at least one node per class"));
        }
        if self.feature_dim == 0 {
            return Err(Error::input("feature_dim must be positive"));
        }
        if !(self.class_mean_scale >= 0.0 && self.class_mean_scale.is_finite()) {
            return Err(Error::input("class_mean_scale must be finite and >= 0"));
        }
        if !(self.train_frac > 0.0 && self.val_frac >= 0.0 && self.train_frac + self.val_frac <= 1.0)
        {
            return Err(Error::input("split fractions must be in (0,1] and sum to <= 1"));
        }
        Ok(())
    }
}

/// A generated graph with complete features and labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseGraph,
    pub features: FeatureTable,
    pub labels: LabelSet,
}

/// Sample a dataset. Node `i` belongs to class `i % num_classes`.
pub fn generate_sbm(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.num_nodes;
    let c = spec.num_classes;
    let class_of = |i: usize| i % c;

    let mut edge_rng = rng::rng_from(rng::derive2(spec.seed, stream::SYNTH, 0));
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if class_of(u) == class_of(v) {
                spec.p_in
            } else {
                spec.p_out
            };
            if edge_rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let graph = SparseGraph::from_edges(n, pairs)?;

    let mut feat_rng = rng::rng_from(rng::derive2(spec.seed, stream::SYNTH, 1));
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            (0..spec.feature_dim)
                .map(|_| spec.class_mean_scale * Distribution::<f64>::sample(&StandardNormal, &mut feat_rng))
                .collect::<Vec<f64>>()
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::input(e.to_string()))?;
    let mut values = Array2::zeros((n, spec.feature_dim));
    for (i, mut row) in values.outer_iter_mut().enumerate() {
        for (x, &m) in row.iter_mut().zip(&means[class_of(i)]) {
            *x = m + noise.sample(&mut feat_rng);
        }
    }
    let features = FeatureTable::fully_known(values)?;

    let mut split = vec![Split::Test; n];
    let mut split_rng = rng::rng_from(rng::derive2(spec.seed, stream::SYNTH, 2));
    for k in 0..c {
        let mut members: Vec<usize> = (k..n).step_by(c).collect();
        members.shuffle(&mut split_rng);
        let n_train = ((members.len() as f64 * spec.train_frac).round() as usize).max(1);
        let n_val = (members.len() as f64 * spec.val_frac).round() as usize;
        for (pos, &node) in members.iter().enumerate() {
            split[node] = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    let labels = LabelSet::new((0..n).map(|i| Some(class_of(i) as u32)).collect(), split)?;

    Ok(Dataset {
        graph,
        features,
        labels,
    })
}

/// Training-stage graph for inductive learning: every edge touching a test
/// node is removed, node ids are kept. Returns `(train_graph, full_graph)`.
pub fn inductive_split(g: &SparseGraph, labels: &LabelSet) -> (SparseGraph, SparseGraph) {
    let train = g.filter_edges(|u, v| labels.split(u) != Split::Test && labels.split(v) != Split::Test);
    (train, g.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{count_components, homophily_index};

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_nodes: 300,
            seed,
            p_in: 0.1,
            p_out: 0.01,
            feature_dim: 8,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn validation() {
        assert!(SyntheticSpec { p_out: 0.5, p_in: 0.1, ..small(0) }.validate().is_err());
        assert!(SyntheticSpec { noise_sigma: 0.0, ..small(0) }.validate().is_err());
        assert!(small(0).validate().is_ok());
    }

    #[test]
    fn block_structure_when_no_cross_edges() {
        let spec = SyntheticSpec {
            num_nodes: 40,
            num_classes: 2,
            p_in: 1.0,
            p_out: 0.0,
            ..small(3)
        };
        let d = generate_sbm(&spec).unwrap();
        assert_eq!(count_components(&d.graph), 2);
        assert_eq!(homophily_index(&d.graph, &d.labels), 1.0);
    }

    #[test]
    fn label_independent_edges_give_chance_homophily() {
        let spec = SyntheticSpec {
            num_nodes: 600,
            p_in: 0.05,
            p_out: 0.05,
            ..small(4)
        };
        let d = generate_sbm(&spec).unwrap();
        let h = homophily_index(&d.graph, &d.labels);
        // ~9000 edges; the same-class pair fraction is 299/899 ≈ 0.3326, sd ≈ 0.005.
        assert!((h - 299.0 / 899.0).abs() < 0.02, "{h}");
    }

    #[test]
    fn tiny_noise_collapses_classes() {
        let spec = SyntheticSpec {
            noise_sigma: 1e-12,
            ..small(5)
        };
        let d = generate_sbm(&spec).unwrap();
        let x = d.features.values();
        for i in 3..spec.num_nodes {
            let diff = (&x.row(i) - &x.row(i % 3)).mapv(f64::abs);
            assert!(diff.iter().all(|&v| v < 1e-9));
        }
    }

    #[test]
    fn deterministic_and_split_balanced() {
        let a = generate_sbm(&small(9)).unwrap();
        let b = generate_sbm(&small(9)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.labels.nodes_in(Split::Train).len(), 120);
        assert_eq!(a.labels.nodes_in(Split::Val).len(), 90);
        assert_eq!(a.labels.nodes_in(Split::Test).len(), 90);
        let c = generate_sbm(&small(10)).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn default_spec_homophily() {
        let d = generate_sbm(&SyntheticSpec::default()).unwrap();
        let h = homophily_index(&d.graph, &d.labels);
        assert!((0.7..0.85).contains(&h), "{h}");
    }

    #[test]
    fn inductive_split_drops_test_edges() {
        let d = generate_sbm(&small(2)).unwrap();
        let (train, full) = inductive_split(&d.graph, &d.labels);
        assert!(train.is_subgraph_of(&full));
        assert!(train.num_edges() < full.num_edges());
        for (u, v) in train.edges() {
            assert!(d.labels.split(u) != Split::Test && d.labels.split(v) != Split::Test);
        }
        let all_train = LabelSet::new(
            d.labels.labels().to_vec(),
            vec![Split::Train; d.labels.num_nodes()],
        )
        .unwrap();
        assert_eq!(inductive_split(&d.graph, &all_train).0, d.graph);
    }
}
