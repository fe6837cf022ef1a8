//! The self-supervised training loop.
//!
//! Once: link same-label training nodes, then propagate the observed
//! features over the linked graph to get the reconstruction target. Every
//! epoch: drop edges, propagate over the dropped graph, mask the propagated
//! features, reconstruct through encoder and decoder on the dropped graph,
//! and take one Adam step on the SCE loss against the target.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::Adam;
use super::masking::{drop_edges, gaussian_mask, MaskMode};
use super::model::AutoencoderParams;
use crate::cll::{co_label_link, CllConfig, CllOutcome, Similarity};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::graph::{NormalizedAdjacency, SparseGraph};
use crate::labels::LabelSet;
use crate::propagation::{propagate, FpConfig};
use crate::rng::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub sce_gamma: f64,
    pub mask_rate: f64,
    pub edge_drop_rate: f64,
    pub mask_mode: MaskMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            hidden_dim: 64,
            latent_dim: 32,
            sce_gamma: 2.0,
            mask_rate: 0.5,
            edge_drop_rate: 0.1,
            mask_mode: MaskMode::Bernoulli,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(Error::input("mask_rate must be in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.edge_drop_rate) {
            return Err(Error::input("edge_drop_rate must be in [0, 1)"));
        }
        if !(self.sce_gamma >= 1.0) {
            return Err(Error::input("sce_gamma must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::input("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::input("weight_decay must be >= 0"));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::input("hidden_dim and latent_dim must be positive"));
        }
        Ok(())
    }
}

/// Where cosine-similarity linking reads its features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityInput {
    Raw,
    #[default]
    Fp,
}

/// Co-label linking settings for building the reconstruction view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkingPlan {
    pub config: CllConfig,
    pub similarity_input: SimilarityInput,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: AutoencoderParams,
    pub initial_params: AutoencoderParams,
    /// Loss of every epoch, in order.
    pub losses: Vec<f64>,
    /// Reconstruction target (propagated features on the linked graph).
    pub target: Array2<f64>,
    pub target_checksum: String,
    pub linking: Option<CllOutcome>,
}

/// SHA-256 of the matrix shape and the little-endian bits of its entries.
pub fn matrix_checksum(m: &ArrayView2<f64>) -> String {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Train the autoencoder on the training graph.
///
/// `linking = None` skips co-label linking, making the target the plain
/// propagated features of `g_train`.
pub fn train(
    g_train: &SparseGraph,
    x_train: &FeatureTable,
    labels: &LabelSet,
    linking: Option<&LinkingPlan>,
    fp: &FpConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    fp.validate()?;
    if x_train.num_nodes() != g_train.num_nodes() || labels.num_nodes() != g_train.num_nodes() {
        return Err(Error::input(
            "graph, features and labels must cover the same nodes",
        ));
    }

    let linked = match linking {
        Some(plan) => {
            let sim_features = match (plan.config.similarity, plan.similarity_input) {
                (Similarity::ConstantOne, _) | (Similarity::Cosine, SimilarityInput::Raw) => {
                    x_train.values().clone()
                }
                (Similarity::Cosine, SimilarityInput::Fp) => {
                    propagate(x_train, &NormalizedAdjacency::new(g_train), fp)?
                }
            };
            Some(co_label_link(g_train, &sim_features.view(), labels, &plan.config)?)
        }
        None => None,
    };
    let target_graph = linked.as_ref().map_or(g_train, |o| &o.graph);
    let target = propagate(x_train, &NormalizedAdjacency::new(target_graph), fp)?;
    let target_checksum = matrix_checksum(&target.view());

    let mut init_rng = rng::rng_from(rng::derive(cfg.seed, stream::INIT));
    let initial_params =
        AutoencoderParams::init(x_train.dim(), cfg.hidden_dim, cfg.latent_dim, &mut init_rng);
    let mut params = initial_params.clone();
    let mut adam = Adam::new(&params, cfg.learning_rate, cfg.weight_decay);
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let dropped = drop_edges(
            g_train,
            cfg.edge_drop_rate,
            rng::derive2(cfg.seed, stream::EDGE_DROP, epoch as u64),
        )?;
        let input = propagate(x_train, &NormalizedAdjacency::new(&dropped), fp)?;
        let (masked, _) = gaussian_mask(
            &input,
            cfg.mask_rate,
            rng::derive2(cfg.seed, stream::FEATURE_MASK, epoch as u64),
            cfg.mask_mode,
        )?;
        let adj = NormalizedAdjacency::with_self_loops(&dropped);
        let (loss, grads) = params
            .loss_and_gradients(&adj, &masked, &target, cfg.sce_gamma)
            .map_err(|e| epoch_context(e, epoch))?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::numeric(
                format!("training epoch {epoch}"),
                format!("loss diverged ({loss})"),
            ));
        }
        adam.step(&mut params, &grads);
        losses.push(loss);
        log::debug!("epoch {epoch}: loss {loss:.6}");
    }
    debug_assert_eq!(matrix_checksum(&target.view()), target_checksum);

    Ok(TrainOutcome {
        params,
        initial_params,
        losses,
        target,
        target_checksum,
        linking: linked,
    })
}

fn epoch_context(e: Error, epoch: usize) -> Error {
    match e {
        Error::Numeric { stage, message } => {
            Error::numeric(format!("training epoch {epoch}, {stage}"), message)
        }
        other => other,
    }
}
