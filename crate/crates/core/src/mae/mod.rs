//! Masked graph autoencoder.

mod adam;
mod layer;
mod loss;
mod masking;
mod model;
mod train;

pub use adam::Adam;
pub use layer::{Activation, GcnLayer, LayerCache, LayerGrad};
pub use loss::{sce_loss, sce_loss_grad};
pub use masking::{drop_edges, gaussian_mask, mask_offset, sigmoid, MaskMode};
pub use model::{AutoencoderParams, ForwardPass, Gradients};
pub use train::{
    matrix_checksum, train, LinkingPlan, SimilarityInput, TrainConfig, TrainOutcome,
};
