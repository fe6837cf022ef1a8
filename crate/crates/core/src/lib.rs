//! Graph feature imputation with masked graph autoencoders.
//!
//! Missing node features are first filled by feature propagation, then a
//! two-layer GCN autoencoder trained with masked reconstruction refines them.
//! Co-label linking adds same-label edges among training nodes before
//! training.

pub mod cll;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod labels;
pub mod mae;
pub mod propagation;
pub mod rng;
pub mod synth;

pub use cll::{co_label_link, CllConfig, CllOutcome, CllStatus, Similarity};
pub use error::{Error, Result};
pub use eval::{
    distribution_shift, link_pred_eval, linear_probe, mad, two_step_infer, Embedding, Inference,
    LinkScores, ProbeConfig, ShiftReport,
};
pub use features::FeatureTable;
pub use graph::{homophily_index, NormalizedAdjacency, SparseGraph};
pub use labels::{LabelSet, Split};
pub use mae::{AutoencoderParams, TrainConfig, TrainOutcome};
pub use propagation::{propagate, FpConfig};
pub use synth::{generate_sbm, Dataset, SyntheticSpec};

pub use ndarray;
