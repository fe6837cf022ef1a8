//! Inference and evaluation metrics.

mod infer;
mod link;
mod mad;
mod probe;
mod shift;

pub use infer::{two_step_infer, Embedding, Inference};
pub use link::{
    average_precision, holdout_link_split, link_pred_eval, link_scores, roc_auc, LinkScores,
    LinkSplit,
};
pub use mad::mad;
pub use probe::{linear_probe, linear_probe_split, LinearProbe, ProbeConfig};
pub use shift::{distribution_shift, ShiftMethod, ShiftReport, DEFAULT_BINS};
