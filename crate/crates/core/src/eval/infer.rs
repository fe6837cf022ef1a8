use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::graph::{NormalizedAdjacency, SparseGraph};
use crate::mae::AutoencoderParams;
use crate::propagation::{propagate, FpConfig};

/// Node embedding matrix with a note on how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub matrix: Array2<f64>,
    pub provenance: String,
}

impl Embedding {
    pub fn new(matrix: Array2<f64>, provenance: impl Into<String>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("embedding", "non-finite entries"));
        }
        Ok(Embedding {
            matrix,
            provenance: provenance.into(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Everything produced by inference on one graph.
#[derive(Debug, Clone)]
pub struct Inference {
    /// Propagated input features.
    pub propagated: Array2<f64>,
    /// Step 1: `Decoder(Encoder(FP(X, A)))`.
    pub reconstructed: Array2<f64>,
    /// Step 2: `Encoder(reconstructed)`.
    pub embedding: Embedding,
    /// `Encoder(FP(X, A))`, the single-step baseline.
    pub one_step: Embedding,
}

/// Two-step inference: reconstruct the propagated features through the whole
/// autoencoder, then encode the reconstruction with the same encoder.
pub fn two_step_infer(
    params: &AutoencoderParams,
    g: &SparseGraph,
    x: &FeatureTable,
    fp: &FpConfig,
) -> Result<Inference> {
    params.validate()?;
    if x.dim() != params.feature_dim() {
        return Err(Error::input(format!(
            "checkpoint expects {} feature columns, data has {}",
            params.feature_dim(),
            x.dim()
        )));
    }
    if x.num_nodes() != g.num_nodes() {
        return Err(Error::input("feature rows differ from graph size"));
    }
    let propagated = propagate(x, &NormalizedAdjacency::new(g), fp)?;
    let adj = NormalizedAdjacency::with_self_loops(g);
    let latent = params.encode(&adj, &propagated)?;
    let reconstructed = params.decode(&adj, &latent)?;
    let z = params.encode(&adj, &reconstructed)?;
    Ok(Inference {
        propagated,
        reconstructed,
        embedding: Embedding::new(z, "two-step")?,
        one_step: Embedding::new(latent, "one-step")?,
    })
}
