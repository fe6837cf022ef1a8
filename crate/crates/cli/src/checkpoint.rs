//! JSON model checkpoints.

use std::path::Path;

use graphimpute::mae::{Activation, AutoencoderParams, GcnLayer};
use graphimpute::ndarray::{Array1, Array2};
use graphimpute::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `in_dim × out_dim`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub encoder: Vec<LayerRecord>,
    pub decoder: Vec<LayerRecord>,
    pub config: RunConfig,
}

fn record(layer: &GcnLayer) -> LayerRecord {
    LayerRecord {
        in_dim: layer.in_dim(),
        out_dim: layer.out_dim(),
        activation: layer.activation,
        weight: layer.weight.iter().copied().collect(),
        bias: layer.bias.to_vec(),
    }
}

fn layer(r: &LayerRecord) -> Result<GcnLayer> {
    let weight = Array2::from_shape_vec((r.in_dim, r.out_dim), r.weight.clone())
        .map_err(|e| Error::Input(format!("checkpoint weight shape: {e}")))?;
    if r.bias.len() != r.out_dim {
        return Err(Error::Input(format!(
            "checkpoint bias has {} entries, layer width is {}",
            r.bias.len(),
            r.out_dim
        )));
    }
    Ok(GcnLayer {
        weight,
        bias: Array1::from(r.bias.clone()),
        activation: r.activation,
    })
}

impl Checkpoint {
    pub fn new(params: &AutoencoderParams, config: &RunConfig) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            feature_dim: params.feature_dim(),
            hidden_dim: params.hidden_dim(),
            latent_dim: params.latent_dim(),
            encoder: params.encoder.iter().map(record).collect(),
            decoder: params.decoder.iter().map(record).collect(),
            config: config.clone(),
        }
    }

    pub fn params(&self) -> Result<AutoencoderParams> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "checkpoint format {} not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let params = AutoencoderParams {
            encoder: self.encoder.iter().map(layer).collect::<Result<_>>()?,
            decoder: self.decoder.iter().map(layer).collect::<Result<_>>()?,
        };
        params.validate()?;
        if params.feature_dim() != self.feature_dim || params.latent_dim() != self.latent_dim {
            return Err(Error::Input("checkpoint dims disagree with its layers".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("checkpoint {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphimpute::rng::rng_from;

    #[test]
    fn round_trip_is_exact() {
        let params = AutoencoderParams::init(7, 5, 3, &mut rng_from(2));
        let ck = Checkpoint::new(&params, &RunConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.params().unwrap(), params);
    }

    #[test]
    fn shape_errors() {
        let params = AutoencoderParams::init(4, 3, 2, &mut rng_from(0));
        let mut ck = Checkpoint::new(&params, &RunConfig::default());
        ck.encoder[0].weight.pop();
        assert!(ck.params().is_err());
        let mut ck = Checkpoint::new(&params, &RunConfig::default());
        ck.format_version = 99;
        assert!(ck.params().is_err());
    }
}
