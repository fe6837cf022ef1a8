//! Encoder/decoder stack with hand-written reverse-mode gradients.

use ndarray::Array2;

use super::layer::{Activation, GcnLayer, LayerCache, LayerGrad};
use super::loss::{sce_loss, sce_loss_grad};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng::Rng;

/// Encoder and decoder layers. The encoder maps features to the latent
/// width, the decoder maps the latent back to the feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    pub encoder: Vec<GcnLayer>,
    pub decoder: Vec<GcnLayer>,
}

/// Output of a full encoder/decoder pass with the caches for backprop.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub latent: Array2<f64>,
    pub output: Array2<f64>,
    caches: Vec<LayerCache>,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
}

impl AutoencoderParams {
    /// Default stack: encoder `feature → hidden (ReLU) → latent (linear)`,
    /// decoder `latent → feature (linear)`.
    pub fn init(feature_dim: usize, hidden_dim: usize, latent_dim: usize, rng: &mut Rng) -> Self {
        AutoencoderParams {
            encoder: vec![
                GcnLayer::glorot(feature_dim, hidden_dim, Activation::Relu, rng),
                GcnLayer::glorot(hidden_dim, latent_dim, Activation::Linear, rng),
            ],
            decoder: vec![GcnLayer::glorot(latent_dim, feature_dim, Activation::Linear, rng)],
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.first().map_or(0, GcnLayer::in_dim)
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().map_or(0, GcnLayer::out_dim)
    }

    pub fn hidden_dim(&self) -> usize {
        if self.encoder.len() > 1 {
            self.encoder[0].out_dim()
        } else {
            self.latent_dim()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return Err(Error::input("encoder and decoder need at least one layer"));
        }
        let layers: Vec<&GcnLayer> = self.layers().collect();
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::input(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        if self.decoder.last().unwrap().out_dim() != self.feature_dim() {
            return Err(Error::input("decoder output width must equal feature width"));
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(Error::input("bias length differs from layer width"));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::numeric("parameters", "non-finite parameter"));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> impl Iterator<Item = &GcnLayer> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut GcnLayer> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn encode(&self, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<Array2<f64>> {
        run_stack(&self.encoder, adj, x, "encoder")
    }

    pub fn decode(&self, adj: &NormalizedAdjacency, z: &Array2<f64>) -> Result<Array2<f64>> {
        run_stack(&self.decoder, adj, z, "decoder")
    }

    pub fn forward(&self, adj: &NormalizedAdjacency, x: &Array2<f64>) -> Result<ForwardPass> {
        let mut caches = Vec::with_capacity(self.encoder.len() + self.decoder.len());
        let mut h = x.clone();
        let mut latent = None;
        for (i, layer) in self.layers().enumerate() {
            let (out, cache) = layer
                .forward_cached(adj, &h)
                .map_err(|e| with_layer_context(e, i))?;
            caches.push(cache);
            h = out;
            if i + 1 == self.encoder.len() {
                latent = Some(h.clone());
            }
        }
        Ok(ForwardPass {
            latent: latent.expect("encoder is non-empty"),
            output: h,
            caches,
        })
    }

    /// Backpropagate `grad_output` (gradient w.r.t. the decoder output).
    pub fn backward(
        &self,
        adj: &NormalizedAdjacency,
        pass: &ForwardPass,
        grad_output: &Array2<f64>,
    ) -> Result<Gradients> {
        let layers: Vec<&GcnLayer> = self.layers().collect();
        let mut grads = Vec::with_capacity(layers.len());
        let mut g = grad_output.clone();
        for i in (0..layers.len()).rev() {
            let (lg, gin) = layers[i].backward(adj, &pass.caches[i], &g, i > 0)?;
            grads.push(lg);
            if let Some(gin) = gin {
                g = gin;
            }
        }
        grads.reverse();
        let decoder = grads.split_off(self.encoder.len());
        Ok(Gradients {
            encoder: grads,
            decoder,
        })
    }

    /// SCE loss of reconstructing `target` from `input` and its gradients.
    pub fn loss_and_gradients(
        &self,
        adj: &NormalizedAdjacency,
        input: &Array2<f64>,
        target: &Array2<f64>,
        gamma: f64,
    ) -> Result<(f64, Gradients)> {
        let pass = self.forward(adj, input)?;
        let loss = sce_loss(&pass.output.view(), &target.view(), gamma)?;
        let grad = sce_loss_grad(&pass.output.view(), &target.view(), gamma)?;
        let grads = self.backward(adj, &pass, &grad)?;
        Ok((loss, grads))
    }
}

impl Gradients {
    pub fn layers(&self) -> impl Iterator<Item = &LayerGrad> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .all(|g| g.weight.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }
}

fn run_stack(
    layers: &[GcnLayer],
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
    name: &str,
) -> Result<Array2<f64>> {
    let mut h = x.clone();
    for (i, layer) in layers.iter().enumerate() {
        h = layer.forward(adj, &h).map_err(|e| match e {
            Error::Numeric { message, .. } => Error::numeric(format!("{name} layer {i}"), message),
            other => other,
        })?;
    }
    Ok(h)
}

fn with_layer_context(e: Error, layer: usize) -> Error {
    match e {
        Error::Numeric { message, .. } => Error::numeric(format!("layer {layer}"), message),
        other => other,
    }
}
