use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

/// One graph convolution: `act(Â · h · W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    /// `in_dim × out_dim`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Intermediate values of a forward pass needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// `Â · h`.
    pub aggregated: Array2<f64>,
    /// `Â · h · W + b`, before the activation.
    pub pre_activation: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl GcnLayer {
    /// Glorot-uniform weights in `±√(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((in_dim, out_dim), || {
            rng.random_range(-bound..bound)
        });
        GcnLayer {
            weight,
            bias: Array1::zeros(out_dim),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, adj: &NormalizedAdjacency, h: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(adj, h)?.0)
    }

    pub fn forward_cached(
        &self,
        adj: &NormalizedAdjacency,
        h: &Array2<f64>,
    ) -> Result<(Array2<f64>, LayerCache)> {
        if h.ncols() != self.in_dim() {
            return Err(Error::input(format!(
                "layer expects width {}, got {}",
                self.in_dim(),
                h.ncols()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("gcn layer", "non-finite layer input"));
        }
        let aggregated = adj.spmm(&h.view())?;
        let pre_activation = aggregated.dot(&self.weight) + &self.bias;
        let out = match self.activation {
            Activation::Relu => pre_activation.mapv(|v| v.max(0.0)),
            Activation::Linear => pre_activation.clone(),
        };
        Ok((
            out,
            LayerCache {
                aggregated,
                pre_activation,
            },
        ))
    }

    /// Parameter gradients and, when `need_input_grad`, the gradient w.r.t. the
    /// layer input. `grad_out` is the gradient w.r.t. the layer output.
    pub fn backward(
        &self,
        adj: &NormalizedAdjacency,
        cache: &LayerCache,
        grad_out: &Array2<f64>,
        need_input_grad: bool,
    ) -> Result<(LayerGrad, Option<Array2<f64>>)> {
        let grad_pre = match self.activation {
            Activation::Relu => {
                let mut g = grad_out.clone();
                g.zip_mut_with(&cache.pre_activation, |g, &s| {
                    if s <= 0.0 {
                        *g = 0.0;
                    }
                });
                g
            }
            Activation::Linear => grad_out.clone(),
        };
        let weight = cache.aggregated.t().dot(&grad_pre);
        let bias = grad_pre.sum_axis(Axis(0));
        let grad_in = if need_input_grad {
            // Â is symmetric, so Âᵀ · g = Â · g.
            let grad_agg = grad_pre.dot(&self.weight.t());
            Some(adj.spmm(&grad_agg.view())?)
        } else {
            None
        };
        Ok((LayerGrad { weight, bias }, grad_in))
    }
}
