use ndarray::{Array1, Array2, Zip};

use super::layer::LayerGrad;
use super::model::{AutoencoderParams, Gradients};

/// Adaptive-moment optimizer with coupled L2 weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: i32,
    moments: Vec<(LayerGrad, LayerGrad)>,
}

impl Adam {
    pub fn new(params: &AutoencoderParams, lr: f64, weight_decay: f64) -> Self {
        let zeros = |l: &super::layer::GcnLayer| LayerGrad {
            weight: Array2::zeros(l.weight.raw_dim()),
            bias: Array1::zeros(l.bias.raw_dim()),
        };
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            moments: params.layers().map(|l| (zeros(l), zeros(l))).collect(),
        }
    }

    pub fn step(&mut self, params: &mut AutoencoderParams, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, eps, lr, wd) = (self.beta1, self.beta2, self.eps, self.lr, self.weight_decay);
        let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
            let g = g + wd * *p;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for ((layer, grad), (m, v)) in params
            .layers_mut()
            .zip(grads.layers())
            .zip(self.moments.iter_mut())
        {
            Zip::from(&mut layer.weight)
                .and(&grad.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&grad.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(update);
        }
    }
}
