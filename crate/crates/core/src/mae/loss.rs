//! Scaled cosine error between reconstructions and targets.

use ndarray::{Array2, ArrayView1, ArrayView2, Zip};

use crate::error::{Error, Result};

fn norm(v: &ArrayView1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn check(pred: &ArrayView2<f64>, target: &ArrayView2<f64>) -> Result<()> {
    if pred.dim() != target.dim() {
        return Err(Error::input(format!(
            "sce: prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    Ok(())
}

/// `(1/|V|) Σ_i (1 − cos(pred_i, target_i))^γ`.
///
/// Rows where either side has zero norm count as `cos = 0`.
pub fn sce_loss(pred: &ArrayView2<f64>, target: &ArrayView2<f64>, gamma: f64) -> Result<f64> {
    check(pred, target)?;
    let n = pred.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (p, t) in pred.outer_iter().zip(target.outer_iter()) {
        let (np, nt) = (norm(&p), norm(&t));
        let cos = if np == 0.0 || nt == 0.0 {
            0.0
        } else {
            (p.dot(&t) / (np * nt)).clamp(-1.0, 1.0)
        };
        total += (1.0 - cos).powf(gamma);
    }
    Ok(total / n as f64)
}

/// Gradient of [`sce_loss`] with respect to `pred`. Zero-norm rows get zero gradient.
pub fn sce_loss_grad(
    pred: &ArrayView2<f64>,
    target: &ArrayView2<f64>,
    gamma: f64,
) -> Result<Array2<f64>> {
    check(pred, target)?;
    let n = pred.nrows().max(1) as f64;
    let mut grad = Array2::zeros(pred.raw_dim());
    Zip::from(grad.rows_mut())
        .and(pred.rows())
        .and(target.rows())
        .for_each(|mut g, p, t| {
            let (np, nt) = (norm(&p), norm(&t));
            if np == 0.0 || nt == 0.0 {
                return;
            }
            let cos = p.dot(&t) / (np * nt);
            let base = 1.0 - cos;
            // d/dp (1-cos)^γ = -γ (1-cos)^{γ-1} · (t/(|p||t|) − cos·p/|p|²)
            let slope = if base > 0.0 {
                -gamma * base.powf(gamma - 1.0)
            } else if gamma == 1.0 {
                -1.0
            } else {
                0.0
            };
            let outer = slope / n;
            let a = outer / (np * nt);
            let b = -outer * cos / (np * np);
            Zip::from(&mut g).and(&p).and(&t).for_each(|g, &pv, &tv| {
                *g = a * tv + b * pv;
            });
        });
    Ok(grad)
}
