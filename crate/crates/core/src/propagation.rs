//! Feature propagation: diffuse features over `D^{-1/2} A D^{-1/2}` and
//! reset the observed entries after every step.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::graph::NormalizedAdjacency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpConfig {
    pub max_iters: usize,
    /// Early stop when the largest entry change drops below this; 0 disables it.
    pub tolerance: f64,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig {
            max_iters: 40,
            tolerance: 1e-6,
        }
    }
}

impl FpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::input("fp max_iters must be >= 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::input("fp tolerance must be >= 0"));
        }
        Ok(())
    }
}

/// Result of a propagation run with its convergence history.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub values: Array2<f64>,
    pub iterations: usize,
    /// Max-abs change of each iterate relative to the previous one.
    pub deltas: Vec<f64>,
}

/// Impute the unknown entries of `x` by propagation over `adj`.
///
/// Known entries come back bit-identical; unknown entries start at 0.
pub fn propagate(x: &FeatureTable, adj: &NormalizedAdjacency, cfg: &FpConfig) -> Result<Array2<f64>> {
    Ok(propagate_traced(x, adj, cfg)?.values)
}

pub fn propagate_traced(
    x: &FeatureTable,
    adj: &NormalizedAdjacency,
    cfg: &FpConfig,
) -> Result<Propagation> {
    cfg.validate()?;
    if adj.num_nodes() != x.num_nodes() {
        return Err(Error::input(format!(
            "propagation graph has {} nodes, features have {} rows",
            adj.num_nodes(),
            x.num_nodes()
        )));
    }
    let known = x.known();
    let mut cur = x.values().clone();
    let mut next = Array2::zeros(cur.raw_dim());
    let mut deltas = Vec::new();
    let fully_known = known.iter().all(|&k| k);
    for _ in 0..cfg.max_iters {
        if fully_known {
            deltas.push(0.0);
            break;
        }
        adj.spmm_into(&cur.view(), &mut next)?;
        let mut delta = 0.0f64;
        Zip::from(&mut next)
            .and(&cur)
            .and(known)
            .and(x.values())
            .for_each(|n, &c, &k, &orig| {
                if k {
                    *n = orig;
                } else {
                    delta = delta.max((*n - c).abs());
                }
            });
        std::mem::swap(&mut cur, &mut next);
        deltas.push(delta);
        if cfg.tolerance > 0.0 && delta < cfg.tolerance {
            break;
        }
    }
    Ok(Propagation {
        values: cur,
        iterations: deltas.len(),
        deltas,
    })
}

/// `½ Σ_{u~v} ‖x_u/√d_u − x_v/√d_v‖²` over undirected edges, with degrees
/// read off the operator's row lengths.
pub fn dirichlet_energy(x: &ArrayView2<f64>, adj: &NormalizedAdjacency) -> Result<f64> {
    if x.nrows() != adj.num_nodes() {
        return Err(Error::input("dirichlet_energy: row count mismatch"));
    }
    let inv_sqrt: Vec<f64> = (0..adj.num_nodes())
        .map(|u| {
            let d = adj.row(u).count();
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();
    let mut total = 0.0;
    for u in 0..adj.num_nodes() {
        for (v, _) in adj.row(u) {
            if v <= u {
                continue;
            }
            total += x
                .row(u)
                .iter()
                .zip(x.row(v))
                .map(|(&a, &b)| {
                    let d = a * inv_sqrt[u] - b * inv_sqrt[v];
                    d * d
                })
                .sum::<f64>();
        }
    }
    Ok(0.5 * total)
}
