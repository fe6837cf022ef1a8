use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 64;
const SMOOTHING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMethod {
    BinnedKl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub delta: f64,
    pub bins: usize,
    pub method: ShiftMethod,
}

/// Mean over columns of `KL(P_full ‖ P_train)`, each column histogrammed
/// into `bins` equal-width bins over the joint range of both matrices.
pub fn distribution_shift(
    rep_train: &ArrayView2<f64>,
    rep_full: &ArrayView2<f64>,
    bins: usize,
) -> Result<ShiftReport> {
    if rep_train.ncols() != rep_full.ncols() {
        return Err(Error::input("distribution_shift: column counts differ"));
    }
    if bins == 0 || rep_train.nrows() == 0 || rep_full.nrows() == 0 {
        return Err(Error::input("distribution_shift needs bins and rows"));
    }
    let dims = rep_train.ncols();
    let mut total = 0.0;
    for d in 0..dims {
        total += column_kl(rep_full.column(d), rep_train.column(d), bins);
    }
    let delta = if dims == 0 { 0.0 } else { total / dims as f64 };
    if !delta.is_finite() {
        return Err(Error::numeric("distribution_shift", "non-finite divergence"));
    }
    Ok(ShiftReport {
        delta,
        bins,
        method: ShiftMethod::BinnedKl,
    })
}

fn column_kl(p: ArrayView1<f64>, q: ArrayView1<f64>, bins: usize) -> f64 {
    let (lo, hi) = p
        .iter()
        .chain(q.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return 0.0;
    }
    let hp = histogram(p, lo, hi, bins);
    let hq = histogram(q, lo, hi, bins);
    hp.iter()
        .zip(&hq)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

fn histogram(v: ArrayView1<f64>, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = (hi - lo) / bins as f64;
    for &x in v {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    let n = v.len() as f64;
    let smoothed: Vec<f64> = counts.iter().map(|c| c / n + SMOOTHING).collect();
    let z: f64 = smoothed.iter().sum();
    smoothed.into_iter().map(|p| p / z).collect()
}
