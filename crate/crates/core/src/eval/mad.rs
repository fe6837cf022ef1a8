use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};

/// Mean average cosine distance over all ordered pairs of distinct rows.
///
/// For each non-zero row the mean of `1 − cos` to every other non-zero row
/// is taken, then those means are averaged. Zero rows take no part.
pub fn mad(rep: &ArrayView2<f64>) -> Result<f64> {
    let units: Vec<Array1<f64>> = rep
        .outer_iter()
        .filter_map(|r| {
            let n = r.dot(&r).sqrt();
            (n > 0.0).then(|| r.mapv(|v| v / n))
        })
        .collect();
    let m = units.len();
    if m < 2 {
        return Err(Error::input(format!(
            "MAD needs at least two non-zero rows, found {m}"
        )));
    }
    let mut total = Array1::<f64>::zeros(rep.ncols());
    for u in &units {
        total += u;
    }
    // Σ_{j≠i} cos(i, j) = u_i · Σ_j u_j − 1.
    let per_node_sum: f64 = units
        .iter()
        .map(|u| {
            let cos_sum = u.dot(&total) - u.dot(u);
            1.0 - cos_sum / (m - 1) as f64
        })
        .sum();
    Ok(per_node_sum / m as f64)
}
