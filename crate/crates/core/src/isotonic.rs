//! Least-squares isotonic regression by pool-adjacent-violators.

use ndarray::{Array1, ArrayView1};

/// Euclidean projection of `v` onto `{θ : θ₁ ≤ θ₂ ≤ … ≤ θ_p}`.
pub fn isotonic(v: ArrayView1<f64>) -> Array1<f64> {
    // Blocks of (mean, weight), merged while they violate monotonicity.
    let mut means: Vec<f64> = Vec::with_capacity(v.len());
    let mut weights: Vec<usize> = Vec::with_capacity(v.len());
    for &x in v {
        let mut m = x;
        let mut w = 1usize;
        while let Some(&last) = means.last() {
            if last <= m {
                break;
            }
            let lw = weights.pop().unwrap();
            means.pop();
            m = (last * lw as f64 + m * w as f64) / (lw + w) as f64;
            w += lw;
        }
        means.push(m);
        weights.push(w);
    }
    let mut out = Array1::zeros(v.len());
    let mut i = 0;
    for (m, w) in means.iter().zip(&weights) {
        out.slice_mut(ndarray::s![i..i + w]).fill(*m);
        i += w;
    }
    out
}
