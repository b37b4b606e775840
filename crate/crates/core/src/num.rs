//! Numeric primitives: the standard normal distribution, Toeplitz covariances
//! and a Cholesky factorization used to sample Gaussian designs.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots at or below this value make [`cholesky`] report a non-SPD matrix.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Standard normal CDF. Saturates to 0 or 1 for large `|x|`.
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)`, computed without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley step against [`normal_cdf`].
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile needs q in (0, 1), got {q}"
        )));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let x = acklam(q);
    // Refine on the tail that keeps full relative precision.
    let e = if q < 0.5 {
        normal_cdf(x) - q
    } else {
        (1.0 - q) - normal_sf(x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

fn acklam(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.02425;

    let tail = |r: f64| {
        let s = (-2.0 * r.ln()).sqrt();
        (((((C[0] * s + C[1]) * s + C[2]) * s + C[3]) * s + C[4]) * s + C[5])
            / ((((D[0] * s + D[1]) * s + D[2]) * s + D[3]) * s + 1.0)
    };
    if q < LOW {
        tail(q)
    } else if q > 1.0 - LOW {
        -tail(1.0 - q)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Two-sided critical value `z_a = Φ⁻¹(1 - a)`.
pub fn z_value(a: f64) -> Result<f64> {
    normal_quantile(1.0 - a)
}

/// `Σ_ij = ρ^|i-j|`.
pub fn toeplitz_cov(p: usize, rho: f64) -> Result<Array2<f64>> {
    if p == 0 {
        return Err(Error::domain("toeplitz covariance needs p >= 1"));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!(
            "toeplitz covariance needs |rho| < 1, got {rho}"
        )));
    }
    let powers: Vec<f64> = (0..p).map(|d| rho.powi(d as i32)).collect();
    Ok(Array2::from_shape_fn((p, p), |(i, j)| {
        powers[i.abs_diff(j)]
    }))
}

/// Lower-triangular `L` with `L Lᵀ = s`.
pub fn cholesky(s: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = s.dim();
    if rows != cols {
        return Err(Error::dims(format!(
            "cholesky needs a square matrix, got {rows}x{cols}"
        )));
    }
    let p = rows;
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = s[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..p {
            let mut v = s[[i, j]];
            for k in 0..j {
                v -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = v / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: ArrayView2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let p = l.nrows();
    let mut z = b.to_owned();
    for i in 0..p {
        let mut v = z[i];
        for k in 0..i {
            v -= l[[i, k]] * z[k];
        }
        z[i] = v / l[[i, i]];
    }
    for i in (0..p).rev() {
        let mut v = z[i];
        for k in (i + 1)..p {
            v -= l[[k, i]] * z[k];
        }
        z[i] = v / l[[i, i]];
    }
    z
}

/// Population covariance of the design rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceModel {
    Identity { p: usize },
    Toeplitz { p: usize, rho: f64 },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceModel::Identity { p } | CovarianceModel::Toeplitz { p, .. } => *p,
            CovarianceModel::Explicit { matrix } => matrix.len(),
        }
    }

    pub fn matrix(&self) -> Result<Array2<f64>> {
        match self {
            CovarianceModel::Identity { p } => Ok(Array2::eye(*p)),
            CovarianceModel::Toeplitz { p, rho } => toeplitz_cov(*p, *rho),
            CovarianceModel::Explicit { matrix } => {
                let p = matrix.len();
                if matrix.iter().any(|row| row.len() != p) {
                    return Err(Error::dims("explicit covariance must be square"));
                }
                let m = Array2::from_shape_fn((p, p), |(i, j)| matrix[i][j]);
                for i in 0..p {
                    for j in 0..i {
                        if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * (1.0 + m[[i, j]].abs()) {
                            return Err(Error::domain("explicit covariance is not symmetric"));
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    /// Cholesky factor, or `None` for the identity.
    pub fn factor(&self) -> Result<Option<Array2<f64>>> {
        match self {
            CovarianceModel::Identity { .. } => Ok(None),
            other => cholesky(other.matrix()?.view()).map(Some),
        }
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in decreasing
/// order. Each eigenvector's largest-magnitude entry is made positive so the
/// result is deterministic.
pub fn symmetric_eigen_desc(s: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let p = s.nrows();
    let m = nalgebra::DMatrix::from_fn(p, p, |i, j| s[[i, j]]);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Array2::zeros((p, p));
    for (c, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..p {
            vecs[[r, c]] = sign * v[r];
        }
    }
    (values, vecs)
}
