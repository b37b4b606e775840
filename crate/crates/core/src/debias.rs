//! The subspace debiased estimator
//!
//! ```text
//! γ̂ᵈ = Uᵀθ̂ + Gᵀ Xᵀ (y − Xθ̂) / n
//! ```
//!
//! together with its covariance proxy `Q = (σ̂²/n)(GᵀΣ̂G + 10⁻⁴ I)` and the
//! studentizing scales `D_i = Q_ii^{-1/2}`.

use ndarray::{Array1, Array2};

use crate::data::Dataset;
use crate::decorrelate::{Decorrelator, Subspace};
use crate::error::{Error, Result};
use crate::scaled_lasso::ScaledLassoFit;

/// Ridge added to `GᵀΣ̂G`; it caps every `D_i` at `100 √n / σ̂`.
pub const Q_RIDGE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedEstimate {
    pub gamma_d: Array1<f64>,
    pub q: Array2<f64>,
    pub d: Array1<f64>,
    pub sigma_hat: f64,
    /// Sample size the estimate was built from.
    pub n: usize,
}

impl DebiasedEstimate {
    pub fn k(&self) -> usize {
        self.gamma_d.len()
    }

    /// `gᵢᵀ Σ̂ gᵢ`, recovered from `Q`.
    pub fn g_sigma_g(&self, i: usize) -> f64 {
        self.q[[i, i]] * self.n as f64 / (self.sigma_hat * self.sigma_hat) - Q_RIDGE
    }
}

/// `√n (γ̂ᵈ − Uᵀθ₀) = Z + Δ`, split into its noise and bias parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub z: Array1<f64>,
    pub delta: Array1<f64>,
}

fn check_dims(data: &Dataset, fit: &ScaledLassoFit, u: &Subspace, g: &Decorrelator) -> Result<()> {
    let p = data.p();
    if fit.theta_hat.len() != p || u.p() != p || g.g.nrows() != p || g.g.ncols() != u.k() {
        return Err(Error::dims(format!(
            "p = {p}, θ̂ has length {}, U is {}x{}, G is {}x{}",
            fit.theta_hat.len(),
            u.p(),
            u.k(),
            g.g.nrows(),
            g.g.ncols()
        )));
    }
    Ok(())
}

pub fn debias(
    fit: &ScaledLassoFit,
    data: &Dataset,
    u: &Subspace,
    g: &Decorrelator,
) -> Result<DebiasedEstimate> {
    check_dims(data, fit, u, g)?;
    let n = data.n();
    let nf = n as f64;
    let resid = &data.y - &data.x.dot(&fit.theta_hat);
    let correction = g.g.t().dot(&data.x.t().dot(&resid)) / nf;
    let gamma_d = u.project(fit.theta_hat.view()) + correction;

    // GᵀΣ̂G = (XG)ᵀ(XG)/n.
    let xg = data.x.dot(&g.g);
    let mut q = xg.t().dot(&xg) / nf;
    for i in 0..q.nrows() {
        q[[i, i]] += Q_RIDGE;
    }
    q *= fit.sigma_hat * fit.sigma_hat / nf;
    let d = q.diag().mapv(|v| 1.0 / v.sqrt());
    Ok(DebiasedEstimate {
        gamma_d,
        q,
        d,
        sigma_hat: fit.sigma_hat,
        n,
    })
}

/// `Z = GᵀXᵀ(y − Xθ₀)/√n` and `Δ = √n (GᵀΣ̂ − Uᵀ)(θ₀ − θ̂)`.
pub fn decompose(
    est: &DebiasedEstimate,
    data: &Dataset,
    fit: &ScaledLassoFit,
    u: &Subspace,
    g: &Decorrelator,
) -> Result<Decomposition> {
    check_dims(data, fit, u, g)?;
    if est.k() != u.k() {
        return Err(Error::dims("estimate and subspace disagree on k"));
    }
    let truth = data.truth.as_ref().ok_or(Error::MissingTruth)?;
    let sqrt_n = (data.n() as f64).sqrt();
    let noise = &data.y - &data.x.dot(&truth.theta0);
    let z = g.g.t().dot(&data.x.t().dot(&noise)) / sqrt_n;
    let err = &truth.theta0 - &fit.theta_hat;
    let gram_err = data.x.t().dot(&data.x.dot(&err)) / data.n() as f64;
    let delta = (g.g.t().dot(&gram_err) - u.project(err.view())) * sqrt_n;
    Ok(Decomposition { z, delta })
}
