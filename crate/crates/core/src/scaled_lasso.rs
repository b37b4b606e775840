//! Scaled Lasso: joint estimation of the coefficients and the noise level by
//! minimizing
//!
//! ```text
//! ‖y − Xθ‖² / (2σn) + σ/2 + λ‖θ‖₁
//! ```
//!
//! over `θ` and `σ > 0`. The objective is jointly convex; we alternate an
//! exact `σ` update with coordinate-descent Lasso solves at penalty `σλ`,
//! warm-starting each solve from the previous coefficients.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    /// Relative change in `σ` between outer iterations.
    pub tol_sigma: f64,
    /// Largest absolute coordinate update in a full sweep.
    pub tol_cd: f64,
    pub max_outer: usize,
    /// Coordinate sweeps allowed per θ-step.
    pub max_sweeps: usize,
    pub sigma_floor: f64,
    /// Penalize `|θ_j|` by the column scale `‖X_j‖/√n`, which is the same as
    /// fitting on standardized columns and mapping back.
    pub standardize: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol_sigma: 1e-6,
            tol_cd: 1e-8,
            max_outer: 100,
            max_sweeps: 1000,
            sigma_floor: 1e-8,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLassoFit {
    pub theta_hat: Array1<f64>,
    pub sigma_hat: f64,
    pub lambda: f64,
    /// Outer (σ) iterations performed.
    pub iterations: usize,
    pub kkt_inf_norm: f64,
    pub converged: bool,
    /// Per-coordinate penalty scale; `None` means all ones.
    pub penalty_weights: Option<Array1<f64>>,
    /// Columns with zero sample variance. Their coefficients stay at zero.
    pub zero_variance_columns: Vec<usize>,
    /// Objective after every θ-step and every σ-step, starting at `θ = 0`.
    pub objective_trace: Vec<f64>,
}

/// `√(2.05 log p / n)`.
pub fn default_lambda(n: usize, p: usize) -> f64 {
    (2.05 * (p as f64).ln() / n as f64).sqrt()
}

pub fn objective(
    data: &Dataset,
    theta: &Array1<f64>,
    sigma: f64,
    lambda: f64,
    weights: Option<&Array1<f64>>,
) -> f64 {
    let r = &data.y - &data.x.dot(theta);
    objective_from_residual(r.view(), theta, sigma, lambda, weights)
}

fn objective_from_residual(
    r: ArrayView1<f64>,
    theta: &Array1<f64>,
    sigma: f64,
    lambda: f64,
    weights: Option<&Array1<f64>>,
) -> f64 {
    let n = r.len() as f64;
    let l1 = match weights {
        None => theta.iter().map(|v| v.abs()).sum::<f64>(),
        Some(w) => theta.iter().zip(w).map(|(v, w)| w * v.abs()).sum(),
    };
    r.dot(&r) / (2.0 * sigma * n) + 0.5 * sigma + lambda * l1
}

pub fn fit(data: &Dataset, lambda: f64, opts: &LassoOptions) -> Result<ScaledLassoFit> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let (n, p) = data.x.dim();
    if n < 2 {
        return Err(Error::domain("scaled lasso needs n >= 2"));
    }
    let nf = n as f64;
    // Row j holds column j of X, contiguous.
    let xt: Array2<f64> = data.x.t().as_standard_layout().into_owned();
    let colsq: Array1<f64> = xt.rows().into_iter().map(|c| c.dot(&c) / nf).collect();
    let zero_variance_columns: Vec<usize> = (0..p).filter(|&j| !(colsq[j] > 0.0)).collect();
    let weights = opts.standardize.then(|| colsq.mapv(f64::sqrt));

    let mut theta = Array1::<f64>::zeros(p);
    let mut r = data.y.clone();
    let sigma_step = |r: &Array1<f64>| (r.dot(r) / nf).sqrt().max(opts.sigma_floor);
    let mut sigma = sigma_step(&r);
    let mut trace = vec![objective_from_residual(
        r.view(),
        &theta,
        sigma,
        lambda,
        weights.as_ref(),
    )];

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_outer {
        iterations += 1;
        let solver = CoordinateDescent {
            xt: &xt,
            colsq: &colsq,
            weights: weights.as_ref(),
            n: nf,
        };
        let inner_ok = solver.solve(&mut theta, &mut r, sigma * lambda, opts);
        // Resynchronize the residual against accumulated rounding.
        r = &data.y - &data.x.dot(&theta);
        trace.push(objective_from_residual(
            r.view(),
            &theta,
            sigma,
            lambda,
            weights.as_ref(),
        ));

        let next = sigma_step(&r);
        let rel = (next - sigma).abs() / sigma;
        sigma = next;
        trace.push(objective_from_residual(
            r.view(),
            &theta,
            sigma,
            lambda,
            weights.as_ref(),
        ));
        if inner_ok && rel <= opts.tol_sigma {
            converged = true;
            break;
        }
    }

    let mut out = ScaledLassoFit {
        theta_hat: theta,
        sigma_hat: sigma,
        lambda,
        iterations,
        kkt_inf_norm: 0.0,
        converged,
        penalty_weights: weights,
        zero_variance_columns,
        objective_trace: trace,
    };
    out.kkt_inf_norm = kkt_check(&out, data);
    Ok(out)
}

struct CoordinateDescent<'a> {
    xt: &'a Array2<f64>,
    colsq: &'a Array1<f64>,
    weights: Option<&'a Array1<f64>>,
    n: f64,
}

impl CoordinateDescent<'_> {
    /// Lasso at fixed penalty `t`: `‖r‖²/(2n) + t Σ w_j |θ_j|`. Alternates full
    /// sweeps with sweeps over the current support until a full sweep moves no
    /// coordinate by more than `tol_cd`.
    fn solve(
        &self,
        theta: &mut Array1<f64>,
        r: &mut Array1<f64>,
        t: f64,
        opts: &LassoOptions,
    ) -> bool {
        let p = theta.len();
        let all: Vec<usize> = (0..p).collect();
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            if self.sweep(&all, theta, r, t) <= opts.tol_cd {
                return true;
            }
            let active: Vec<usize> = (0..p).filter(|&j| theta[j] != 0.0).collect();
            while sweeps < opts.max_sweeps {
                sweeps += 1;
                if self.sweep(&active, theta, r, t) <= opts.tol_cd {
                    break;
                }
            }
        }
        false
    }

    fn sweep(&self, coords: &[usize], theta: &mut Array1<f64>, r: &mut Array1<f64>, t: f64) -> f64 {
        let mut max_step = 0.0f64;
        for &j in coords {
            let cj = self.colsq[j];
            if !(cj > 0.0) {
                continue;
            }
            let col = self.xt.row(j);
            let old = theta[j];
            let rho = col.dot(r) / self.n + cj * old;
            let pen = self.weights.map_or(t, |w| t * w[j]);
            let new = soft_threshold(rho, pen) / cj;
            if new != old {
                r.scaled_add(old - new, &col);
                theta[j] = new;
                max_step = max_step.max((new - old).abs());
            }
        }
        max_step
    }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Largest violation of the stationarity conditions of the scaled objective
/// at the returned `(θ̂, σ̂)`.
pub fn kkt_check(fit: &ScaledLassoFit, data: &Dataset) -> f64 {
    let n = data.n() as f64;
    let r = &data.y - &data.x.dot(&fit.theta_hat);
    let grad = data.x.t().dot(&r) / (n * fit.sigma_hat);
    let mut worst = 0.0f64;
    for (j, (&g, &t)) in grad.iter().zip(fit.theta_hat.iter()).enumerate() {
        let lam = fit
            .penalty_weights
            .as_ref()
            .map_or(fit.lambda, |w| fit.lambda * w[j]);
        let v = if t != 0.0 {
            (g - lam * t.signum()).abs()
        } else {
            (g.abs() - lam).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
