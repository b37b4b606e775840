//! Decorrelating matrix for the debiased estimator.
//!
//! For each target direction `u` we solve
//!
//! ```text
//! minimize gᵀ Σ̂ g   subject to   ‖Σ̂ g − u‖_∞ ≤ μ.
//! ```
//!
//! Its Lagrange dual is, up to sign and scale, the Lasso-type problem
//!
//! ```text
//! minimize ½ mᵀ Σ̂ m − uᵀ m + μ ‖m‖₁
//! ```
//!
//! and the dual minimizer `m` is itself a primal optimum: stationarity of the
//! dual gives `Σ̂ m − u = −μ s` with `s ∈ ∂‖m‖₁`, which is primal feasibility,
//! and complementary slackness holds coordinatewise. We run cyclic coordinate
//! descent on the dual and stop on the KKT residual, which bounds the
//! constraint violation directly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaled_lasso::soft_threshold;

/// An orthonormal basis `U = [u₁ | … | u_k]` of the tested subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    u: Array2<f64>,
    identity: bool,
}

impl Subspace {
    pub const ORTHONORMAL_TOL: f64 = 1e-8;

    pub fn new(u: Array2<f64>) -> Result<Self> {
        let (p, k) = u.dim();
        if k == 0 || k > p {
            return Err(Error::domain(format!(
                "subspace needs 1 <= k <= p, got k = {k}, p = {p}"
            )));
        }
        let gram = u.t().dot(&u);
        let resid = gram
            .indexed_iter()
            .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0f64, f64::max);
        if !(resid <= Self::ORTHONORMAL_TOL) {
            return Err(Error::domain(format!(
                "basis is not orthonormal: |UᵀU − I|_max = {resid:.3e}"
            )));
        }
        let identity = k == p && u == Array2::<f64>::eye(p);
        Ok(Self { u, identity })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            u: Array2::eye(p),
            identity: true,
        }
    }

    /// The standard basis vector `e_i`, as a one-dimensional subspace.
    pub fn basis_vector(p: usize, i: usize) -> Self {
        let mut u = Array2::zeros((p, 1));
        u[[i, 0]] = 1.0;
        Self {
            u,
            identity: p == 1,
        }
    }

    /// The span of `v`, normalized.
    pub fn unit(v: ArrayView1<f64>) -> Result<Self> {
        let norm = v.dot(&v).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        let u = (&v / norm).insert_axis(Axis(1));
        Self::new(u)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.u.column(i)
    }

    pub fn p(&self) -> usize {
        self.u.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `Uᵀ v`.
    pub fn project(&self, v: ArrayView1<f64>) -> Array1<f64> {
        if self.identity {
            v.to_owned()
        } else {
            self.u.t().dot(&v)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QpOptions {
    /// Largest allowed KKT violation; it bounds the constraint overshoot.
    pub kkt_tol: f64,
    /// Coordinate sweeps per column before declaring a stall; `None` means 50·p.
    pub max_sweeps: Option<usize>,
    /// How many times a stalled column may double its `μ`.
    pub max_escalations: u32,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-9,
            max_sweeps: None,
            max_escalations: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub g: Array1<f64>,
    /// `gᵀ Σ̂ g`.
    pub objective: f64,
    pub mu: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    /// `‖Σ̂ g − u‖_∞`.
    pub constraint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decorrelator {
    /// `G = [g₁ | … | g_k]`, p × k.
    pub g: Array2<f64>,
    pub mu_used: Vec<f64>,
    pub objective: Vec<f64>,
    /// `|Σ̂ G − U|_∞`.
    pub coherence: f64,
}

impl Decorrelator {
    pub fn escalated(&self, mu: f64) -> bool {
        self.mu_used.iter().any(|m| *m > mu)
    }
}

/// `2 √(log p / n)`.
pub fn default_mu(n: usize, p: usize) -> f64 {
    2.0 * ((p as f64).ln() / n as f64).sqrt()
}

pub fn solve_column(
    sigma_hat: ArrayView2<f64>,
    u: ArrayView1<f64>,
    mu: f64,
    opts: &QpOptions,
) -> Result<ColumnSolution> {
    solve_column_indexed(sigma_hat, u, mu, opts, 0)
}

fn solve_column_indexed(
    sigma_hat: ArrayView2<f64>,
    u: ArrayView1<f64>,
    mu: f64,
    opts: &QpOptions,
    column: usize,
) -> Result<ColumnSolution> {
    let p = sigma_hat.nrows();
    if sigma_hat.ncols() != p || u.len() != p {
        return Err(Error::dims(format!(
            "Σ̂ is {}x{} but u has length {}",
            sigma_hat.nrows(),
            sigma_hat.ncols(),
            u.len()
        )));
    }
    if !(mu > 0.0) {
        return Err(Error::domain(format!("mu must be positive, got {mu}")));
    }
    let diag: Vec<f64> = (0..p).map(|j| sigma_hat[[j, j]]).collect();
    let stalled = |residual: f64, sweeps: usize| Error::Stalled {
        column,
        mu,
        residual,
        sweeps,
    };
    // A coordinate with Σ̂_jj = 0 has a zero row, so its constraint reads |u_j| ≤ μ.
    for j in 0..p {
        if !(diag[j] > 0.0) && u[j].abs() > mu {
            return Err(stalled(u[j].abs() - mu, 0));
        }
    }

    let max_sweeps = opts.max_sweeps.unwrap_or(50 * p.max(1));
    let mut m = Array1::<f64>::zeros(p);
    let mut r = Array1::<f64>::zeros(p);
    let all: Vec<usize> = (0..p).collect();
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;

    while sweeps < max_sweeps {
        sweeps += 1;
        cd_sweep(sigma_hat, u, mu, &diag, &all, &mut m, &mut r);
        r = gram_times_sparse(sigma_hat, &m);
        residual = kkt_residual(u, mu, &m, &r);
        if residual <= opts.kkt_tol {
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| m[j] != 0.0).collect();
        while sweeps < max_sweeps {
            sweeps += 1;
            let step = cd_sweep(sigma_hat, u, mu, &diag, &active, &mut m, &mut r);
            if step <= 0.1 * opts.kkt_tol {
                break;
            }
        }
    }
    if residual > opts.kkt_tol {
        return Err(stalled(residual, sweeps));
    }
    let objective = m.dot(&r);
    let constraint = r
        .iter()
        .zip(u.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(ColumnSolution {
        g: m,
        objective,
        mu,
        sweeps,
        kkt_residual: residual,
        constraint,
    })
}

/// One cyclic pass over `coords`. Returns the largest change in `Σ̂_jj m_j`.
fn cd_sweep(
    sigma_hat: ArrayView2<f64>,
    u: ArrayView1<f64>,
    mu: f64,
    diag: &[f64],
    coords: &[usize],
    m: &mut Array1<f64>,
    r: &mut Array1<f64>,
) -> f64 {
    let mut max_step = 0.0f64;
    for &j in coords {
        let d = diag[j];
        if !(d > 0.0) {
            continue;
        }
        let old = m[j];
        let a = u[j] - (r[j] - d * old);
        let new = soft_threshold(a, mu) / d;
        if new != old {
            r.scaled_add(new - old, &sigma_hat.row(j));
            m[j] = new;
            max_step = max_step.max(d * (new - old).abs());
        }
    }
    max_step
}

fn gram_times_sparse(sigma_hat: ArrayView2<f64>, m: &Array1<f64>) -> Array1<f64> {
    let mut r = Array1::zeros(m.len());
    for (j, &v) in m.iter().enumerate() {
        if v != 0.0 {
            r.scaled_add(v, &sigma_hat.row(j));
        }
    }
    r
}

fn kkt_residual(u: ArrayView1<f64>, mu: f64, m: &Array1<f64>, r: &Array1<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.len() {
        let a = r[j] - u[j];
        let v = if m[j] > 0.0 {
            (a + mu).abs()
        } else if m[j] < 0.0 {
            (a - mu).abs()
        } else {
            (a.abs() - mu).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Solves every column of `U`, doubling `μ` for a column that stalls.
pub fn build(
    sigma_hat: ArrayView2<f64>,
    subspace: &Subspace,
    mu: f64,
    opts: &QpOptions,
) -> Result<Decorrelator> {
    let p = sigma_hat.nrows();
    if subspace.p() != p || sigma_hat.ncols() != p {
        return Err(Error::dims(format!(
            "Σ̂ is {}x{} but the subspace lives in dimension {}",
            p,
            sigma_hat.ncols(),
            subspace.p()
        )));
    }
    let solutions: Vec<Result<ColumnSolution>> = (0..subspace.k())
        .into_par_iter()
        .map(|i| {
            let u = subspace.column(i);
            let mut last = None;
            for attempt in 0..=opts.max_escalations {
                let mu_i = mu * 2f64.powi(attempt as i32);
                match solve_column_indexed(sigma_hat, u, mu_i, opts, i) {
                    Ok(sol) => return Ok(sol),
                    Err(e @ Error::Stalled { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect();

    let k = subspace.k();
    let mut g = Array2::zeros((p, k));
    let mut mu_used = Vec::with_capacity(k);
    let mut objective = Vec::with_capacity(k);
    for (i, sol) in solutions.into_iter().enumerate() {
        let sol = sol?;
        g.column_mut(i).assign(&sol.g);
        mu_used.push(sol.mu);
        objective.push(sol.objective);
    }
    let coherence = coherence(sigma_hat, g.view(), subspace.matrix().view())?;
    Ok(Decorrelator {
        g,
        mu_used,
        objective,
        coherence,
    })
}

/// Like [`build`] with `μ` measured relative to the largest entry of `U`:
/// the target is `mu · |U|_∞`, which equals `mu` for standard basis vectors.
/// For dense directions the plain default leaves `g = 0` feasible and the
/// correction vanishes. When the target stalls, `μ` is doubled until it
/// converges and the last bracket is then narrowed geometrically to a ratio of
/// `1 + rel_tol`, so the result sits just above the smallest workable `μ`.
pub fn build_relative(
    sigma_hat: ArrayView2<f64>,
    subspace: &Subspace,
    mu: f64,
    rel_tol: f64,
    opts: &QpOptions,
) -> Result<Decorrelator> {
    if !(rel_tol > 0.0) {
        return Err(Error::domain(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let scale = subspace.matrix().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let target = mu * scale;
    let strict = QpOptions {
        max_escalations: 0,
        ..opts.clone()
    };
    let attempt = |m: f64| match build(sigma_hat, subspace, m, &strict) {
        Ok(d) => Ok(Some(d)),
        Err(Error::Stalled { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    if let Some(d) = attempt(target)? {
        return Ok(d);
    }
    let mut lo = target;
    let mut found = None;
    for _ in 0..opts.max_escalations {
        match attempt(lo * 2.0)? {
            Some(d) => {
                found = Some(d);
                break;
            }
            None => lo *= 2.0,
        }
    }
    let Some(mut best) = found else {
        // Nothing converged: surface the stall at the largest μ tried.
        return build(sigma_hat, subspace, lo, &strict);
    };
    let mut hi = lo * 2.0;
    while hi / lo > 1.0 + rel_tol {
        let mid = (lo * hi).sqrt();
        match attempt(mid)? {
            Some(d) => {
                hi = mid;
                best = d;
            }
            None => lo = mid,
        }
    }
    Ok(best)
}

/// Generalized coherence `|Σ̂ G − U|_∞` (largest absolute entry).
pub fn coherence(
    sigma_hat: ArrayView2<f64>,
    g: ArrayView2<f64>,
    u: ArrayView2<f64>,
) -> Result<f64> {
    if sigma_hat.ncols() != g.nrows() || g.dim() != u.dim() || sigma_hat.nrows() != u.nrows() {
        return Err(Error::dims(format!(
            "coherence needs Σ̂ (p×p), G and U (p×k); got {:?}, {:?}, {:?}",
            sigma_hat.dim(),
            g.dim(),
            u.dim()
        )));
    }
    let sg = sigma_hat.dot(&g);
    Ok(sg
        .iter()
        .zip(u.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max))
}
