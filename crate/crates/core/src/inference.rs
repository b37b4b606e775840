//! The testing procedure (split, select a direction, debias on the held-out
//! half, project, compare against a Bonferroni-style normal threshold), the
//! analytic power bound, and confidence intervals for linear and squared-norm
//! functionals.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, RngSeed};
use crate::debias::{debias, DebiasedEstimate, Q_RIDGE};
use crate::decorrelate::{self, default_mu, Decorrelator, QpOptions, Subspace};
use crate::error::{Error, Result, StageExt};
use crate::hypothesis::{project, threshold_s, HypothesisSet, ProjectionResult};
use crate::num::{cholesky, cholesky_solve, normal_sf, z_value};
use crate::scaled_lasso::{self, default_lambda, LassoOptions, ScaledLassoFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerQuery {
    pub alpha: f64,
    /// Standardized separation `√n η / (σ m₀)`.
    pub x: f64,
    pub k: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `F(α, x, k) = 1 − k{Φ(x + z) − Φ(x − z)}` with `z = Φ⁻¹(1 − α/(2k))`.
///
/// Evaluated through upper tails so that values near 1 keep their precision.
/// For `k > 1` and small `x` the bound is negative, i.e. vacuous.
pub fn power_f(q: &PowerQuery) -> Result<f64> {
    check_alpha(q.alpha)?;
    if q.k == 0 {
        return Err(Error::domain("power bound needs k >= 1"));
    }
    if !(q.x >= 0.0) {
        return Err(Error::domain(format!(
            "power bound needs x >= 0, got {}",
            q.x
        )));
    }
    let k = q.k as f64;
    let z = z_value(q.alpha / (2.0 * k))?;
    Ok(1.0 - k * (normal_sf(q.x - z) - normal_sf(q.x + z)))
}

/// `m₀ = max_i (uᵢᵀ Σ⁻¹ uᵢ + 10⁻⁴)^{1/2}`.
pub fn m0(sigma: ArrayView2<f64>, u: &Subspace) -> Result<f64> {
    if sigma.nrows() != u.p() || sigma.ncols() != u.p() {
        return Err(Error::dims(format!(
            "Σ is {}x{}, U lives in dimension {}",
            sigma.nrows(),
            sigma.ncols(),
            u.p()
        )));
    }
    let l = cholesky(sigma)?;
    Ok((0..u.k())
        .map(|i| {
            let ui = u.column(i);
            (ui.dot(&cholesky_solve(l.view(), ui)) + Q_RIDGE).sqrt()
        })
        .fold(0.0f64, f64::max))
}

/// Uniformly random halves of sizes `⌊n/2⌋` and `⌈n/2⌉`.
pub fn split(data: &Dataset, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    let n = data.n();
    if n < 4 {
        return Err(Error::domain(format!("splitting needs n >= 4, got {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed.rng());
    let (a, b) = idx.split_at_mut(n / 2);
    a.sort_unstable();
    b.sort_unstable();
    Ok((data.subset(a), data.subset(b)))
}

/// The direction along which the pilot estimate is farthest from the null.
///
/// Convex sets use the normalized projection residual, beta-min picks the
/// coordinate with the largest thresholding gap, and a pilot already inside
/// the null falls back to `e₁`.
pub fn select_subspace(set: &HypothesisSet, theta1: ArrayView1<f64>) -> Result<Subspace> {
    let p = theta1.len();
    if p == 0 || theta1.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("pilot estimate must be finite and nonempty"));
    }
    let fallback = || Subspace::basis_vector(p, 0);
    match set {
        HypothesisSet::LinearFunctional { xi, .. } => {
            if xi.len() != p {
                return Err(Error::dims(format!("ξ has length {}, p = {p}", xi.len())));
            }
            Subspace::unit(ArrayView1::from(&xi[..]))
        }
        HypothesisSet::BetaMin { c } => {
            let mut best = (0, 0.0);
            for (i, v) in theta1.iter().enumerate() {
                let gap = (v - threshold_s(*v, *c)).abs();
                if gap > best.1 {
                    best = (i, gap);
                }
            }
            Ok(Subspace::basis_vector(p, best.0))
        }
        HypothesisSet::SqNorm { .. } => {
            let norm = theta1.dot(&theta1).sqrt();
            if norm == 0.0 {
                Ok(fallback())
            } else {
                Subspace::unit(theta1)
            }
        }
        _ => {
            let resid = &theta1 - &set.euclidean_projection(theta1)?;
            let scale = 1.0 + theta1.dot(&theta1).sqrt();
            if resid.dot(&resid).sqrt() <= 1e-12 * scale {
                Ok(fallback())
            } else {
                Subspace::unit(resid.view())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Mode {
    /// Select a one-dimensional direction on one half, test on the other.
    Split,
    /// Use the given basis on the full data.
    Fixed(Subspace),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Defaults to `√(2.05 log p / n)` for the sample size at hand.
    pub lambda: Option<f64>,
    /// Defaults to `2 √(log p / n)`.
    pub mu: Option<f64>,
    pub lasso: LassoOptions,
    pub qp: QpOptions,
    /// Measure `μ` against `|U|_∞` (see [`decorrelate::build_relative`]);
    /// needed for dense directions such as eigenvectors.
    pub relative_mu: bool,
    /// Drives the random split.
    pub seed: RngSeed,
}

impl PipelineConfig {
    pub fn split(seed: RngSeed) -> Self {
        Self {
            mode: Mode::Split,
            lambda: None,
            mu: None,
            lasso: LassoOptions::default(),
            qp: QpOptions::default(),
            relative_mu: false,
            seed,
        }
    }

    pub fn fixed(u: Subspace) -> Self {
        Self {
            mode: Mode::Fixed(u),
            ..Self::split(RngSeed::new(0, 0))
        }
    }

    pub fn lambda_for(&self, n: usize, p: usize) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(n, p))
    }

    pub fn mu_for(&self, n: usize, p: usize) -> f64 {
        self.mu.unwrap_or_else(|| default_mu(n, p))
    }

    /// Builds the decorrelator for `Σ̂` (from `n` samples) and `u`.
    pub fn decorrelator(
        &self,
        sigma_hat: ArrayView2<f64>,
        u: &Subspace,
        n: usize,
    ) -> Result<Decorrelator> {
        let mu = self.mu_for(n, sigma_hat.nrows());
        if self.relative_mu {
            decorrelate::build_relative(sigma_hat, u, mu, RELATIVE_MU_TOL, &self.qp)
        } else {
            decorrelate::build(sigma_hat, u, mu, &self.qp)
        }
    }
}

/// Bracket ratio for the relative-`μ` search.
pub const RELATIVE_MU_TOL: f64 = 0.05;

/// Everything computed on the estimation sample.
#[derive(Debug, Clone)]
pub struct Stage2 {
    pub subspace: Subspace,
    pub fit: ScaledLassoFit,
    pub decorrelator: Decorrelator,
    pub estimate: DebiasedEstimate,
    /// The first-half fit, in split mode.
    pub pilot: Option<ScaledLassoFit>,
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub t_n: f64,
    pub threshold: f64,
    pub reject: bool,
    pub alpha: f64,
    pub k: usize,
    pub mu_used: Vec<f64>,
    pub sigma_hat: f64,
    pub projection: ProjectionResult,
    pub stage2: Stage2,
}

/// Threshold `z_{α/(2k)}` and the decision `T_n ≥ threshold`.
pub fn decide(t_n: f64, alpha: f64, k: usize) -> Result<(f64, bool)> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let threshold = z_value(alpha / (2.0 * k as f64))?;
    Ok((threshold, t_n >= threshold))
}

/// Fits, decorrelates and debiases `data` along `u`.
pub fn estimate_on(data: &Dataset, u: Subspace, cfg: &PipelineConfig) -> Result<Stage2> {
    let (n, p) = (data.n(), data.p());
    let fit = scaled_lasso::fit(data, cfg.lambda_for(n, p), &cfg.lasso).stage("scaled lasso")?;
    let sigma_hat = data.gram();
    let decorrelator = cfg
        .decorrelator(sigma_hat.view(), &u, n)
        .stage("decorrelate")?;
    let estimate = debias(&fit, data, &u, &decorrelator).stage("debias")?;
    Ok(Stage2 {
        subspace: u,
        fit,
        decorrelator,
        estimate,
        pilot: None,
    })
}

/// Like [`estimate_on`] but with a decorrelator built earlier for the same
/// design, as when only the noise is resampled.
pub fn estimate_with(
    data: &Dataset,
    u: Subspace,
    decorrelator: Decorrelator,
    cfg: &PipelineConfig,
) -> Result<Stage2> {
    let fit = scaled_lasso::fit(data, cfg.lambda_for(data.n(), data.p()), &cfg.lasso)
        .stage("scaled lasso")?;
    let estimate = debias(&fit, data, &u, &decorrelator).stage("debias")?;
    Ok(Stage2 {
        subspace: u,
        fit,
        decorrelator,
        estimate,
        pilot: None,
    })
}

/// Split-mode first stage: pilot fit on half one and the selected direction.
fn pilot(
    data: &Dataset,
    set: &HypothesisSet,
    cfg: &PipelineConfig,
) -> Result<(ScaledLassoFit, Subspace, Dataset)> {
    let (first, second) = split(data, cfg.seed).stage("split")?;
    let fit = scaled_lasso::fit(&first, cfg.lambda_for(first.n(), first.p()), &cfg.lasso)
        .stage("pilot lasso")?;
    let u = select_subspace(set, fit.theta_hat.view()).stage("select subspace")?;
    Ok((fit, u, second))
}

pub fn run_test(
    data: &Dataset,
    set: &HypothesisSet,
    alpha: f64,
    cfg: &PipelineConfig,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let stage2 = match &cfg.mode {
        Mode::Fixed(u) => estimate_on(data, u.clone(), cfg)?,
        Mode::Split => {
            let (pilot_fit, u, second) = pilot(data, set, cfg)?;
            let mut s = estimate_on(&second, u, cfg)?;
            s.pilot = Some(pilot_fit);
            s
        }
    };
    test_estimate(stage2, set, alpha)
}

/// The decision for an already debiased estimate.
pub fn test_estimate(stage2: Stage2, set: &HypothesisSet, alpha: f64) -> Result<TestOutcome> {
    let est = &stage2.estimate;
    let projection =
        project(set, est.gamma_d.view(), est.d.view(), &stage2.subspace).stage("project")?;
    let k = est.k();
    let (threshold, reject) = decide(projection.t_n, alpha, k)?;
    Ok(TestOutcome {
        t_n: projection.t_n,
        threshold,
        reject,
        alpha,
        k,
        mu_used: stage2.decorrelator.mu_used.clone(),
        sigma_hat: est.sigma_hat,
        projection,
        stage2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    /// Set when the interval could not use the data (zero pilot estimate).
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `‖ξ‖ (γ̂ᵈ ∓ (σ̂/√n) √(gᵀΣ̂g) z_{α/2})`.
pub fn linear_interval(
    gamma_d: f64,
    sigma_hat: f64,
    n: usize,
    g_sigma_g: f64,
    xi_norm: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let half = sigma_hat / (n as f64).sqrt() * g_sigma_g.max(0.0).sqrt() * z_value(alpha / 2.0)?;
    Ok(ConfidenceInterval {
        lo: xi_norm * (gamma_d - half),
        hi: xi_norm * (gamma_d + half),
        level: 1.0 - alpha,
        degenerate: false,
    })
}

/// Interval for `ξᵀθ₀`, using `u = ξ/‖ξ‖` on the full sample.
pub fn ci_linear(
    data: &Dataset,
    xi: ArrayView1<f64>,
    alpha: f64,
    cfg: &PipelineConfig,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    if xi.len() != data.p() {
        return Err(Error::dims(format!(
            "ξ has length {}, p = {}",
            xi.len(),
            data.p()
        )));
    }
    let u = Subspace::unit(xi)?;
    let s = estimate_on(data, u, cfg)?;
    linear_from_stage(&s, xi.dot(&xi).sqrt(), alpha)
}

pub fn linear_from_stage(s: &Stage2, xi_norm: f64, alpha: f64) -> Result<ConfidenceInterval> {
    linear_interval(
        s.estimate.gamma_d[0],
        s.estimate.sigma_hat,
        s.estimate.n,
        s.decorrelator.objective[0],
        xi_norm,
        alpha,
    )
}

/// The set `{c ≥ 0 : |m − c| ≤ L + δ√c}` as `[lo, hi]`. Each side is a
/// quadratic in `√c`: `c − m ≤ L + δ√c` bounds `√c` between
/// `(δ ∓ √(δ² + 4(m + L)))/2`, and `m − c ≤ L + δ√c` needs
/// `√c ≥ (√(δ² + 4(m − L)) − δ)/2`. Discriminants are clipped at zero.
pub fn sqnorm_endpoints(m: f64, l: f64, delta: f64) -> (f64, f64) {
    let disc = |v: f64| (delta * delta + 4.0 * v).max(0.0).sqrt();
    let upper = disc(m + l);
    let lo = (0.5 * (disc(m - l) - delta))
        .max(0.5 * (delta - upper))
        .max(0.0)
        .powi(2);
    let hi = (0.5 * (upper + delta)).powi(2);
    (lo.min(hi), lo.max(hi))
}

/// Slack `δ = A_n √(s₀ log p / n)`.
pub fn sqnorm_delta(a_n: f64, s0: usize, p: usize, n: usize) -> f64 {
    a_n * (s0 as f64 * (p as f64).ln() / n as f64).sqrt()
}

/// Default `A_n = 2 √(log n)`.
pub fn default_a_n(n: usize) -> f64 {
    2.0 * (n as f64).ln().sqrt()
}

/// Interval for `‖θ₀‖²` through the split procedure with `u = θ̂⁽¹⁾/‖θ̂⁽¹⁾‖`.
pub fn ci_sqnorm(
    data: &Dataset,
    alpha: f64,
    s0: usize,
    a_n: f64,
    cfg: &PipelineConfig,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    if !(a_n > 0.0) {
        return Err(Error::domain(format!("A_n must be positive, got {a_n}")));
    }
    let (pilot_fit, u, second) = pilot(data, &HypothesisSet::SqNorm { c: 0.0 }, cfg)?;
    // The slack bounds the pilot's error, so it uses the pilot's sample size.
    let n1 = data.n() - second.n();
    let delta = sqnorm_delta(a_n, s0, data.p(), n1);
    let norm1 = pilot_fit.theta_hat.dot(&pilot_fit.theta_hat).sqrt();
    if norm1 == 0.0 {
        return Ok(ConfidenceInterval {
            lo: 0.0,
            hi: delta * delta,
            level: 1.0 - alpha,
            degenerate: true,
        });
    }
    let s = estimate_on(&second, u, cfg)?;
    sqnorm_from_stage(&s, norm1, delta, alpha)
}

pub fn sqnorm_from_stage(
    s: &Stage2,
    pilot_norm: f64,
    delta: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let unit = linear_interval(
        s.estimate.gamma_d[0],
        s.estimate.sigma_hat,
        s.estimate.n,
        s.decorrelator.objective[0],
        pilot_norm,
        alpha,
    )?;
    let m = pilot_norm * s.estimate.gamma_d[0];
    let l = 0.5 * unit.width();
    let (lo, hi) = sqnorm_endpoints(m, l, delta);
    Ok(ConfidenceInterval {
        lo,
        hi,
        level: 1.0 - alpha,
        // No c satisfies the inequality; the endpoints collapse to the
        // point of least violation.
        degenerate: m + l < -0.25 * delta * delta,
    })
}

/// Fraction of intervals containing `truth`, endpoints included.
pub fn coverage(intervals: &[ConfidenceInterval], truth: f64) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::Empty(
            "coverage of an empty list of intervals".into(),
        ));
    }
    let hits = intervals.iter().filter(|ci| ci.contains(truth)).count();
    Ok(hits as f64 / intervals.len() as f64)
}

/// `√n (γ̂ᵈ − Uᵀθ₀)` studentized by `D`, one entry per direction.
pub fn studentized(stage: &Stage2, theta0: ArrayView1<f64>) -> Array1<f64> {
    let target = stage.subspace.project(theta0);
    (&stage.estimate.gamma_d - &target) * &stage.estimate.d
}
