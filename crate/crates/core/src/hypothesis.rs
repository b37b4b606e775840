//! Null sets Ω₀ and the weighted-ℓ∞ projection statistic
//!
//! ```text
//! T_n = min_{θ ∈ Ω₀} ‖D (γ̂ᵈ − Uᵀθ)‖_∞
//! ```
//!
//! Closed forms cover the pairings that come up in practice; convex polyhedral
//! sets fall back to an epigraph LP.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::decorrelate::Subspace;
use crate::error::{Error, Result};
use crate::isotonic::isotonic;
use crate::lp::{LinearProgram, Relation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HypothesisSet {
    /// Every nonzero coordinate has magnitude at least `c`.
    BetaMin {
        c: f64,
    },
    NonnegCone,
    /// `θ₁ ≤ θ₂ ≤ … ≤ θ_p`.
    MonotoneCone,
    /// `ξᵀθ = c`.
    LinearFunctional {
        xi: Vec<f64>,
        c: f64,
    },
    /// `‖θ‖² = c`.
    SqNorm {
        c: f64,
    },
    /// `Aθ ≤ b`.
    Polyhedral {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub t_n: f64,
    pub theta_p: Option<Array1<f64>>,
    /// Closed form rather than LP.
    pub exact: bool,
}

/// Nearest point of `{0} ∪ {|t| ≥ c}` to `x`; ties at `c/2` go to 0.
pub fn threshold_s(x: f64, c: f64) -> f64 {
    let a = x.abs();
    if a >= c {
        x
    } else if a > 0.5 * c {
        c.copysign(x)
    } else {
        0.0
    }
}

impl HypothesisSet {
    pub fn polyhedral(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let set = HypothesisSet::Polyhedral { a, b };
        set.validate()?;
        Ok(set)
    }

    pub fn linear_functional(xi: Vec<f64>, c: f64) -> Result<Self> {
        let set = HypothesisSet::LinearFunctional { xi, c };
        set.validate()?;
        Ok(set)
    }

    pub fn name(&self) -> &'static str {
        match self {
            HypothesisSet::BetaMin { .. } => "beta_min",
            HypothesisSet::NonnegCone => "nonneg_cone",
            HypothesisSet::MonotoneCone => "monotone_cone",
            HypothesisSet::LinearFunctional { .. } => "linear_functional",
            HypothesisSet::SqNorm { .. } => "sq_norm",
            HypothesisSet::Polyhedral { .. } => "polyhedral",
        }
    }

    /// Ambient dimension, for the variants that carry one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            HypothesisSet::LinearFunctional { xi, .. } => Some(xi.len()),
            HypothesisSet::Polyhedral { a, .. } => a.first().map(Vec::len),
            _ => None,
        }
    }

    /// Checks parameters; polyhedral sets are certified nonempty by a
    /// feasibility LP.
    pub fn validate(&self) -> Result<()> {
        match self {
            HypothesisSet::BetaMin { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::domain(format!("beta_min needs c > 0, got {c}")));
                }
            }
            HypothesisSet::NonnegCone | HypothesisSet::MonotoneCone => {}
            HypothesisSet::LinearFunctional { xi, c } => {
                if xi.is_empty() || xi.iter().any(|v| !v.is_finite()) || !c.is_finite() {
                    return Err(Error::domain("linear_functional needs finite ξ and c"));
                }
                if xi.iter().all(|v| *v == 0.0) {
                    return Err(Error::domain("linear_functional needs ξ ≠ 0"));
                }
            }
            HypothesisSet::SqNorm { c } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::domain(format!("sq_norm needs c >= 0, got {c}")));
                }
            }
            HypothesisSet::Polyhedral { a, b } => {
                let p = a.first().map(Vec::len).unwrap_or(0);
                if a.is_empty() || p == 0 {
                    return Err(Error::domain(
                        "polyhedral set needs at least one constraint",
                    ));
                }
                if a.len() != b.len() || a.iter().any(|row| row.len() != p) {
                    return Err(Error::dims(format!(
                        "polyhedral A has {} rows (widths vary or ≠ {p}), b has {}",
                        a.len(),
                        b.len()
                    )));
                }
                if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
                    return Err(Error::domain("polyhedral constraints must be finite"));
                }
                let mut lp = LinearProgram::new(p);
                for (row, bi) in a.iter().zip(b) {
                    lp.add_constraint(row.clone(), Relation::Le, *bi);
                }
                lp.solve()
                    .map_err(|e| Error::domain(format!("polyhedral set appears empty: {e}")))?;
            }
        }
        Ok(())
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != p => Err(Error::dims(format!(
                "{} is defined in dimension {d}, got {p}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    /// Linear constraints describing the set, for the convex polyhedral variants.
    fn constraints(&self, p: usize) -> Option<Vec<(Vec<f64>, Relation, f64)>> {
        let unit = |i: usize, v: f64| {
            let mut r = vec![0.0; p];
            r[i] = v;
            r
        };
        match self {
            HypothesisSet::NonnegCone => {
                Some((0..p).map(|i| (unit(i, 1.0), Relation::Ge, 0.0)).collect())
            }
            HypothesisSet::MonotoneCone => Some(
                (0..p.saturating_sub(1))
                    .map(|i| {
                        let mut r = unit(i, 1.0);
                        r[i + 1] = -1.0;
                        (r, Relation::Le, 0.0)
                    })
                    .collect(),
            ),
            HypothesisSet::LinearFunctional { xi, c } => Some(vec![(xi.clone(), Relation::Eq, *c)]),
            HypothesisSet::Polyhedral { a, b } => Some(
                a.iter()
                    .zip(b)
                    .map(|(r, bi)| (r.clone(), Relation::Le, *bi))
                    .collect(),
            ),
            HypothesisSet::BetaMin { .. } | HypothesisSet::SqNorm { .. } => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(
            self,
            HypothesisSet::BetaMin { .. } | HypothesisSet::SqNorm { .. }
        )
    }

    /// Whether `theta` lies in the set, up to `tol` on every (in)equality.
    pub fn membership(&self, theta: ArrayView1<f64>, tol: f64) -> bool {
        if self.check_dim(theta.len()).is_err() {
            return false;
        }
        match self {
            HypothesisSet::BetaMin { c } => {
                theta.iter().all(|v| v.abs() <= tol || v.abs() >= c - tol)
            }
            HypothesisSet::NonnegCone => theta.iter().all(|v| *v >= -tol),
            HypothesisSet::MonotoneCone => theta.windows(2).into_iter().all(|w| w[0] <= w[1] + tol),
            HypothesisSet::LinearFunctional { xi, c } => {
                let v: f64 = xi.iter().zip(theta).map(|(a, b)| a * b).sum();
                (v - c).abs() <= tol
            }
            HypothesisSet::SqNorm { c } => (theta.dot(&theta) - c).abs() <= tol,
            HypothesisSet::Polyhedral { a, b } => a.iter().zip(b).all(|(row, bi)| {
                let v: f64 = row.iter().zip(theta).map(|(x, y)| x * y).sum();
                v <= bi + tol
            }),
        }
    }

    /// A Euclidean-nearest point of the set (one of them, for nonconvex sets).
    pub fn euclidean_projection(&self, theta: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dim(theta.len())?;
        Ok(match self {
            HypothesisSet::BetaMin { c } => theta.mapv(|v| threshold_s(v, *c)),
            HypothesisSet::NonnegCone => theta.mapv(|v| v.max(0.0)),
            HypothesisSet::MonotoneCone => isotonic(theta),
            HypothesisSet::LinearFunctional { xi, c } => {
                let xi = ArrayView1::from(&xi[..]);
                let shift = (xi.dot(&theta) - c) / xi.dot(&xi);
                &theta - &(&xi * shift)
            }
            HypothesisSet::SqNorm { c } => {
                let norm = theta.dot(&theta).sqrt();
                if norm > 0.0 {
                    &theta * (c.sqrt() / norm)
                } else {
                    let mut e = Array1::zeros(theta.len());
                    e[0] = c.sqrt();
                    e
                }
            }
            HypothesisSet::Polyhedral { a, b } => hildreth(a, b, theta)?,
        })
    }
}

/// Dual coordinate ascent for `min ½‖x − v‖²` subject to `Ax ≤ b`.
fn hildreth(a: &[Vec<f64>], b: &[f64], v: ArrayView1<f64>) -> Result<Array1<f64>> {
    const TOL: f64 = 1e-11;
    let m = a.len();
    let norms: Vec<f64> = a.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
    let mut lambda = vec![0.0; m];
    let mut x = v.to_owned();
    let max_sweeps = 20_000usize.max(200 * m);
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        for j in 0..m {
            if norms[j] == 0.0 {
                continue;
            }
            let ax: f64 = a[j].iter().zip(&x).map(|(r, xi)| r * xi).sum();
            let new = (lambda[j] + (ax - b[j]) / norms[j]).max(0.0);
            let step = new - lambda[j];
            if step != 0.0 {
                for (xi, r) in x.iter_mut().zip(&a[j]) {
                    *xi -= step * r;
                }
                change = change.max(step.abs() * norms[j].sqrt());
                lambda[j] = new;
            }
        }
        if change <= TOL * (1.0 + v.iter().fold(0.0f64, |s, t| s.max(t.abs()))) {
            return Ok(x);
        }
    }
    Err(Error::Lp("polyhedral projection did not converge".into()))
}

fn check_inputs(gamma: ArrayView1<f64>, d: ArrayView1<f64>, u: &Subspace) -> Result<()> {
    if gamma.len() != u.k() || d.len() != u.k() {
        return Err(Error::dims(format!(
            "γ̂ᵈ has length {}, D has length {}, U has k = {}",
            gamma.len(),
            d.len(),
            u.k()
        )));
    }
    if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain("D must be positive and finite"));
    }
    Ok(())
}

/// If `u` is `±e_i`, returns `(i, ±1)`.
fn signed_basis(u: ArrayView1<f64>) -> Option<(usize, f64)> {
    let mut hit = None;
    for (i, v) in u.iter().enumerate() {
        if *v != 0.0 {
            if hit.is_some() || v.abs() != 1.0 {
                return None;
            }
            hit = Some((i, *v));
        }
    }
    hit
}

/// `T_n` and a minimizer `θᵖ` for the given null set.
pub fn project(
    set: &HypothesisSet,
    gamma: ArrayView1<f64>,
    d: ArrayView1<f64>,
    u: &Subspace,
) -> Result<ProjectionResult> {
    check_inputs(gamma, d, u)?;
    let p = u.p();
    set.check_dim(p)?;
    let k = u.k();

    match set {
        HypothesisSet::BetaMin { c } => {
            if u.is_identity() {
                let theta = gamma.mapv(|g| threshold_s(g, *c));
                let t_n = weighted_max(gamma, d, theta.view());
                return Ok(exact(t_n, theta));
            }
            if k == 1 {
                if let Some((i, s)) = signed_basis(u.column(0)) {
                    let t = threshold_s(gamma[0], *c);
                    let mut theta = Array1::zeros(p);
                    theta[i] = s * t;
                    return Ok(exact(d[0] * (gamma[0] - t).abs(), theta));
                }
            }
            Err(Error::Unsupported(
                "beta_min projections need U = I or U = ±e_i".into(),
            ))
        }
        HypothesisSet::NonnegCone if u.is_identity() => {
            let theta = gamma.mapv(|g| g.max(0.0));
            let t_n = d
                .iter()
                .zip(gamma)
                .map(|(di, g)| di * (-g).max(0.0))
                .fold(0.0f64, f64::max);
            Ok(exact(t_n, theta))
        }
        HypothesisSet::NonnegCone if k == 1 => {
            // {uᵀθ : θ ≥ 0} is a cone in ℝ determined by the signs of u.
            let col = u.column(0);
            let g = gamma[0];
            let pos = col.iter().position(|v| *v > 0.0);
            let neg = col.iter().position(|v| *v < 0.0);
            let (target, j) = match (pos, neg) {
                (Some(i), Some(_)) if g >= 0.0 => (g, Some(i)),
                (Some(_), Some(i)) => (g, Some(i)),
                (Some(i), None) => (g.max(0.0), Some(i)),
                (None, Some(i)) => (g.min(0.0), Some(i)),
                (None, None) => (0.0, None),
            };
            let mut theta = Array1::zeros(p);
            if let Some(j) = j {
                theta[j] = target / col[j];
            }
            Ok(exact(d[0] * (g - target).abs(), theta))
        }
        HypothesisSet::LinearFunctional { xi, c } if k == 1 => {
            let xi = ArrayView1::from(&xi[..]);
            let norm = xi.dot(&xi).sqrt();
            let cos = u.column(0).dot(&xi) / norm;
            if cos.abs() >= 1.0 - 1e-12 {
                let s = cos.signum();
                let target = s * c / norm;
                let theta = &xi * (c / (norm * norm));
                return Ok(exact(d[0] * (gamma[0] - target).abs(), theta));
            }
            project_lp(set, gamma, d, u)
        }
        HypothesisSet::SqNorm { c } if k == 1 => {
            // {uᵀθ : ‖θ‖² = c} = [−√c, √c].
            let r = c.sqrt();
            let t = gamma[0].clamp(-r, r);
            let col = u.column(0);
            let mut theta = &col * t;
            let rest = (c - t * t).max(0.0).sqrt();
            if rest > 0.0 {
                let j = col
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(j, _)| j)
                    .unwrap();
                // e_j minus its component along u, normalized.
                let mut w = &col * (-col[j]);
                w[j] += 1.0;
                let wn = w.dot(&w).sqrt();
                if wn > 1e-12 {
                    theta = theta + w * (rest / wn);
                }
            }
            Ok(exact(d[0] * (gamma[0].abs() - r).max(0.0), theta))
        }
        HypothesisSet::SqNorm { .. } => {
            Err(Error::Unsupported("sq_norm projections need k = 1".into()))
        }
        _ => project_lp(set, gamma, d, u),
    }
}

fn exact(t_n: f64, theta: Array1<f64>) -> ProjectionResult {
    ProjectionResult {
        t_n,
        theta_p: Some(theta),
        exact: true,
    }
}

fn weighted_max(gamma: ArrayView1<f64>, d: ArrayView1<f64>, theta: ArrayView1<f64>) -> f64 {
    gamma
        .iter()
        .zip(theta)
        .zip(d)
        .map(|((g, t), di)| di * (g - t).abs())
        .fold(0.0f64, f64::max)
}

/// Epigraph LP `min t` s.t. `|D_i (γ̂ᵈ − Uᵀθ)_i| ≤ t`, `θ ∈ Ω₀`. Available for
/// every convex polyhedral set regardless of the closed forms.
pub fn project_lp(
    set: &HypothesisSet,
    gamma: ArrayView1<f64>,
    d: ArrayView1<f64>,
    u: &Subspace,
) -> Result<ProjectionResult> {
    check_inputs(gamma, d, u)?;
    let p = u.p();
    set.check_dim(p)?;
    let rows = set
        .constraints(p)
        .ok_or_else(|| Error::Unsupported(format!("{} has no linear description", set.name())))?;
    let mut lp = LinearProgram::new(p + 1);
    lp.set_cost(p, 1.0);
    for i in 0..u.k() {
        let col = u.column(i);
        let mut plus: Vec<f64> = col.iter().map(|v| d[i] * v).collect();
        plus.push(-1.0);
        let minus: Vec<f64> = plus[..p].iter().map(|v| -v).chain([-1.0]).collect();
        // D_i(uᵢᵀθ − γ_i) ≤ t and D_i(γ_i − uᵢᵀθ) ≤ t.
        lp.add_constraint(plus, Relation::Le, d[i] * gamma[i]);
        lp.add_constraint(minus, Relation::Le, -d[i] * gamma[i]);
    }
    for (mut row, rel, rhs) in rows {
        row.push(0.0);
        lp.add_constraint(row, rel, rhs);
    }
    let sol = lp.solve()?;
    let theta = Array1::from(sol.x[..p].to_vec());
    let t_n = u
        .project(theta.view())
        .iter()
        .zip(gamma)
        .zip(d)
        .map(|((ut, g), di)| di * (g - ut).abs())
        .fold(0.0f64, f64::max);
    Ok(ProjectionResult {
        t_n,
        theta_p: Some(theta),
        exact: false,
    })
}
