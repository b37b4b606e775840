use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decorrelate::Subspace;
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    TableBetamin,
    TableCone,
    CiSweep,
    RealData,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TableBetamin => "table-betamin",
            Command::TableCone => "table-cone",
            Command::CiSweep => "ci-sweep",
            Command::RealData => "real-data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Small enough for CI.
    Desk,
    /// The published simulation sizes.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum USpec {
    Identity,
    /// Standard basis vectors `e_i` (0-based).
    Basis(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PipelineSpec {
    Split,
    FixedU { u: USpec },
}

impl PipelineSpec {
    pub fn subspace(&self, p: usize) -> Result<Option<Subspace>> {
        match self {
            PipelineSpec::Split => Ok(None),
            PipelineSpec::FixedU { u: USpec::Identity } => Ok(Some(Subspace::identity(p))),
            PipelineSpec::FixedU {
                u: USpec::Basis(idx),
            } => {
                if idx.is_empty() || idx.iter().any(|&i| i >= p) {
                    return Err(Error::Config(format!(
                        "basis indices must be nonempty and below p = {p}"
                    )));
                }
                let mut u = ndarray::Array2::zeros((p, idx.len()));
                for (c, &i) in idx.iter().enumerate() {
                    u[[i, c]] = 1.0;
                }
                Subspace::new(u)
                    .map(Some)
                    .map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

/// Directions for the linear-functional sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiSpec {
    /// Eigenvectors of Σ by 1-based rank of the eigenvalue, largest first.
    EigenRanks(Vec<usize>),
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub c: Vec<f64>,
    pub rho: Vec<f64>,
    pub n: Vec<usize>,
    pub b: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub b: f64,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub set: Option<HypothesisSet>,
    pub pipeline: PipelineSpec,
    pub grid: Grid,
    pub xi: Option<XiSpec>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    /// Scale `μ` by the largest entry of the direction; on by default for
    /// the interval commands, whose directions are dense.
    pub relative_mu: bool,
    /// Slack multiplier for squared-norm intervals; `2 √(log n)` if absent.
    pub a_n: Option<f64>,
    /// Sparsity used in the squared-norm slack; the pilot fit's support size
    /// if absent.
    pub s0_ci: Option<usize>,
    pub x_csv: Option<PathBuf>,
    pub y_csv: Option<PathBuf>,
    /// A cell is invalid when more than this fraction of replicates fail.
    pub failure_budget: f64,
}

fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e6).round() / 1e6)
        .collect()
}

impl ExperimentConfig {
    pub fn preset(cmd: Command, preset: Preset) -> Self {
        let desk = preset == Preset::Desk;
        let base = ExperimentConfig {
            n: if desk { 200 } else { 600 },
            p: if desk { 300 } else { 1000 },
            s0: if desk { 5 } else { 10 },
            b: 1.0,
            rho: 0.2,
            sigma: 1.0,
            alpha: 0.05,
            replicates: if desk { 200 } else { 100 },
            base_seed: 2024,
            set: None,
            pipeline: PipelineSpec::FixedU { u: USpec::Identity },
            grid: Grid::default(),
            xi: None,
            lambda: None,
            mu: None,
            relative_mu: matches!(cmd, Command::CiSweep | Command::RealData),
            a_n: None,
            s0_ci: None,
            x_csv: None,
            y_csv: None,
            failure_budget: 0.05,
        };
        match cmd {
            Command::TableBetamin => ExperimentConfig {
                set: Some(HypothesisSet::BetaMin { c: 1.0 }),
                grid: Grid {
                    c: if desk {
                        vec![1.0, 1.1, 1.3, 1.5]
                    } else {
                        range(0.6, 0.1, 10)
                    },
                    rho: if desk {
                        vec![0.2, 0.6]
                    } else {
                        vec![0.2, 0.4, 0.6, 0.8]
                    },
                    ..Grid::default()
                },
                ..base
            },
            Command::TableCone => {
                let b = if desk {
                    vec![0.5, -0.5]
                } else {
                    let pos = range(0.2, 0.2, 5);
                    let neg: Vec<f64> = pos.iter().map(|v| -v).collect();
                    pos.into_iter().chain(neg).collect()
                };
                ExperimentConfig {
                    set: Some(HypothesisSet::NonnegCone),
                    replicates: if desk { 200 } else { 300 },
                    grid: Grid {
                        b,
                        rho: if desk {
                            vec![0.2, 0.6]
                        } else {
                            vec![0.2, 0.4, 0.6, 0.8]
                        },
                        ..Grid::default()
                    },
                    ..base
                }
            }
            Command::CiSweep => ExperimentConfig {
                p: if desk { 600 } else { 3000 },
                s0: if desk { 10 } else { 30 },
                b: 0.5,
                rho: 0.5,
                replicates: 300,
                grid: Grid {
                    n: if desk {
                        vec![400, 800, 1600]
                    } else {
                        (0..9).map(|i| 1000 + 200 * i).collect()
                    },
                    ..Grid::default()
                },
                xi: Some(XiSpec::EigenRanks(if desk {
                    vec![1]
                } else {
                    vec![1, 750, 1500, 2250, 3000]
                })),
                ..base
            },
            Command::RealData => ExperimentConfig {
                replicates: 100,
                pipeline: PipelineSpec::Split,
                grid: Grid {
                    sigma: vec![1.0, 5.0, 10.0],
                    ..Grid::default()
                },
                ..base
            },
        }
    }

    /// The preset with a JSON object merged over it, key by key.
    pub fn from_json(cmd: Command, preset: Preset, overrides: &Value) -> Result<Self> {
        let mut value = serde_json::to_value(Self::preset(cmd, preset))
            .map_err(|e| Error::Config(e.to_string()))?;
        if !overrides.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        merge(&mut value, overrides);
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate(cmd)?;
        Ok(cfg)
    }

    pub fn validate(&self, cmd: Command) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return bad("failure_budget must lie in [0, 1]".into());
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if let Some(m) = self.mu {
            if !(m > 0.0) {
                return bad(format!("mu must be positive, got {m}"));
            }
        }
        if let Some(a) = self.a_n {
            if !(a > 0.0) {
                return bad(format!("a_n must be positive, got {a}"));
            }
        }
        let simulated = cmd != Command::RealData;
        if simulated {
            if self.p < 2 || self.n < 4 {
                return bad(format!(
                    "need n >= 4 and p >= 2, got n = {}, p = {}",
                    self.n, self.p
                ));
            }
            if self.s0 > self.p {
                return bad(format!("s0 = {} exceeds p = {}", self.s0, self.p));
            }
        }
        let need = |name: &str, empty: bool| -> Result<()> {
            if empty {
                Err(Error::Config(format!(
                    "grid.{name} must be nonempty for {}",
                    cmd.name()
                )))
            } else {
                Ok(())
            }
        };
        let check_rho = |rho: &[f64]| -> Result<()> {
            match rho.iter().find(|r| !(r.abs() < 1.0)) {
                Some(r) => Err(Error::Config(format!(
                    "rho must satisfy |rho| < 1, got {r}"
                ))),
                None => Ok(()),
            }
        };
        match cmd {
            Command::TableBetamin => {
                need("c", self.grid.c.is_empty())?;
                need("rho", self.grid.rho.is_empty())?;
                check_rho(&self.grid.rho)?;
                if let Some(c) = self.grid.c.iter().find(|c| !(**c > 0.0)) {
                    return bad(format!("beta-min thresholds must be positive, got {c}"));
                }
                if !matches!(self.set, None | Some(HypothesisSet::BetaMin { .. })) {
                    return bad("table-betamin needs a beta_min set".into());
                }
            }
            Command::TableCone => {
                need("b", self.grid.b.is_empty())?;
                need("rho", self.grid.rho.is_empty())?;
                check_rho(&self.grid.rho)?;
                if !matches!(
                    self.set,
                    None | Some(HypothesisSet::NonnegCone) | Some(HypothesisSet::MonotoneCone)
                ) {
                    return bad("table-cone needs nonneg_cone or monotone_cone".into());
                }
            }
            Command::CiSweep => {
                need("n", self.grid.n.is_empty())?;
                check_rho(&[self.rho])?;
                if let Some(n) = self.grid.n.iter().find(|n| **n < 4) {
                    return bad(format!("sample sizes must be at least 4, got {n}"));
                }
                match &self.xi {
                    None => return bad("ci-sweep needs xi".into()),
                    Some(XiSpec::EigenRanks(r)) => {
                        if r.is_empty() || r.iter().any(|&k| k == 0 || k > self.p) {
                            return bad(format!("eigen ranks must lie in 1..={}", self.p));
                        }
                    }
                    Some(XiSpec::Explicit(v)) => {
                        if v.is_empty()
                            || v.iter()
                                .any(|x| x.len() != self.p || x.iter().all(|t| *t == 0.0))
                        {
                            return bad(format!(
                                "explicit xi vectors must be nonzero with length {}",
                                self.p
                            ));
                        }
                    }
                }
            }
            Command::RealData => {
                need("sigma", self.grid.sigma.is_empty())?;
                if let Some(s) = self.grid.sigma.iter().find(|s| !(**s >= 0.0)) {
                    return bad(format!("noise levels must be nonnegative, got {s}"));
                }
            }
        }
        if simulated {
            if let Err(e) = self.pipeline.subspace(self.p) {
                return Err(Error::Config(e.to_string()));
            }
        }
        Ok(())
    }
}

/// Recursively overlays `patch` onto `base`; non-object values replace.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}
