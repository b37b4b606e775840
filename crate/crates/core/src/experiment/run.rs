use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Command, ExperimentConfig, Preset, XiSpec};
use super::report::{ls_slope, CellReport, ExperimentReport, Metric, PlotSeries};
use crate::data::{load_csv, make_signal, responses, Dataset, DesignSampler, RngSeed};
use crate::decorrelate::Subspace;
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisSet;
use crate::inference::{
    ci_sqnorm, default_a_n, estimate_with, linear_from_stage, run_test, Mode, PipelineConfig,
};
use crate::num::{symmetric_eigen_desc, CovarianceModel};
use crate::scaled_lasso;

/// A finished run: the report plus its plot series.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub plots: Vec<PlotSeries>,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        self.report.write(dir, &self.plots)
    }
}

/// Per-replicate outcome of an interval: covered, and its width.
type Interval = Option<(bool, f64)>;

fn replicate_seed(cfg: &ExperimentConfig, cell: usize, r: usize) -> RngSeed {
    RngSeed::new(cfg.base_seed, (cell * cfg.replicates + r) as u64)
}

fn pipeline(cfg: &ExperimentConfig, p: usize, seed: RngSeed) -> Result<PipelineConfig> {
    let mut pc = match cfg.pipeline.subspace(p)? {
        Some(u) => PipelineConfig::fixed(u),
        None => PipelineConfig::split(seed),
    };
    pc.seed = seed;
    pc.lambda = cfg.lambda;
    pc.mu = cfg.mu;
    pc.relative_mu = cfg.relative_mu;
    Ok(pc)
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Rejection rate of one simulated cell; `signed_b` fixes the sign of the
/// nonzero coefficients.
fn rejection_cell(
    cfg: &ExperimentConfig,
    cell: usize,
    set: &HypothesisSet,
    rho: f64,
    signed_b: f64,
) -> Result<Vec<Option<bool>>> {
    let cov = CovarianceModel::Toeplitz { p: cfg.p, rho };
    let sampler = DesignSampler::new(&cov)?;
    Ok((0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg, cell, r);
            let once = || -> Result<bool> {
                let theta = make_signal(cfg.p, cfg.s0, signed_b.abs(), seed.derive("signal"))?
                    * signed_b.signum();
                let data = sampler.sample(cfg.n, &theta, cfg.sigma, seed.derive("design"))?;
                let pc = pipeline(cfg, cfg.p, seed.derive("split"))?;
                Ok(run_test(&data, set, cfg.alpha, &pc)?.reject)
            };
            once().ok()
        })
        .collect())
}

pub fn table_betamin(cfg: &ExperimentConfig, preset: Preset) -> Result<RunOutput> {
    cfg.validate(Command::TableBetamin)?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for (ci, &c) in cfg.grid.c.iter().enumerate() {
        for (ri, &rho) in cfg.grid.rho.iter().enumerate() {
            let cell = ci * cfg.grid.rho.len() + ri;
            let set = HypothesisSet::BetaMin { c };
            let hits = rejection_cell(cfg, cell, &set, rho, cfg.b)?;
            cells.push(CellReport::from_outcomes(
                cell,
                params(&[("c", json!(c)), ("rho", json!(rho))]),
                Metric::RejectionRate,
                &hits,
                cfg.failure_budget,
            ));
        }
    }
    let plots = cfg
        .grid
        .rho
        .iter()
        .map(|&rho| PlotSeries {
            name: format!("betamin_rho{rho}"),
            x_label: "c".into(),
            y_label: "rejection_rate".into(),
            points: cells
                .iter()
                .filter(|c| c.param("rho") == Some(rho))
                .map(|c| (c.param("c").unwrap(), c.rate))
                .collect(),
        })
        .collect();
    Ok(RunOutput {
        report: ExperimentReport {
            command: Command::TableBetamin.name().into(),
            preset,
            config: cfg.clone(),
            cells,
            elapsed_secs: start.elapsed().as_secs_f64(),
            extras: Value::Null,
        },
        plots,
    })
}

pub fn table_cone(cfg: &ExperimentConfig, preset: Preset) -> Result<RunOutput> {
    cfg.validate(Command::TableCone)?;
    let set = cfg.set.clone().unwrap_or(HypothesisSet::NonnegCone);
    let start = Instant::now();
    let mut cells = Vec::new();
    for (bi, &b) in cfg.grid.b.iter().enumerate() {
        for (ri, &rho) in cfg.grid.rho.iter().enumerate() {
            let cell = bi * cfg.grid.rho.len() + ri;
            let hits = rejection_cell(cfg, cell, &set, rho, b)?;
            cells.push(CellReport::from_outcomes(
                cell,
                params(&[("b", json!(b)), ("rho", json!(rho))]),
                Metric::RejectionRate,
                &hits,
                cfg.failure_budget,
            ));
        }
    }
    let plots = cfg
        .grid
        .rho
        .iter()
        .map(|&rho| PlotSeries {
            name: format!("cone_rho{rho}"),
            x_label: "b".into(),
            y_label: "rejection_rate".into(),
            points: cells
                .iter()
                .filter(|c| c.param("rho") == Some(rho))
                .map(|c| (c.param("b").unwrap(), c.rate))
                .collect(),
        })
        .collect();
    Ok(RunOutput {
        report: ExperimentReport {
            command: Command::TableCone.name().into(),
            preset,
            config: cfg.clone(),
            cells,
            elapsed_secs: start.elapsed().as_secs_f64(),
            extras: json!({ "set": set }),
        },
        plots,
    })
}

/// Unit directions for the sweep, with a label for each.
fn sweep_directions(
    cfg: &ExperimentConfig,
    cov: &CovarianceModel,
) -> Result<Vec<(String, Array1<f64>)>> {
    match cfg
        .xi
        .as_ref()
        .ok_or_else(|| Error::Config("ci-sweep needs xi".into()))?
    {
        XiSpec::EigenRanks(ranks) => {
            let (_, vecs) = symmetric_eigen_desc(cov.matrix()?.view());
            Ok(ranks
                .iter()
                .map(|&r| (format!("eigen{r}"), vecs.column(r - 1).to_owned()))
                .collect())
        }
        XiSpec::Explicit(list) => Ok(list
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let v = Array1::from(v.clone());
                let norm = v.dot(&v).sqrt();
                (format!("xi{i}"), v / norm)
            })
            .collect()),
    }
}

/// Coverage and mean width for one direction and sample size. Design and
/// signal are drawn once per cell; replicates resample the noise only, so
/// the decorrelator is shared.
fn ci_cell(
    cfg: &ExperimentConfig,
    cell: usize,
    sampler: &DesignSampler,
    xi: ArrayView1<f64>,
    n: usize,
) -> Result<(Vec<Interval>, f64)> {
    let seed0 = replicate_seed(cfg, cell, 0);
    let theta = make_signal(cfg.p, cfg.s0, cfg.b, seed0.derive("signal"))?;
    let x = sampler.design(n, seed0.derive("design"));
    let truth = xi.dot(&theta);
    let u = Subspace::unit(xi)?;
    let pc = pipeline(cfg, cfg.p, seed0)?;
    let sigma_hat = x.t().dot(&x) / n as f64;
    let g = match pc.decorrelator(sigma_hat.view(), &u, n) {
        Ok(g) => g,
        Err(_) => return Ok((vec![None; cfg.replicates], truth)),
    };
    let xi_norm = xi.dot(&xi).sqrt();
    let out = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg, cell, r);
            let once = || -> Result<(bool, f64)> {
                let y = responses(&x, &theta, cfg.sigma, seed.derive("noise"));
                let data = Dataset::new(x.clone(), y)?;
                let stage = estimate_with(&data, u.clone(), g.clone(), &pc)?;
                let ci = linear_from_stage(&stage, xi_norm, cfg.alpha)?;
                Ok((ci.contains(truth), ci.width()))
            };
            once().ok()
        })
        .collect();
    Ok((out, truth))
}

pub fn ci_sweep(cfg: &ExperimentConfig, preset: Preset) -> Result<RunOutput> {
    cfg.validate(Command::CiSweep)?;
    let start = Instant::now();
    let cov = CovarianceModel::Toeplitz {
        p: cfg.p,
        rho: cfg.rho,
    };
    let sampler = DesignSampler::new(&cov)?;
    let dirs = sweep_directions(cfg, &cov)?;
    let mut cells = Vec::new();
    let mut plots = Vec::new();
    let mut slopes = serde_json::Map::new();
    for (di, (label, xi)) in dirs.iter().enumerate() {
        let mut widths = Vec::new();
        let mut covs = Vec::new();
        for (ni, &n) in cfg.grid.n.iter().enumerate() {
            let cell = di * cfg.grid.n.len() + ni;
            let (outcomes, truth) = ci_cell(cfg, cell, &sampler, xi.view(), n)?;
            let hits: Vec<Option<bool>> = outcomes.iter().map(|o| o.map(|v| v.0)).collect();
            let mut report = CellReport::from_outcomes(
                cell,
                params(&[("xi", json!(label)), ("n", json!(n))]),
                Metric::Coverage,
                &hits,
                cfg.failure_budget,
            );
            let ws: Vec<f64> = outcomes.iter().flatten().map(|o| o.1).collect();
            if !ws.is_empty() {
                let mean = ws.iter().sum::<f64>() / ws.len() as f64;
                report.mean_width = Some(mean);
                widths.push(((n as f64).ln(), mean.ln()));
            }
            report.truth = Some(truth);
            covs.push((n as f64, report.rate));
            cells.push(report);
        }
        if widths.len() >= 2 {
            slopes.insert(label.clone(), json!(ls_slope(&widths)));
        }
        plots.push(PlotSeries {
            name: format!("ci_coverage_{label}"),
            x_label: "n".into(),
            y_label: "coverage".into(),
            points: covs,
        });
        plots.push(PlotSeries {
            name: format!("ci_width_loglog_{label}"),
            x_label: "log_n".into(),
            y_label: "log_mean_width".into(),
            points: widths,
        });
    }
    Ok(RunOutput {
        report: ExperimentReport {
            command: Command::CiSweep.name().into(),
            preset,
            config: cfg.clone(),
            cells,
            elapsed_secs: start.elapsed().as_secs_f64(),
            extras: json!({ "width_slopes": slopes }),
        },
        plots,
    })
}

/// Resampling study on a fixed design: the initial fit plays the truth and
/// fresh noise is added at each level in `grid.sigma`.
pub fn real_data(
    cfg: &ExperimentConfig,
    preset: Preset,
    x_csv: &Path,
    y_csv: &Path,
) -> Result<RunOutput> {
    cfg.validate(Command::RealData)?;
    let start = Instant::now();
    let data = load_csv(x_csv, y_csv)?;
    let (n, p) = (data.n(), data.p());
    if n < 4 {
        return Err(Error::Config(format!("real-data needs n >= 4, got {n}")));
    }
    let fit0 = scaled_lasso::fit(
        &data,
        cfg.lambda
            .unwrap_or_else(|| scaled_lasso::default_lambda(n, p)),
        &Default::default(),
    )?;
    let theta0 = fit0.theta_hat.clone();
    let support = theta0.iter().filter(|v| **v != 0.0).count();
    let s0 = cfg.s0_ci.unwrap_or(support);
    let a_n = cfg.a_n.unwrap_or_else(|| default_a_n(n));

    // ξ_i ~ N(0, 1/√p), i.e. standard deviation p^{-1/4}.
    let normal = Normal::new(0.0, (p as f64).powf(-0.25)).expect("finite sd");
    let mut rng = RngSeed::new(cfg.base_seed, 0).derive("xi").rng();
    let xi: Array1<f64> = (0..p).map(|_| normal.sample(&mut rng)).collect();
    let xi_norm = xi.dot(&xi).sqrt();
    let lin_truth = xi.dot(&theta0);
    let sq_truth = theta0.dot(&theta0);

    let u = Subspace::unit(xi.view())?;
    let base_pc = pipeline(cfg, p, RngSeed::new(cfg.base_seed, 0))?;
    let sigma_hat = data.gram();
    let g = base_pc.decorrelator(sigma_hat.view(), &u, n).ok();
    let signal = data.x.dot(&theta0);

    let mut cells = Vec::new();
    for (si, &sigma) in cfg.grid.sigma.iter().enumerate() {
        let outcomes: Vec<(Interval, Interval)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = replicate_seed(cfg, si, r);
                let noise = responses(&data.x, &Array1::zeros(p), sigma, seed.derive("noise"));
                let sample = match Dataset::new(data.x.clone(), &signal + &noise) {
                    Ok(d) => d,
                    Err(_) => return (None, None),
                };
                let mut pc = base_pc.clone();
                pc.seed = seed.derive("split");
                let linear = g.as_ref().and_then(|g| {
                    let stage = estimate_with(&sample, u.clone(), g.clone(), &pc).ok()?;
                    let ci = linear_from_stage(&stage, xi_norm, cfg.alpha).ok()?;
                    Some((ci.contains(lin_truth), ci.width()))
                });
                pc.mode = Mode::Split;
                let sq = ci_sqnorm(&sample, cfg.alpha, s0, a_n, &pc)
                    .ok()
                    .map(|ci| (ci.contains(sq_truth), ci.width()));
                (linear, sq)
            })
            .collect();
        for (fi, (name, truth)) in [("linear", lin_truth), ("sq_norm", sq_truth)]
            .into_iter()
            .enumerate()
        {
            let picked: Vec<Interval> = outcomes
                .iter()
                .map(|o| if fi == 0 { o.0 } else { o.1 })
                .collect();
            let hits: Vec<Option<bool>> = picked.iter().map(|o| o.map(|v| v.0)).collect();
            let mut report = CellReport::from_outcomes(
                si,
                params(&[("sigma", json!(sigma)), ("functional", json!(name))]),
                Metric::Coverage,
                &hits,
                cfg.failure_budget,
            );
            let ws: Vec<f64> = picked.iter().flatten().map(|o| o.1).collect();
            if !ws.is_empty() {
                report.mean_width = Some(ws.iter().sum::<f64>() / ws.len() as f64);
            }
            report.truth = Some(truth);
            cells.push(report);
        }
    }
    Ok(RunOutput {
        report: ExperimentReport {
            command: Command::RealData.name().into(),
            preset,
            config: cfg.clone(),
            cells,
            elapsed_secs: start.elapsed().as_secs_f64(),
            extras: json!({
                "n": n,
                "p": p,
                "support_size": support,
                "s0_ci": s0,
                "a_n": a_n,
                "sigma_hat_initial": fit0.sigma_hat,
                "xi": xi.to_vec(),
            }),
        },
        plots: Vec::new(),
    })
}
