use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, Preset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RejectionRate,
    Coverage,
}

/// One grid cell: a rate over its successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub cell: usize,
    /// Swept parameters, by name.
    pub params: BTreeMap<String, Value>,
    pub metric: Metric,
    pub rate: f64,
    /// Monte Carlo standard error `√(r(1 − r)/N)`.
    pub se: f64,
    pub replicates: usize,
    pub failures: usize,
    pub valid: bool,
    pub mean_width: Option<f64>,
    pub truth: Option<f64>,
}

impl CellReport {
    /// Aggregates per-replicate outcomes (`None` = solver failure).
    pub fn from_outcomes(
        cell: usize,
        params: BTreeMap<String, Value>,
        metric: Metric,
        hits: &[Option<bool>],
        budget: f64,
    ) -> Self {
        let failures = hits.iter().filter(|h| h.is_none()).count();
        let done: Vec<bool> = hits.iter().flatten().copied().collect();
        let (rate, se) = rate_and_se(&done);
        CellReport {
            cell,
            params,
            metric,
            rate,
            se,
            replicates: hits.len(),
            failures,
            valid: !done.is_empty() && failures as f64 <= budget * hits.len() as f64,
            mean_width: None,
            truth: None,
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).and_then(Value::as_f64)
    }
}

pub fn rate_and_se(hits: &[bool]) -> (f64, f64) {
    if hits.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = hits.len() as f64;
    let r = hits.iter().filter(|h| **h).count() as f64 / n;
    (r, (r * (1.0 - r) / n).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub preset: Preset,
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
    pub elapsed_secs: f64,
    /// Command-specific results, e.g. fitted slopes or the sampled `ξ`.
    pub extras: Value,
}

impl ExperimentReport {
    pub fn total_failures(&self) -> usize {
        self.cells.iter().map(|c| c.failures).sum()
    }

    pub fn invalid_cells(&self) -> Vec<usize> {
        self.cells
            .iter()
            .filter(|c| !c.valid)
            .map(|c| c.cell)
            .collect()
    }

    pub fn cell(&self, params: &[(&str, f64)]) -> Option<&CellReport> {
        self.cells.iter().find(|c| {
            params
                .iter()
                .all(|(k, v)| c.param(k).is_some_and(|x| (x - v).abs() < 1e-12))
        })
    }

    /// Writes the table CSV, plot CSVs and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, plots: &[PlotSeries]) -> Result<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source: std::io::Error| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();

        let table = dir.join(format!("{}.csv", self.command));
        fs::write(&table, self.table_csv()).map_err(io(&table))?;
        written.push(table);

        for plot in plots {
            let path = dir.join(format!("{}.csv", plot.name));
            fs::write(&path, plot.csv()).map_err(io(&path))?;
            written.push(path);
        }

        let manifest = dir.join("manifest.json");
        let files: Vec<String> = written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect();
        let body = json!({
            "command": self.command,
            "preset": self.preset,
            "package": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "seeds": {
                "base_seed": self.config.base_seed,
                "replicate_stream": "cell_index * replicates + replicate_index",
            },
            "elapsed_secs": self.elapsed_secs,
            "total_failures": self.total_failures(),
            "invalid_cells": self.invalid_cells(),
            "extras": self.extras,
            "cells": self.cells,
            "files": files,
        });
        let text = serde_json::to_string_pretty(&body).expect("report serializes");
        fs::write(&manifest, text + "\n").map_err(io(&manifest))?;
        written.push(manifest);
        Ok(written)
    }

    /// One row per cell, parameters first.
    pub fn table_csv(&self) -> String {
        let keys: Vec<&String> = self
            .cells
            .first()
            .map(|c| c.params.keys().collect())
            .unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = vec!["cell"];
        header.extend(keys.iter().map(|k| k.as_str()));
        header.extend([
            "metric",
            "rate",
            "se",
            "replicates",
            "failures",
            "valid",
            "mean_width",
            "truth",
        ]);
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            let mut row = vec![c.cell.to_string()];
            for k in &keys {
                row.push(match c.params.get(*k) {
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                    None => String::new(),
                });
            }
            let metric = match c.metric {
                Metric::RejectionRate => "rejection_rate",
                Metric::Coverage => "coverage",
            };
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            row.extend([
                metric.to_string(),
                c.rate.to_string(),
                c.se.to_string(),
                c.replicates.to_string(),
                c.failures.to_string(),
                c.valid.to_string(),
                opt(c.mean_width),
                opt(c.truth),
            ]);
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Two-column data for an external plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([&self.x_label, &self.y_label])
            .expect("in-memory write");
        for (x, y) in &self.points {
            w.write_record([x.to_string(), y.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
