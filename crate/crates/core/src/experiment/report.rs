use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::stats::Estimate;
use crate::Result;

/// One measured point. Columns that do not apply stay empty in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub a: f64,
    pub b: f64,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    /// What was measured, e.g. `survival`, `ks`, `slope`.
    pub quantity: String,
    /// The parameter the row is indexed by (time, radius, sample index, ...).
    pub at: Option<f64>,
    pub estimate: f64,
    pub se: Option<f64>,
    pub analytic_target: Option<f64>,
    pub pass: Option<bool>,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
    /// Every row carrying a pass flag passed, and the run finished.
    pub pass: bool,
    /// Set when the run aborted; `rows` then holds what was finished.
    pub error: Option<String>,
    pub wall_clock_secs: f64,
    pub version: String,
}

impl ExperimentReport {
    pub fn row(&self, quantity: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    pub fn rows_of<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }

    /// Writes `report.json` and `rows.csv` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        write_rows(&dir.join("rows.csv"), &self.rows)
    }
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Collects rows for one run, stamping the config columns.
pub(crate) struct RowSink<'a> {
    cfg: &'a ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
}

impl<'a> RowSink<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        RowSink {
            cfg,
            rows: Vec::new(),
            notes: Vec::new(),
            sigma: cfg.resolved_sigma(),
            eps: cfg.resolved_eps(),
            delta: None,
        }
    }

    pub fn push(
        &mut self,
        quantity: &str,
        at: Option<f64>,
        estimate: f64,
        se: Option<f64>,
        target: Option<f64>,
        pass: Option<bool>,
    ) {
        self.rows.push(ReportRow {
            experiment: self.cfg.experiment.name().to_string(),
            a: self.cfg.a,
            b: self.cfg.b,
            sigma: self.sigma,
            eps: self.eps,
            delta: self.delta,
            quantity: quantity.to_string(),
            at,
            estimate,
            se,
            analytic_target: target,
            pass,
            n: self.cfg.lattice_n,
            samples: self.cfg.samples,
            seed: self.cfg.seed,
        });
    }

    /// Row for a Monte Carlo mean checked at `k` standard errors.
    pub fn estimate(&mut self, quantity: &str, at: Option<f64>, e: &Estimate, target: f64, k: f64) {
        self.push(
            quantity,
            at,
            e.mean,
            Some(e.se),
            Some(target),
            Some(e.within(target, k)),
        );
    }

    /// Row for a frequency; the error bar is never below the binomial one
    /// implied by the target, so saturated samples (SE 0) are judged fairly.
    pub fn proportion(&mut self, quantity: &str, at: Option<f64>, e: &Estimate, target: f64, k: f64) {
        let se = e.se.max((target * (1.0 - target) / e.n as f64).sqrt());
        self.push(
            quantity,
            at,
            e.mean,
            Some(se),
            Some(target),
            Some((e.mean - target).abs() <= k * se),
        );
    }
}
