//! Configured experiments: each composes the library operations, compares
//! against the closed-form targets and persists a JSON report plus a CSV of rows.

mod config;
mod kinds;
mod report;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use config::{ExperimentConfig, ExperimentKind, RadiusChoice, KOEBE_CALIBRATION_NODES, SWEEPABLE};
pub use kinds::{
    content_lemma_values, triple_regions, BOX_WINDOW, CONDITIONAL_AGREEMENT, CONTENT_SEGMENT, CONTENT_STEPS,
    COVARIANCE_PAIRS, EXIT_MAX_DT, EXIT_TIMES, ONE_POINT_LOG_RADII, RADIUS_KS_LIMIT, TWO_POINT_DELTAS,
};
pub use report::{read_rows, write_rows, ExperimentReport, ReportRow};

use crate::{Error, Result};
use report::RowSink;

/// Environment variable capping the worker pool.
pub const THREADS_VAR: &str = "TVSLAB_THREADS";

/// Thread cap from [`THREADS_VAR`], `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config {
                key: THREADS_VAR.into(),
                reason: format!("must be a positive integer, got `{v}`"),
            }),
        },
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Precondition(format!("cannot start {k} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Validates and runs the experiment without touching the file system.
///
/// A failure after validation still yields a report, holding the rows that
/// were finished and the error message.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut sink = RowSink::new(cfg);
    let outcome = kinds::execute(cfg, &mut sink);
    let error = outcome.err().map(|e| e.to_string());
    let pass = error.is_none() && sink.rows.iter().all(|r| r.pass != Some(false));
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows: sink.rows,
        notes: sink.notes,
        pass,
        error,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Runs under the [`THREADS_VAR`] cap and writes `report.json` and `rows.csv`
/// into `output_path`. An aborted run is written before its error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let threads = thread_cap()?;
    let report = with_threads(threads, || execute(cfg))??;
    report.write(&cfg.output_path)?;
    if let Some(e) = &report.error {
        return Err(Error::Precondition(format!(
            "{} aborted after {} rows (partial report in {}): {e}",
            cfg.experiment,
            report.rows.len(),
            cfg.output_path.display()
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRow<'a> {
    axis: &'a str,
    value: &'a str,
    experiment: &'a str,
    quantity: &'a str,
    at: Option<f64>,
    estimate: f64,
    se: Option<f64>,
    analytic_target: Option<f64>,
    pass: Option<bool>,
    n: usize,
    samples: usize,
    seed: u64,
}

/// One run per value of `axis`, with seeds `seed + i` and outputs in
/// `output_path/<axis>=<value>`; `output_path/summary.csv` merges the rows.
/// Every configuration is validated before the first run starts.
pub fn sweep(base: &ExperimentConfig, axis: &str, values: &[String]) -> Result<Vec<ExperimentReport>> {
    if values.is_empty() {
        return Err(Error::Config {
            key: "values".into(),
            reason: "the sweep needs at least one value".into(),
        });
    }
    if !SWEEPABLE.contains(&axis) {
        return Err(Error::Config {
            key: axis.into(),
            reason: format!("not a sweepable numeric key; choose one of {}", SWEEPABLE.join(", ")),
        });
    }
    let mut configs = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let mut cfg = base.clone();
        cfg.set(axis, v)?;
        cfg.seed = base.seed.wrapping_add(i as u64);
        cfg.output_path = base.output_path.join(format!("{axis}={}", v.trim()));
        cfg.validate()?;
        configs.push(cfg);
    }
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in &configs {
        reports.push(run(cfg)?);
    }
    write_summary(&base.output_path.join("summary.csv"), axis, values, &reports)?;
    Ok(reports)
}

fn write_summary(path: &Path, axis: &str, values: &[String], reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (v, rep) in values.iter().zip(reports) {
        for r in &rep.rows {
            w.serialize(SummaryRow {
                axis,
                value: v.trim(),
                experiment: &r.experiment,
                quantity: &r.quantity,
                at: r.at,
                estimate: r.estimate,
                se: r.se,
                analytic_target: r.analytic_target,
                pass: r.pass,
                n: r.n,
                samples: r.samples,
                seed: r.seed,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_lemma_run_is_deterministic_and_passes() {
        let cfg = ExperimentConfig::new(ExperimentKind::ContentLemma);
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        let r = a.row("ratio").unwrap();
        assert!(r.pass == Some(true), "{r:?}");
    }

    #[test]
    fn exit_law_rows_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::ExitLaw);
        cfg.samples = 2000;
        cfg.output_path = dir.path().to_path_buf();
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.rows_of("survival").count(), EXIT_TIMES.len());
        assert!(rep.row("ks").is_some() && rep.row("laplace").is_some());
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
        let back = read_rows(&dir.path().join("rows.csv")).unwrap();
        let json: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        for rows in [&back, &json.rows] {
            assert_eq!(rows.len(), rep.rows.len());
            for (x, y) in rows.iter().zip(&rep.rows) {
                assert_eq!((&x.quantity, x.pass), (&y.quantity, y.pass));
                assert!(close(x.estimate, y.estimate) && close(x.analytic_target.unwrap(), y.analytic_target.unwrap()));
            }
        }
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Covariance);
        cfg.lattice_n = 1 << 20;
        assert!(matches!(execute(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn sweep_checks_axis_and_values() {
        let cfg = ExperimentConfig::new(ExperimentKind::ContentLemma);
        assert!(sweep(&cfg, "delta", &[]).is_err());
        assert!(sweep(&cfg, "seed", &["1".into()]).is_err());
        assert!(sweep(&cfg, "output_path", &["x".into()]).is_err());
    }

    #[test]
    fn sweep_writes_reports_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::ExitLaw);
        cfg.samples = 500;
        cfg.seed = 10;
        cfg.output_path = dir.path().to_path_buf();
        let values: Vec<String> = ["1", "1.5"].map(String::from).to_vec();
        let reps = sweep(&cfg, "a", &values).unwrap();
        assert_eq!(reps.len(), 2);
        assert_eq!(reps[1].config.seed, 11);
        assert!(dir.path().join("a=1.5").join("rows.csv").exists());
        let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(
            text.lines().count(),
            1 + reps.iter().map(|r| r.rows.len()).sum::<usize>()
        );
    }
}
