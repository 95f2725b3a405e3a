use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tvslab::experiment::{self, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(
    name = "tvslab",
    version,
    about = "Monte Carlo experiments on two-valued sets and imaginary chaos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json and rows.csv to its output_path.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set samples=500`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the experiment once per value of one numeric key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    for o in overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(rep: &ExperimentReport) {
    println!(
        "{} (n = {}, samples = {}, seed = {}): {} in {:.1}s",
        rep.config.experiment,
        rep.config.lattice_n,
        rep.config.samples,
        rep.config.seed,
        if rep.pass { "pass" } else { "FAIL" },
        rep.wall_clock_secs
    );
    for r in &rep.rows {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
        let flag = match r.pass {
            Some(true) => "ok",
            Some(false) => "FAIL",
            None => "",
        };
        println!(
            "  {:<18} {:>10} {:>14.6} ± {:<10} target {:<12} {flag}",
            r.quantity,
            fmt(r.at),
            r.estimate,
            fmt(r.se),
            fmt(r.analytic_target)
        );
    }
    for n in &rep.notes {
        println!("  note: {n}");
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, overrides } => load(&config, &overrides).and_then(|cfg| {
            let rep = experiment::run(&cfg)?;
            print_report(&rep);
            println!("wrote {}", cfg.output_path.display());
            Ok(rep.pass)
        }),
        Command::Sweep {
            config,
            axis,
            values,
            overrides,
        } => load(&config, &overrides).and_then(|cfg| {
            let reps = experiment::sweep(&cfg, &axis, &values)?;
            for rep in &reps {
                print_report(rep);
            }
            println!("wrote {}", cfg.output_path.join("summary.csv").display());
            Ok(reps.iter().all(|r| r.pass))
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
