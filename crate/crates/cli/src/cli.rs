use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::{self, ConvergenceRecord, RunError, BUDGET_COLUMNS, CLIFFORD_COLUMNS, SWEEP_COLUMNS};
use crate::config::{self, ConfigError, RunConfig};
use crate::output;

/// Autonomous Bell-state stabilization: master-equation experiments.
#[derive(Debug, Parser)]
#[command(name = "bellstab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; device defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and budgets.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady state after `t_final_us`.
    Steady,
    /// Fidelity against stabilization time, with an exponential fit.
    Convergence {
        /// Comma-separated stabilization times (us).
        #[arg(long, value_delimiter = ',')]
        ts: Option<Vec<f64>>,
    },
    /// Steady-state fidelity over the n̄ × Ωⁿ grid.
    Sweep,
    /// Fidelity with each imperfection introduced separately.
    Budget,
    /// Conditioning on the parity monitor reporting odd parity.
    Postselect {
        /// Kept window is I < threshold (units of σ); `inf` keeps everything.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Simulated joint-readout tomography of the steady state.
    Tomo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Convergence { .. } => "convergence",
            Command::Sweep => "sweep",
            Command::Budget => "budget",
            Command::Postselect { .. } => "postselect",
            Command::Tomo => "tomo",
        }
    }
}

/// Configuration after command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = cli.tol {
        cfg.solver.tol = Some(t);
    }
    match &cli.command {
        Command::Convergence { ts: Some(ts) } => cfg.convergence.ts_us = Some(ts.clone()),
        Command::Postselect { threshold: Some(th) } => cfg.readout.parity_monitor.threshold_sigma = Some(*th),
        _ => {}
    }
    Ok(cfg)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    let res = effective_config(cli)?.resolve()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(ConfigError::Invalid("--workers must be at least 1".into()).into());
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = res.config_json();
    let name = cli.command.name();
    let dir = &cli.out;
    let start = Instant::now();

    let mut paths = Vec::new();
    match &cli.command {
        Command::Steady => {
            let r = commands::steady(&res)?;
            paths.push(output::write(dir, "steady.json", &output::json_text(name, &cfg, &r))?);
        }
        Command::Convergence { .. } => {
            let r = commands::convergence(&res)?;
            let csv = output::csv_text(name, &cfg, &ConvergenceRecord::COLUMNS, &r.rows());
            paths.push(output::write(dir, "convergence.csv", &csv)?);
            let fit = serde_json::json!({ "fit": r.fit, "fit_error": r.fit_error });
            paths.push(output::write(dir, "convergence_fit.json", &output::json_text(name, &cfg, &fit))?);
        }
        Command::Sweep => {
            let rows: Vec<_> = commands::sweep(&res).iter().map(|r| r.cells()).collect();
            paths.push(output::write(dir, "sweep.csv", &output::csv_text(name, &cfg, &SWEEP_COLUMNS, &rows))?);
        }
        Command::Budget => {
            let rows: Vec<_> = commands::budget(&res)?.iter().map(|r| r.cells()).collect();
            paths.push(output::write(dir, "budget.csv", &output::csv_text(name, &cfg, &BUDGET_COLUMNS, &rows))?);
        }
        Command::Postselect { .. } => {
            let r = commands::postselect(&res)?;
            if let Some(note) = &r.note {
                eprintln!("warning: {note}");
            }
            paths.push(output::write(dir, "postselect.json", &output::json_text(name, &cfg, &r))?);
        }
        Command::Tomo => {
            let r = commands::tomography(&res)?;
            paths.push(output::write(dir, "tomography.json", &output::json_text(name, &cfg, &r))?);
            let rows: Vec<_> = r.clifford.iter().map(|c| c.cells()).collect();
            paths.push(output::write(dir, "clifford.csv", &output::csv_text(name, &cfg, &CLIFFORD_COLUMNS, &rows))?);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    eprintln!("{name}: {secs:.2} s");
    paths.push(output::write_timing(dir, name, secs)?);
    Ok(paths)
}
