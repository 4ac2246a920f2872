use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use affinest::simulation::{run_simulation_with_threads, CellStats};
use affinest::{SimulationConfig, SimulationSummary};
use clap::Args;

use crate::{CliError, THREADS_ENV};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON simulation configuration
    pub config: PathBuf,
    /// Directory receiving summary.json, estimates.csv, defficiency.csv and comparators.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Override the configuration's master seed
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<SimulationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg: SimulationConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the worker count from the environment; unset means all cores.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} = '{v}' is not a thread count"))),
        Err(_) => Ok(0),
    }
}

const STATS_HEADER: &str = "mean,median,q25,q75,min,max";

fn stats_cells(s: &CellStats) -> String {
    format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        s.mean, s.median, s.q25, s.q75, s.min, s.max
    )
}

pub fn estimates_csv(summary: &SimulationSummary) -> String {
    let mut s = format!("scheme,iteration,coordinate,{STATS_HEADER}\n");
    for sc in &summary.schemes {
        for it in &sc.iterations {
            for (j, c) in it.center.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", sc.label, it.iteration, j + 1, stats_cells(c));
            }
        }
    }
    s
}

pub fn defficiency_csv(summary: &SimulationSummary) -> String {
    let mut s = format!("scheme,iteration,{STATS_HEADER}\n");
    for sc in &summary.schemes {
        for it in &sc.iterations {
            let _ = writeln!(s, "{},{},{}", sc.label, it.iteration, stats_cells(&it.d_efficiency));
        }
    }
    s
}

pub fn comparators_csv(summary: &SimulationSummary) -> String {
    let mut s = format!("estimator,coordinate,{STATS_HEADER}\n");
    for c in &summary.comparators {
        for (j, st) in c.center.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", c.estimator.name(), j + 1, stats_cells(st));
        }
    }
    s
}

pub fn summary_json(summary: &SimulationSummary) -> Result<String, CliError> {
    let mut t = serde_json::to_string_pretty(summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    t.push('\n');
    Ok(t)
}

/// Writes the four output files into `dir`, creating it if needed.
pub fn write_outputs(summary: &SimulationSummary, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let files = [
        ("summary.json", summary_json(summary)?),
        ("estimates.csv", estimates_csv(summary)),
        ("defficiency.csv", defficiency_csv(summary)),
        ("comparators.csv", comparators_csv(summary)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// One-line description of a finished run.
pub fn digest(summary: &SimulationSummary) -> String {
    let cfg = &summary.config;
    let mut s = format!(
        "{} of {} replications (n = {}, p = {}, seed {})",
        summary.succeeded,
        summary.replications,
        cfg.n,
        cfg.spec.dim(),
        cfg.master_seed
    );
    for sc in &summary.schemes {
        if let Some(last) = sc.iterations.last() {
            let means: Vec<String> = last.center.iter().map(|c| format!("{:.4}", c.mean)).collect();
            let _ = write!(
                s,
                "; {} r={} mean ({}) median D {:.4}",
                sc.label,
                last.iteration,
                means.join(", "),
                last.d_efficiency.median
            );
        }
    }
    s
}

pub fn run(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let threads = threads_from_env()?;
    let summary = run_simulation_with_threads(&cfg, threads)?;
    write_outputs(&summary, &args.out)?;
    writeln!(out, "{}", digest(&summary))?;
    Ok(())
}
