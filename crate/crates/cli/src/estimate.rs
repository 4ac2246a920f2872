use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use affinest::{iterate_with, Initializer, IterateOptions, IterationTrace, Matrix, Sample, WeightScheme};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::{emit, input, CliError, Format, SchemeArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Start from the sample mean
    Mean,
    /// Start the first step from the observation nearest the mean
    Nearest,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// CSV file with one observation per row
    pub input: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Maximum number of L-steps
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Stop once no center coordinate moves more than this (0 runs every step)
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Mean)]
    pub init: InitArg,
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub center: Vec<f64>,
    pub scatter: Matrix,
    pub d_efficiency: f64,
}

/// Full result of `estimate`; the distances and ranks belong to the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n: usize,
    pub p: usize,
    pub label: String,
    pub scheme: WeightScheme,
    pub steps: Vec<StepReport>,
    pub converged_at: Option<usize>,
    pub distances: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl EstimateReport {
    pub fn new(sample: &Sample, scheme: &WeightScheme, trace: &IterationTrace) -> Self {
        let steps = trace
            .states
            .iter()
            .map(|s| StepReport {
                step: s.step,
                center: s.center.clone(),
                scatter: s.scatter.clone(),
                d_efficiency: if s.step == 0 { 1.0 } else { trace.d_efficiency[s.step - 1] },
            })
            .collect();
        let last = trace.last().expect("trace has the initial state");
        Self {
            n: sample.n(),
            p: sample.p(),
            label: scheme.label(),
            scheme: scheme.clone(),
            steps,
            converged_at: trace.converged_at,
            distances: last.distances.clone(),
            ranks: last.ranks.clone(),
        }
    }

    pub fn to_plain(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}  n = {}  p = {}", self.label, self.n, self.p);
        let _ = write!(s, "{:>4}", "step");
        for j in 1..=self.p {
            let _ = write!(s, " {:>12}", format!("x{j}"));
        }
        let _ = writeln!(s, " {:>12}", "D");
        for st in &self.steps {
            let _ = write!(s, "{:>4}", st.step);
            for c in &st.center {
                let _ = write!(s, " {c:>12.6}");
            }
            let _ = writeln!(s, " {:>12.6}", st.d_efficiency);
        }
        match self.converged_at {
            Some(r) => {
                let _ = writeln!(s, "converged at step {r}");
            }
            None => {
                let _ = writeln!(s, "ran {} steps", self.steps.len() - 1);
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step");
        for j in 1..=self.p {
            let _ = write!(s, ",x{j}");
        }
        s.push_str(",d_efficiency\n");
        for st in &self.steps {
            let _ = write!(s, "{}", st.step);
            for c in &st.center {
                let _ = write!(s, ",{c}");
            }
            let _ = writeln!(s, ",{}", st.d_efficiency);
        }
        s
    }
}

pub fn estimate(sample: &Sample, args: &EstimateArgs) -> Result<EstimateReport, CliError> {
    let scheme = args.scheme.resolve(sample.n())?;
    let opts = IterateOptions {
        tol: args.tol,
        initializer: match args.init {
            InitArg::Mean => Initializer::Mean,
            InitArg::Nearest => Initializer::NearestObservation,
        },
        ..IterateOptions::new(scheme.clone(), args.iterations)
    };
    let trace = iterate_with(sample, &opts).map_err(|f| CliError::from(f.source))?;
    Ok(EstimateReport::new(sample, &scheme, &trace))
}

pub fn run(args: &EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sample = input::read_sample(&args.input)?;
    let report = estimate(&sample, args)?;
    let text = match args.format {
        Format::Plain => report.to_plain(),
        Format::Csv => report.to_csv(),
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
            t.push('\n');
            t
        }
    };
    emit(&text, args.out.as_ref(), out)
}
