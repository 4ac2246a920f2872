use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use affinest::{iterate, mean_state, EstimatorState, Sample, WeightScheme};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::{emit, input, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EllipseEstimator {
    Mean,
    L1,
    L2,
}

impl EllipseEstimator {
    fn name(self) -> &'static str {
        match self {
            EllipseEstimator::Mean => "mean",
            EllipseEstimator::L1 => "l1",
            EllipseEstimator::L2 => "l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EllipseFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct EllipsesArgs {
    /// CSV file with two columns
    pub input: PathBuf,
    /// Centers to draw around
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EllipseEstimator::Mean, EllipseEstimator::L1, EllipseEstimator::L2])]
    pub estimators: Vec<EllipseEstimator>,
    #[arg(long, default_value_t = 15)]
    pub kn: usize,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Keep ranks 1, 1 + every, 1 + 2 every, ...
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    #[arg(long, value_enum, default_value_t = EllipseFormat::Csv)]
    pub format: EllipseFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The ellipse `{x : (x - c)ᵀ S⁻¹ (x - c) = level}` passes through observation
/// `observation` (1-based), where `S` is the scatter matrix about `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseRecord {
    pub estimator: String,
    pub observation: usize,
    pub rank: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub shape_xx: f64,
    pub shape_xy: f64,
    pub shape_yy: f64,
    pub level: f64,
}

fn records_for(name: &str, state: &EstimatorState, every: usize) -> Vec<EllipseRecord> {
    state
        .order()
        .into_iter()
        .filter(|&i| (state.ranks[i] - 1).is_multiple_of(every))
        .map(|i| EllipseRecord {
            estimator: name.to_string(),
            observation: i + 1,
            rank: state.ranks[i],
            center_x: state.center[0],
            center_y: state.center[1],
            shape_xx: state.scatter.get(0, 0),
            shape_xy: state.scatter.get(0, 1),
            shape_yy: state.scatter.get(1, 1),
            level: state.distances[i],
        })
        .collect()
}

pub fn ellipses(sample: &Sample, args: &EllipsesArgs) -> Result<Vec<EllipseRecord>, CliError> {
    if sample.p() != 2 {
        return Err(CliError::Dimension(sample.p()));
    }
    if args.every == 0 {
        return Err(CliError::Config("--every must be at least 1".into()));
    }
    let mut out = Vec::new();
    for &est in &args.estimators {
        let scheme = match est {
            EllipseEstimator::Mean => None,
            EllipseEstimator::L1 => Some(WeightScheme::TrimmedL1 { k_n: args.kn }),
            EllipseEstimator::L2 => Some(WeightScheme::RankWeightedL2 { k_n: args.kn }),
        };
        let state = match scheme {
            None => mean_state(sample)?,
            Some(s) => {
                s.validate(sample.n())?;
                let trace = iterate(sample, &s, args.iterations, 0.0).map_err(|f| CliError::from(f.source))?;
                trace.last().expect("non-empty trace").clone()
            }
        };
        out.extend(records_for(est.name(), &state, args.every));
    }
    Ok(out)
}

pub fn to_csv(records: &[EllipseRecord]) -> String {
    let mut s =
        String::from("estimator,observation,rank,center_x,center_y,shape_xx,shape_xy,shape_yy,level\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.estimator,
            r.observation,
            r.rank,
            r.center_x,
            r.center_y,
            r.shape_xx,
            r.shape_xy,
            r.shape_yy,
            r.level
        );
    }
    s
}

pub fn run(args: &EllipsesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sample = input::read_sample(&args.input)?;
    let records = ellipses(&sample, args)?;
    let text = match args.format {
        EllipseFormat::Csv => to_csv(&records),
        EllipseFormat::Json => {
            let mut t = serde_json::to_string_pretty(&records).map_err(|e| CliError::Runtime(e.to_string()))?;
            t.push('\n');
            t
        }
    };
    emit(&text, args.out.as_ref(), out)
}
