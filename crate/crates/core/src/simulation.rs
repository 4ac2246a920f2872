//! Monte-Carlo harness for the iterated L-estimators.
//!
//! Replication `i` draws its sample from stream `i` of the generator keyed by
//! `master_seed`, so every replication is reproducible in isolation and the
//! records can be produced in any order (or in parallel). Aggregation walks
//! the records by index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparators::{coordinate_median, spatial_median, SPATIAL_MEDIAN_MAX_ITER, SPATIAL_MEDIAN_TOL};
use crate::error::{Error, Result};
use crate::estimators::{iterate, Sample, WeightScheme};
use crate::sampling::{DistributionSpec, Sampler};

/// Fraction of degenerate replications above which a run is rejected.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparatorFlags {
    pub mean: bool,
    pub coordinate_median: bool,
    pub spatial_median: bool,
}

impl ComparatorFlags {
    pub fn all() -> Self {
        Self {
            mean: true,
            coordinate_median: true,
            spatial_median: true,
        }
    }

    fn enabled(&self) -> Vec<Comparator> {
        let mut out = Vec::new();
        if self.mean {
            out.push(Comparator::Mean);
        }
        if self.coordinate_median {
            out.push(Comparator::CoordinateMedian);
        }
        if self.spatial_median {
            out.push(Comparator::SpatialMedian);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Mean,
    CoordinateMedian,
    SpatialMedian,
}

impl Comparator {
    pub fn name(self) -> &'static str {
        match self {
            Comparator::Mean => "mean",
            Comparator::CoordinateMedian => "coordinate_median",
            Comparator::SpatialMedian => "spatial_median",
        }
    }

    fn estimate(self, sample: &Sample) -> Result<Vec<f64>> {
        match self {
            Comparator::Mean => Ok(sample.mean()),
            Comparator::CoordinateMedian => Ok(coordinate_median(sample.as_matrix())),
            Comparator::SpatialMedian => {
                spatial_median(sample.as_matrix(), SPATIAL_MEDIAN_TOL, SPATIAL_MEDIAN_MAX_ITER)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub spec: DistributionSpec,
    pub n: usize,
    pub replications: usize,
    pub schemes: Vec<WeightScheme>,
    pub iterations: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub comparators: ComparatorFlags,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("at least one weight scheme is required".into());
        }
        if self.n <= self.spec.dim() {
            return bad(format!(
                "n = {} must exceed the dimension {}",
                self.n,
                self.spec.dim()
            ));
        }
        self.spec.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        for s in &self.schemes {
            s.validate(self.n)
                .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        }
        Ok(())
    }
}

/// Order statistics of one aggregated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

impl CellStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: quantile_sorted(&sorted, 0.5),
            q25: quantile_sorted(&sorted, 0.25),
            q75: quantile_sorted(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Linear-interpolation quantile between closest ranks (`h = (n-1) q`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::ConfigInvalid(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    /// One entry per coordinate.
    pub center: Vec<CellStats>,
    pub d_efficiency: CellStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub label: String,
    pub scheme: WeightScheme,
    pub iterations: Vec<IterationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSummary {
    pub estimator: Comparator,
    pub center: Vec<CellStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: SimulationConfig,
    pub replications: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub failed_replications: Vec<usize>,
    pub schemes: Vec<SchemeSummary>,
    pub comparators: Vec<ComparatorSummary>,
}

impl SimulationSummary {
    pub fn scheme(&self, scheme: &WeightScheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| &s.scheme == scheme)
    }

    pub fn comparator(&self, which: Comparator) -> Option<&ComparatorSummary> {
        self.comparators.iter().find(|c| c.estimator == which)
    }
}

/// Everything recorded for one successful replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    /// `centers[s][r - 1]` is scheme `s` after `r` steps.
    pub centers: Vec<Vec<Vec<f64>>>,
    /// `d_efficiency[s][r - 1]`.
    pub d_efficiency: Vec<Vec<f64>>,
    pub comparators: Vec<Vec<f64>>,
}

/// Runs replication `index` of `cfg`.
pub fn run_replication(
    cfg: &SimulationConfig,
    sampler: &Sampler,
    index: usize,
) -> Result<ReplicationRecord> {
    let sample = sampler.sample_stream(cfg.n, cfg.master_seed, index as u64)?;
    let mut centers = Vec::with_capacity(cfg.schemes.len());
    let mut d_efficiency = Vec::with_capacity(cfg.schemes.len());
    for scheme in &cfg.schemes {
        let trace = iterate(&sample, scheme, cfg.iterations, 0.0)?;
        centers.push(trace.states[1..].iter().map(|s| s.center.clone()).collect());
        d_efficiency.push(trace.d_efficiency);
    }
    let comparators = cfg
        .comparators
        .enabled()
        .into_iter()
        .map(|c| c.estimate(&sample))
        .collect::<Result<_>>()?;
    Ok(ReplicationRecord {
        index,
        centers,
        d_efficiency,
        comparators,
    })
}

/// All replication outcomes, ordered by index.
pub fn run_replications(
    cfg: &SimulationConfig,
    threads: usize,
) -> Result<Vec<(usize, Result<ReplicationRecord>)>> {
    cfg.validate()?;
    let sampler = Sampler::new(cfg.spec.clone())?;
    let work = || -> Vec<(usize, Result<ReplicationRecord>)> {
        (0..cfg.replications)
            .into_par_iter()
            .map(|i| (i, run_replication(cfg, &sampler, i)))
            .collect()
    };
    if threads == 0 {
        Ok(work())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        Ok(pool.install(work))
    }
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationSummary> {
    run_simulation_with_threads(cfg, 0)
}

/// `threads = 0` uses the global rayon pool.
pub fn run_simulation_with_threads(cfg: &SimulationConfig, threads: usize) -> Result<SimulationSummary> {
    let outcomes = run_replications(cfg, threads)?;
    summarize(cfg, outcomes)
}

/// Aggregates `(index, outcome)` pairs into a summary.
pub fn summarize(
    cfg: &SimulationConfig,
    mut outcomes: Vec<(usize, Result<ReplicationRecord>)>,
) -> Result<SimulationSummary> {
    outcomes.sort_by_key(|(i, _)| *i);
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failed_replications = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) if e.is_degenerate() => failed_replications.push(i),
            Err(e) => return Err(e),
        }
    }
    let failed = failed_replications.len();
    if failed as f64 > MAX_FAILURE_FRACTION * cfg.replications as f64 {
        return Err(Error::TooManyFailures {
            failed,
            replications: cfg.replications,
        });
    }

    let p = cfg.spec.dim();
    let mut column = Vec::with_capacity(records.len());
    let mut stats_of = |f: &dyn Fn(&ReplicationRecord) -> f64| -> Result<CellStats> {
        column.clear();
        column.extend(records.iter().map(f));
        CellStats::from_values(&column)
    };

    let mut schemes = Vec::with_capacity(cfg.schemes.len());
    for (s, scheme) in cfg.schemes.iter().enumerate() {
        let mut iterations = Vec::with_capacity(cfg.iterations);
        for r in 0..cfg.iterations {
            let center = (0..p)
                .map(|j| stats_of(&|rec| rec.centers[s][r][j]))
                .collect::<Result<_>>()?;
            let d_efficiency = stats_of(&|rec| rec.d_efficiency[s][r])?;
            iterations.push(IterationSummary {
                iteration: r + 1,
                center,
                d_efficiency,
            });
        }
        schemes.push(SchemeSummary {
            label: scheme.label(),
            scheme: scheme.clone(),
            iterations,
        });
    }

    let comparators = cfg
        .comparators
        .enabled()
        .into_iter()
        .enumerate()
        .map(|(c, estimator)| {
            let center = (0..p)
                .map(|j| stats_of(&|rec| rec.comparators[c][j]))
                .collect::<Result<_>>()?;
            Ok(ComparatorSummary { estimator, center })
        })
        .collect::<Result<_>>()?;

    Ok(SimulationSummary {
        config: cfg.clone(),
        replications: cfg.replications,
        succeeded: records.len(),
        failed,
        failed_replications,
        schemes,
        comparators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::DistributionKind;

    fn degenerate() -> Error {
        Error::DegenerateScatter {
            step: 0,
            source: crate::linalg::LinalgError::NotPositiveDefinite { pivot: 0, value: 0.0 },
        }
    }

    fn small_config(replications: usize) -> SimulationConfig {
        SimulationConfig {
            spec: DistributionSpec::reference(DistributionKind::Normal),
            n: 40,
            replications,
            schemes: vec![
                WeightScheme::TrimmedL1 { k_n: 8 },
                WeightScheme::RankWeightedL2 { k_n: 8 },
            ],
            iterations: 4,
            master_seed: 17,
            comparators: ComparatorFlags::all(),
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[5.0], 0.3).unwrap(), 5.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25).unwrap(), 2.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptyInput)));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn single_replication_cells_collapse() {
        let s = run_simulation(&small_config(1)).unwrap();
        assert_eq!(s.succeeded, 1);
        for scheme in &s.schemes {
            for it in &scheme.iterations {
                for c in it.center.iter().chain([&it.d_efficiency]) {
                    assert_eq!(c.mean, c.median);
                    assert_eq!(c.min, c.max);
                    assert_eq!(c.q25, c.q75);
                    assert_eq!(c.min, c.mean);
                }
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = small_config(24);
        let a = run_simulation_with_threads(&cfg, 1).unwrap();
        let b = run_simulation_with_threads(&cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregation_ignores_record_order() {
        let cfg = small_config(10);
        let mut outcomes = run_replications(&cfg, 1).unwrap();
        let forward = summarize(&cfg, outcomes.clone()).unwrap();
        outcomes.reverse();
        assert_eq!(summarize(&cfg, outcomes).unwrap(), forward);
    }

    #[test]
    fn cells_are_ordered() {
        let s = run_simulation(&small_config(30)).unwrap();
        let cells = s
            .schemes
            .iter()
            .flat_map(|sc| sc.iterations.iter())
            .flat_map(|it| it.center.iter().chain([&it.d_efficiency]))
            .chain(s.comparators.iter().flat_map(|c| c.center.iter()));
        for c in cells {
            assert!(c.min <= c.q25 && c.q25 <= c.median && c.median <= c.q75 && c.q75 <= c.max);
        }
        assert_eq!(s.comparators.len(), 3);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = small_config(0);
        assert!(matches!(run_simulation(&cfg), Err(Error::ConfigInvalid(_))));
        cfg.replications = 3;
        cfg.iterations = 0;
        assert!(matches!(run_simulation(&cfg), Err(Error::ConfigInvalid(_))));
        cfg.iterations = 2;
        cfg.schemes = vec![WeightScheme::TrimmedL1 { k_n: 41 }];
        assert!(matches!(run_simulation(&cfg), Err(Error::ConfigInvalid(_))));
        cfg.schemes.clear();
        assert!(matches!(run_simulation(&cfg), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn too_many_failures() {
        // A rank-one covariance makes every sample degenerate.
        let mut cfg = small_config(5);
        cfg.spec.sigma = crate::linalg::Matrix::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        assert!(run_simulation(&cfg).is_err());
        let outcomes: Vec<(usize, Result<ReplicationRecord>)> = (0..200)
            .map(|i| (i, Err(degenerate())))
            .collect();
        let cfg = small_config(200);
        assert!(matches!(
            summarize(&cfg, outcomes),
            Err(Error::TooManyFailures { failed: 200, replications: 200 })
        ));
    }

    #[test]
    fn tolerated_failures_are_reported() {
        let cfg = small_config(200);
        let mut outcomes = run_replications(&cfg, 0).unwrap();
        outcomes[7].1 = Err(degenerate());
        let s = summarize(&cfg, outcomes).unwrap();
        assert_eq!(s.failed, 1);
        assert_eq!(s.failed_replications, vec![7]);
        assert_eq!(s.succeeded, 199);
    }
}
