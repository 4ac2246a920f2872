//! Affine-equivariant L-estimators of location driven by Mahalanobis ranks.
//!
//! Starting from the sample mean, each step measures every observation
//! against the current center and the unnormalized scatter about it,
//!
//! ```text
//! A  = Σ_i (X_i - c)(X_i - c)ᵀ
//! d_i = (X_i - c)ᵀ A⁻¹ (X_i - c)
//! ```
//!
//! ranks the `d_i`, and moves the center to `Σ_i w(R_i) X_i`. The `d_i`
//! always lie in `[0, 1]` and sum to `p`, and both they and their ranks are
//! unchanged by any nonsingular affine map of the data, so every iterate
//! transforms like the data does.

mod sample;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::linalg::{leverages, norm_inf, spd_factorize, LinalgError, Matrix};

pub use sample::Sample;
pub use weights::{binomial, ln_binomial, WeightScheme, EXACT_BINOMIAL_LIMIT};

/// One step of the iteration: center, scatter about it, distances and ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub step: usize,
    pub center: Vec<f64>,
    /// `Σ_i (X_i - center)(X_i - center)ᵀ`, without a `1/n` factor.
    pub scatter: Matrix,
    pub log_det: f64,
    pub distances: Vec<f64>,
    /// 1-based ranks of `distances`.
    pub ranks: Vec<usize>,
}

impl EstimatorState {
    /// Observation indices sorted by rank: `order()[r - 1]` has rank `r`.
    pub fn order(&self) -> Vec<usize> {
        rank_order(&self.ranks)
    }
}

/// How the first L-step picks its ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initializer {
    /// Rank against the sample mean and its scatter.
    #[default]
    Mean,
    /// Rank against the observation closest to the mean (rank 1 at step 0)
    /// and the scatter about that observation.
    NearestObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub scheme: WeightScheme,
    pub max_steps: usize,
    /// Early stop once `‖c_r - c_{r-1}‖∞ <= tol`; `0` runs every step.
    pub tol: f64,
    pub initializer: Initializer,
}

impl IterateOptions {
    pub fn new(scheme: WeightScheme, max_steps: usize) -> Self {
        Self {
            scheme,
            max_steps,
            tol: 0.0,
            initializer: Initializer::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `states[0]` is the mean state; `states[r]` holds `L^(r)`.
    pub states: Vec<EstimatorState>,
    /// `d_efficiency[r - 1]` is `(|A^(r)| / |A^(0)|)^{1/p}`.
    pub d_efficiency: Vec<f64>,
    pub converged_at: Option<usize>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&EstimatorState> {
        self.states.last()
    }

    /// Number of L-steps taken.
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// An aborted iteration together with everything computed before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("iteration aborted: {source}")]
pub struct IterationFailure {
    pub partial: IterationTrace,
    #[source]
    pub source: Error,
}

impl From<IterationFailure> for Error {
    fn from(f: IterationFailure) -> Error {
        f.source
    }
}

/// Distances closer than this are treated as tied.
///
/// Distances lie in `[0, 1]`, so an absolute tolerance is scale free. Exact
/// ties arise structurally (two observations symmetric about the center) and
/// rounding would otherwise order them arbitrarily.
pub const TIE_TOL: f64 = 1e-10;

/// `R_i = #{j : d_j <= d_i}`, ties broken by index so the result is always
/// a permutation of `1..=n`. Runs of sorted distances whose successive gaps
/// are at most [`TIE_TOL`] count as one tie.
pub fn ranks_of(d: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut start = 0;
    for end in 1..=idx.len() {
        if end == idx.len() || d[idx[end]] - d[idx[end - 1]] > TIE_TOL {
            idx[start..end].sort_unstable();
            start = end;
        }
    }
    let mut ranks = vec![0; d.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Inverse permutation of a 1-based rank vector.
pub fn rank_order(ranks: &[usize]) -> Vec<usize> {
    let mut order = vec![0; ranks.len()];
    for (i, &r) in ranks.iter().enumerate() {
        order[r - 1] = i;
    }
    order
}

fn degenerate(step: usize) -> impl Fn(LinalgError) -> Error {
    move |source| Error::DegenerateScatter { step, source }
}

fn centered(sample: &Sample, center: &[f64]) -> Matrix {
    let data = sample
        .rows()
        .flat_map(|x| x.iter().zip(center).map(|(xi, ci)| xi - ci))
        .collect();
    Matrix::new(sample.n(), sample.p(), data).expect("finite sample")
}

/// Scatter, distances and ranks of `sample` measured from `center`.
///
/// Distances are the leverages of the centered rows, which equal
/// `(X_i - c)ᵀ A⁻¹ (X_i - c)` with `A = Σ (X_i - c)(X_i - c)ᵀ`.
pub fn state_about(sample: &Sample, center: Vec<f64>, step: usize) -> Result<EstimatorState> {
    if center.len() != sample.p() {
        return Err(LinalgError::DimensionMismatch {
            expected: sample.p(),
            found: center.len(),
        }
        .into());
    }
    let scatter = sample.scatter_about(&center);
    let lev = leverages(&centered(sample, &center)).map_err(degenerate(step))?;
    let ranks = ranks_of(&lev.values);
    Ok(EstimatorState {
        step,
        center,
        scatter,
        log_det: lev.log_det,
        distances: lev.values,
        ranks,
    })
}

/// Step 0: the sample mean with `A^(0) = Σ (X_i - X̄)(X_i - X̄)ᵀ`.
pub fn mean_state(sample: &Sample) -> Result<EstimatorState> {
    state_about(sample, sample.mean(), 0)
}

/// `Σ_r w[r - 1] X_(r)`, accumulated in rank order.
pub fn weighted_center(sample: &Sample, ranks: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut center = vec![0.0; sample.p()];
    for (&i, &w) in rank_order(ranks).iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (c, x) in center.iter_mut().zip(sample.row(i)) {
            *c += w * x;
        }
    }
    center
}

/// One L-step with a precomputed rank-weight vector.
pub fn l_step_with_weights(
    sample: &Sample,
    prev: &EstimatorState,
    weights: &[f64],
) -> Result<EstimatorState> {
    if weights.len() != sample.n() || prev.ranks.len() != sample.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: sample.n(),
            found: weights.len().min(prev.ranks.len()),
        }
        .into());
    }
    let center = weighted_center(sample, &prev.ranks, weights);
    state_about(sample, center, prev.step + 1)
}

/// `L^(r) = Σ_i w(R_i^(r-1)) X_i` and the state measured from it.
pub fn l_step(sample: &Sample, prev: &EstimatorState, scheme: &WeightScheme) -> Result<EstimatorState> {
    let w = scheme.weights(sample.n())?;
    l_step_with_weights(sample, prev, &w)
}

/// `(|A_r| / |A_0|)^{1/p}`.
pub fn d_efficiency(a_r: &Matrix, a_0: &Matrix, p: usize) -> Result<f64> {
    if a_r.rows() != p || a_0.rows() != p {
        return Err(LinalgError::DimensionMismatch {
            expected: p,
            found: a_r.rows().max(a_0.rows()),
        }
        .into());
    }
    let fr = spd_factorize(a_r).map_err(degenerate(0))?;
    let f0 = spd_factorize(a_0).map_err(degenerate(0))?;
    Ok(d_efficiency_from_log_dets(fr.log_det(), f0.log_det(), p))
}

#[inline]
pub fn d_efficiency_from_log_dets(log_det_r: f64, log_det_0: f64, p: usize) -> f64 {
    ((log_det_r - log_det_0) / p as f64).exp()
}

pub fn iterate(
    sample: &Sample,
    scheme: &WeightScheme,
    max_steps: usize,
    tol: f64,
) -> Result<IterationTrace, IterationFailure> {
    iterate_with(
        sample,
        &IterateOptions {
            tol,
            ..IterateOptions::new(scheme.clone(), max_steps)
        },
    )
}

/// Runs the mean state followed by up to `max_steps` L-steps.
pub fn iterate_with(
    sample: &Sample,
    opts: &IterateOptions,
) -> Result<IterationTrace, IterationFailure> {
    let mut trace = IterationTrace {
        states: Vec::with_capacity(opts.max_steps + 1),
        d_efficiency: Vec::with_capacity(opts.max_steps),
        converged_at: None,
    };
    macro_rules! bail {
        ($e:expr) => {
            return Err(IterationFailure {
                partial: trace,
                source: $e,
            })
        };
    }
    if opts.max_steps == 0 {
        bail!(Error::ConfigInvalid("max_steps must be at least 1".into()));
    }
    if !(opts.tol >= 0.0) {
        bail!(Error::ConfigInvalid(format!("tol = {} must be >= 0", opts.tol)));
    }
    let weights = match opts.scheme.weights(sample.n()) {
        Ok(w) => w,
        Err(e) => bail!(e),
    };
    let initial = match mean_state(sample) {
        Ok(s) => s,
        Err(e) => bail!(e),
    };
    let log_det_0 = initial.log_det;
    let p = sample.p();

    let seed = match opts.initializer {
        Initializer::Mean => None,
        Initializer::NearestObservation => {
            let nearest = initial.order()[0];
            match state_about(sample, sample.row(nearest).to_vec(), 0) {
                Ok(s) => Some(s),
                Err(e) => {
                    trace.states.push(initial);
                    bail!(e)
                }
            }
        }
    };
    trace.states.push(initial);

    for r in 1..=opts.max_steps {
        let prev = match (r, &seed) {
            (1, Some(s)) => s,
            _ => trace.states.last().expect("non-empty"),
        };
        let next = match l_step_with_weights(sample, prev, &weights) {
            Ok(s) => s,
            Err(e) => bail!(e),
        };
        let delta = next
            .center
            .iter()
            .zip(&trace.states[r - 1].center)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>();
        trace
            .d_efficiency
            .push(d_efficiency_from_log_dets(next.log_det, log_det_0, p));
        trace.states.push(next);
        if opts.tol > 0.0 && norm_inf(&delta) <= opts.tol {
            trace.converged_at = Some(r);
            break;
        }
    }
    Ok(trace)
}

/// Distances of `X_1..X_{n-1}` measured from `X_n` with
/// `Ṽ = Σ_{i<n} (X_i - X_n)(X_i - X_n)ᵀ`; a second form of the maximal invariant.
pub fn reduced_invariant(sample: &Sample) -> Result<Vec<f64>> {
    let n = sample.n();
    let p = sample.p();
    let anchor = sample.row(n - 1);
    let data = (0..n - 1)
        .flat_map(|i| sample.row(i).iter().zip(anchor).map(|(x, a)| x - a))
        .collect();
    let diffs = Matrix::new(n - 1, p, data).expect("finite sample");
    Ok(leverages(&diffs).map_err(degenerate(0))?.values)
}
