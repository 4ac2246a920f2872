//! Rank-to-weight rules for the L-estimators.
//!
//! A scheme realizes a length-`n` vector `w` indexed by Mahalanobis rank
//! (`w[0]` belongs to the observation nearest the current center). Every
//! realized vector is nonincreasing, nonnegative and sums to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k_n` for which binomial coefficients are computed exactly.
pub const EXACT_BINOMIAL_LIMIT: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightScheme {
    /// Equal weight on the `k_n` innermost observations.
    TrimmedL1 { k_n: usize },
    /// Weights `(k_n - i) / C(k_n, 2)` on ranks `i <= k_n`.
    RankWeightedL2 { k_n: usize },
    /// Weights `C(k_n - i, k - 1) / C(k_n, k)` on ranks `i <= k_n`.
    GeneralLk { k_n: usize, k: usize },
    /// Untrimmed weights proportional to `λ^i / i!`, renormalized over `1..=n`.
    Poisson { lambda: f64 },
    /// User scores `a_1 >= ... >= a_n >= 0`, renormalized to unit sum.
    CustomScores { a: Vec<f64> },
}

impl WeightScheme {
    /// Short label used in reports, e.g. `L1(kn=15)`.
    pub fn label(&self) -> String {
        match self {
            WeightScheme::TrimmedL1 { k_n } => format!("L1(kn={k_n})"),
            WeightScheme::RankWeightedL2 { k_n } => format!("L2(kn={k_n})"),
            WeightScheme::GeneralLk { k_n, k } => format!("L{k}(kn={k_n})"),
            WeightScheme::Poisson { lambda } => format!("Poisson(lambda={lambda})"),
            WeightScheme::CustomScores { a } => format!("Scores(n={})", a.len()),
        }
    }

    /// Checks the scheme's parameters against a sample size.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_kn = |k_n: usize, min: usize| {
            if k_n < min || k_n > n {
                Err(Error::InvalidScheme(format!(
                    "k_n = {k_n} must lie in [{min}, {n}]"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            WeightScheme::TrimmedL1 { k_n } => check_kn(k_n, 1),
            WeightScheme::RankWeightedL2 { k_n } => check_kn(k_n, 2),
            WeightScheme::GeneralLk { k_n, k } => {
                check_kn(k_n, 1)?;
                if k == 0 || k > k_n {
                    return Err(Error::InvalidScheme(format!(
                        "k = {k} must lie in [1, k_n = {k_n}]"
                    )));
                }
                Ok(())
            }
            WeightScheme::Poisson { lambda } => {
                if lambda > 0.0 && lambda < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidScheme(format!(
                        "lambda = {lambda} must lie in (0, 1)"
                    )))
                }
            }
            WeightScheme::CustomScores { ref a } => {
                if a.len() != n {
                    return Err(Error::InvalidScheme(format!(
                        "{} scores supplied for {n} observations",
                        a.len()
                    )));
                }
                if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidScheme(
                        "scores must be finite and nonnegative".into(),
                    ));
                }
                if let Some(i) = a.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::InvalidScheme(format!(
                        "scores must be nonincreasing (a[{}] < a[{}])",
                        i + 1,
                        i + 2
                    )));
                }
                if a.iter().all(|&v| v == 0.0) {
                    return Err(Error::InvalidScheme("scores are all zero".into()));
                }
                Ok(())
            }
        }
    }

    /// The realized weight vector over ranks `1..=n`.
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        self.validate(n)?;
        let mut w = vec![0.0; n];
        match *self {
            WeightScheme::TrimmedL1 { k_n } => {
                let v = 1.0 / k_n as f64;
                w[..k_n].fill(v);
            }
            WeightScheme::RankWeightedL2 { k_n } => {
                let pairs = (k_n * (k_n - 1) / 2) as f64;
                for (i, wi) in w[..k_n].iter_mut().enumerate() {
                    *wi = (k_n - (i + 1)) as f64 / pairs;
                }
            }
            WeightScheme::GeneralLk { k_n, k } => {
                if k_n <= EXACT_BINOMIAL_LIMIT {
                    let total = binomial(k_n, k).expect("exact below limit") as f64;
                    for (i, wi) in w[..k_n].iter_mut().enumerate() {
                        let c = binomial(k_n - (i + 1), k - 1).expect("exact below limit");
                        *wi = c as f64 / total;
                    }
                } else {
                    let ln_total = ln_binomial(k_n, k);
                    for (i, wi) in w[..k_n].iter_mut().enumerate() {
                        let rem = k_n - (i + 1);
                        *wi = if rem + 1 < k {
                            0.0
                        } else {
                            (ln_binomial(rem, k - 1) - ln_total).exp()
                        };
                    }
                }
            }
            WeightScheme::Poisson { lambda } => {
                // e^{-λ} cancels in the renormalization.
                let mut mass = lambda;
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi = mass;
                    mass *= lambda / (i + 2) as f64;
                }
                normalize(&mut w);
            }
            WeightScheme::CustomScores { ref a } => {
                w.copy_from_slice(a);
                normalize(&mut w);
            }
        }
        Ok(w)
    }
}

fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
}

/// Exact `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step.
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return None;
        }
    }
    Some(c as u64)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}
