//! Baseline location estimators: coordinate-wise median, spatial median and
//! the univariate rank-weighted mean.

use crate::error::{Error, Result};
use crate::estimators::ln_binomial;
use crate::linalg::{norm2, norm_inf, Matrix};

pub const SPATIAL_MEDIAN_TOL: f64 = 1e-9;
pub const SPATIAL_MEDIAN_MAX_ITER: usize = 500;

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-coordinate median; even counts use the midpoint of the central pair.
pub fn coordinate_median(data: &Matrix) -> Vec<f64> {
    let mut column = Vec::with_capacity(data.rows());
    (0..data.cols())
        .map(|j| {
            column.clear();
            column.extend((0..data.rows()).map(|i| data.get(i, j)));
            median_of(&mut column)
        })
        .collect()
}

/// Spatial (L1) median by Weiszfeld iteration with the Vardi–Zhang step at
/// data points.
///
/// When the iterate comes within `tol` of observations, those observations
/// are treated as coincident with it; the point is returned if the residual
/// pull of the others is at most their multiplicity (the subgradient test),
/// and otherwise the step is damped away from it.
pub fn spatial_median(data: &Matrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("tol = {tol} must be > 0")));
    }
    let n = data.rows();
    let p = data.cols();
    let mut x = vec![0.0; p];
    for i in 0..n {
        for (xj, v) in x.iter_mut().zip(data.row(i)) {
            *xj += v / n as f64;
        }
    }

    let mut weighted = vec![0.0; p];
    let mut pull = vec![0.0; p];
    let mut diff = vec![0.0; p];
    let mut converged = false;
    for _ in 0..=max_iter {
        weighted.fill(0.0);
        pull.fill(0.0);
        let mut inv_sum = 0.0;
        let mut coincident = 0usize;
        let mut anchor = None;
        for i in 0..n {
            let row = data.row(i);
            for ((d, r), xj) in diff.iter_mut().zip(row).zip(&x) {
                *d = r - xj;
            }
            let dist = norm2(&diff);
            if dist <= tol {
                coincident += 1;
                anchor.get_or_insert(i);
                continue;
            }
            let inv = 1.0 / dist;
            inv_sum += inv;
            for j in 0..p {
                weighted[j] += row[j] * inv;
                pull[j] += diff[j] * inv;
            }
        }

        if inv_sum == 0.0 {
            // Every observation coincides with x.
            return Ok(data.row(anchor.expect("n >= 1")).to_vec());
        }
        let residual = norm2(&pull);
        let eta = coincident as f64;
        if let Some(i) = anchor {
            if residual <= eta {
                return Ok(data.row(i).to_vec());
            }
        }
        if converged {
            return Ok(x);
        }
        let target: Vec<f64> = weighted.iter().map(|w| w / inv_sum).collect();
        let next = match anchor {
            None => target,
            Some(_) => {
                let keep = eta / residual;
                target
                    .iter()
                    .zip(&x)
                    .map(|(t, xj)| (1.0 - keep) * t + keep * xj)
                    .collect()
            }
        };
        let step: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        x = next;
        converged = norm_inf(&step) <= tol;
    }
    Err(Error::NoConvergence(max_iter))
}

/// Univariate `k`-order rank-weighted mean
///
/// ```text
/// T_nk = C(n, 2k+1)⁻¹ Σ_{i=k+1}^{n-k} C(i-1, k) C(n-i, k) X_(i)
/// ```
///
/// `k = 0` is the sample mean. The formula reaches the median at
/// `k = ⌊(n-1)/2⌋`; the endpoint `k = ⌊(n+1)/2⌋` also returns the median.
pub fn rank_weighted_mean_1d(x: &[f64], k: usize) -> Result<f64> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if k > n.div_ceil(2) {
        return Err(Error::InvalidK { k, n });
    }
    if k == 0 {
        return Ok(x.iter().sum::<f64>() / n as f64);
    }
    let mut sorted = x.to_vec();
    if 2 * k + 1 > n {
        return Ok(median_of(&mut sorted));
    }
    sorted.sort_by(f64::total_cmp);
    let ln_total = ln_binomial(n, 2 * k + 1);
    Ok((k + 1..=n - k)
        .map(|i| {
            let w = (ln_binomial(i - 1, k) + ln_binomial(n - i, k) - ln_total).exp();
            w * sorted[i - 1]
        })
        .sum())
}
