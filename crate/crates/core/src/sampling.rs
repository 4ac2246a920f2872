//! Seeded multivariate normal and Student-t samples.
//!
//! Streams come from ChaCha20 (`rand_chacha::ChaCha20Rng`): the seed selects
//! the key and the replication index selects the 64-bit stream, so every
//! replication has its own independent sequence. Standard normals use the
//! ziggurat sampler from `rand_distr::StandardNormal`.
//!
//! Draw order for each observation: `p` normals for `z`, then (Student-t
//! only) the chi-square variate, either as `df` further squared normals when
//! `df` is an integer or as one `Gamma(df/2, 2)` draw otherwise. The
//! observation is `θ + L z` or `θ + L z / sqrt(χ² / df)` with `L Lᵀ = Σ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Sample;
use crate::linalg::{spd_factorize, Matrix, SpdFactorization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionKind {
    Normal,
    StudentT { df: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub theta: Vec<f64>,
    pub sigma: Matrix,
}

impl DistributionSpec {
    /// `θ = (1, 2, -1)` with unit variances and all correlations `1/2`.
    pub fn reference(kind: DistributionKind) -> Self {
        let sigma = Matrix::from_rows(&[
            vec![1.0, 0.5, 0.5],
            vec![0.5, 1.0, 0.5],
            vec![0.5, 0.5, 1.0],
        ])
        .expect("constant matrix");
        Self {
            kind,
            theta: vec![1.0, 2.0, -1.0],
            sigma,
        }
    }

    pub fn standard_normal(p: usize) -> Self {
        Self {
            kind: DistributionKind::Normal,
            theta: vec![0.0; p],
            sigma: Matrix::identity(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<SpdFactorization> {
        if let DistributionKind::StudentT { df } = self.kind {
            if !(df > 0.0) || !df.is_finite() {
                return Err(Error::ConfigInvalid(format!("df = {df} must be positive")));
            }
        }
        if self.sigma.rows() != self.dim() || self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "theta has {} entries but sigma is {}x{}",
                self.dim(),
                self.sigma.rows(),
                self.sigma.cols()
            )));
        }
        spd_factorize(&self.sigma).map_err(|source| Error::DegenerateScatter { step: 0, source })
    }
}

/// A sampler with `Σ` factored once, reusable across replications.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: DistributionSpec,
    factor: SpdFactorization,
    chi_square: ChiSquare,
}

#[derive(Debug, Clone)]
enum ChiSquare {
    None,
    SumOfSquares(usize),
    Gamma { law: Gamma<f64>, df: f64 },
}

impl Sampler {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        let factor = spec.validate()?;
        let chi_square = match spec.kind {
            DistributionKind::Normal => ChiSquare::None,
            DistributionKind::StudentT { df } if df.fract() == 0.0 && df <= 1e6 => {
                ChiSquare::SumOfSquares(df as usize)
            }
            DistributionKind::StudentT { df } => ChiSquare::Gamma {
                law: Gamma::new(df / 2.0, 2.0).map_err(|e| Error::ConfigInvalid(e.to_string()))?,
                df,
            },
        };
        Ok(Self {
            spec,
            factor,
            chi_square,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Draws `n` observations from `stream` of the generator keyed by `seed`.
    pub fn sample_stream(&self, n: usize, seed: u64, stream: u64) -> Result<Sample> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        let p = self.spec.dim();
        if n <= p {
            return Err(Error::InvalidSample(format!(
                "n = {n} must exceed the dimension {p}"
            )));
        }
        let mut data = Vec::with_capacity(n * p);
        let mut z = vec![0.0; p];
        for _ in 0..n {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(rng);
            }
            let scale = match &self.chi_square {
                ChiSquare::None => 1.0,
                ChiSquare::SumOfSquares(df) => {
                    let chi2: f64 = (0..*df)
                        .map(|_| {
                            let g: f64 = StandardNormal.sample(rng);
                            g * g
                        })
                        .sum();
                    (*df as f64 / chi2).sqrt()
                }
                ChiSquare::Gamma { law, df } => (df / law.sample(rng)).sqrt(),
            };
            let lz = self.factor.lower_mul(&z).expect("dimension checked");
            data.extend(lz.iter().zip(&self.spec.theta).map(|(v, t)| t + scale * v));
        }
        Sample::new(p, data)
    }
}

/// One sample of size `n` from stream 0 of `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Sample> {
    Sampler::new(spec.clone())?.sample_stream(n, seed, 0)
}
