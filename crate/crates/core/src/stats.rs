//! Monte Carlo summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided 99% standard normal quantile.
pub const Z_ONE_SIDED_99: f64 = 2.326_347_874_040_841;

/// Sample mean with its standard error `sd / sqrt(reps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::TooFewReplicates(n));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        Ok(Self { mean, stderr: sd / (n as f64).sqrt(), reps: n, seed, dt: None })
    }

    /// Estimate of a probability from indicator outcomes.
    pub fn proportion(outcomes: &[bool], seed: u64) -> Result<Self> {
        let xs: Vec<f64> = outcomes.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self::from_samples(&xs, seed)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    /// Linear transform `a * X + b` of the underlying samples.
    pub fn affine(self, a: f64, b: f64) -> Self {
        Self { mean: a * self.mean + b, stderr: a.abs() * self.stderr, ..self }
    }

    /// Two-sample z statistic `(self - other) / sqrt(se1^2 + se2^2)`.
    ///
    /// Two exact (zero-variance) estimates give 0 when equal and ±inf otherwise.
    pub fn z_against(&self, other: &McEstimate) -> f64 {
        two_sample_z(self.mean, self.stderr, other.mean, other.stderr)
    }

    pub fn combined_stderr(&self, other: &McEstimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

pub fn two_sample_z(m1: f64, se1: f64, m2: f64, se2: f64) -> f64 {
    let diff = m1 - m2;
    let se = se1.hypot(se2);
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// Wilson score lower bound for a binomial proportion.
pub fn wilson_lower(successes: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half) / (1.0 + z2 / n)).max(0.0)
}
