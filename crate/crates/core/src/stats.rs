//! Small sample statistics shared by the estimators.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Summarizes `values` in their given order, so equal inputs give
    /// bitwise-equal outputs.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEnsemble("mean of zero samples"));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            (sample_variance_about(values, mean) / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, std_error, n })
    }

    /// Whether two estimates agree within `k` combined standard errors.
    pub fn agrees_with(&self, other: &MeanEstimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * combined_se(self.std_error, other.std_error)
    }
}

pub fn combined_se(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Unbiased sample variance around a precomputed mean.
pub(crate) fn sample_variance_about(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Ordinary least squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: "all abscissae are equal".into(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A perfectly flat response is fitted exactly.
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
