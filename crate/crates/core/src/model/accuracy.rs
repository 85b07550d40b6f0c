//! Semantic accuracy as a function of the extraction ratio.
//!
//! The curve is `eps(xi) = -t1 * exp(t2 * (1 - xi)) + t3 * exp(-t4 * (1 - xi))`
//! with all four parameters non-negative, which makes it increasing in `xi`.
//! Reported values are clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Number of evenly spaced points used to check monotonicity at construction.
pub const MONOTONICITY_GRID: usize = 1000;

/// Absolute bisection tolerance for [`AccuracyModel::min_extraction_ratio`].
pub const INVERSION_TOLERANCE: f64 = 1e-12;

/// How the signs of externally reported curve parameters are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// Take absolute values of all four parameters.
    #[default]
    Normalized,
    /// Use the parameters exactly as given. Only kept for auditing reported
    /// values; negative parameters generally fail validation.
    Literal,
}

/// Raw (unclamped, unvalidated) curve value.
pub fn curve(theta: [f64; 4], xi: f64) -> f64 {
    let gap = 1.0 - xi;
    -theta[0] * (theta[1] * gap).exp() + theta[2] * (-theta[3] * gap).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AccuracyParams", into = "AccuracyParams")]
pub struct AccuracyModel {
    theta: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct AccuracyParams {
    theta: [f64; 4],
}

impl TryFrom<AccuracyParams> for AccuracyModel {
    type Error = ModelError;

    fn try_from(p: AccuracyParams) -> Result<Self, Self::Error> {
        AccuracyModel::new(p.theta)
    }
}

impl From<AccuracyModel> for AccuracyParams {
    fn from(m: AccuracyModel) -> Self {
        AccuracyParams { theta: m.theta }
    }
}

impl AccuracyModel {
    /// Parameters of the default image-task curve, sign-normalized.
    pub const DEFAULT_THETA: [f64; 4] = [6.205e-8, 16.45, 0.9228, 0.06917];

    pub fn new(theta: [f64; 4]) -> Result<Self, ModelError> {
        if theta.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(ModelError::InvalidAccuracyParams(theta));
        }
        Self::validated(theta)
    }

    /// Builds a model from externally reported parameters.
    pub fn from_reported(theta: [f64; 4], signs: SignConvention) -> Result<Self, ModelError> {
        match signs {
            SignConvention::Normalized => Self::new(theta.map(f64::abs)),
            SignConvention::Literal => {
                if theta.iter().any(|t| !t.is_finite()) {
                    return Err(ModelError::InvalidAccuracyParams(theta));
                }
                Self::validated(theta)
            }
        }
    }

    fn validated(theta: [f64; 4]) -> Result<Self, ModelError> {
        let step = 1.0 / (MONOTONICITY_GRID - 1) as f64;
        let mut prev = curve(theta, 0.0);
        for n in 1..MONOTONICITY_GRID {
            let next = curve(theta, n as f64 * step);
            if next <= prev && !(theta[0] == 0.0 && theta[3] == 0.0) {
                return Err(ModelError::AccuracyNotIncreasing { theta, at: n as f64 * step });
            }
            prev = next;
        }
        Ok(AccuracyModel { theta })
    }

    pub fn theta(&self) -> [f64; 4] {
        self.theta
    }

    /// Unclamped curve value.
    pub fn raw(&self, xi: f64) -> f64 {
        curve(self.theta, xi)
    }

    pub fn accuracy(&self, xi: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(ModelError::ExtractionRatioOutOfRange(xi));
        }
        Ok(self.raw(xi).clamp(0.0, 1.0))
    }

    /// Smallest extraction ratio whose accuracy meets `threshold`.
    ///
    /// Bisection keeps the invariant `eps(hi) >= threshold`, so the returned
    /// ratio always satisfies the requirement.
    pub fn min_extraction_ratio(&self, threshold: f64) -> Result<f64, ModelError> {
        let eps = |xi: f64| self.raw(xi).clamp(0.0, 1.0);
        let top = eps(1.0);
        if threshold > top {
            return Err(ModelError::AccuracyUnattainable { threshold, max: top });
        }
        if threshold <= eps(0.0) {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > INVERSION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if eps(mid) >= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

impl Default for AccuracyModel {
    fn default() -> Self {
        AccuracyModel { theta: Self::DEFAULT_THETA }
    }
}
