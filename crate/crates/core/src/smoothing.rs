//! Surrogates for the indicator `1{d >= 0}` that switches the running-max
//! state on, where `d = L_inf(t, x) - y`.
//!
//! Both kernels equal 1 above zero and 0 below `-delta`. On the band
//! `[-delta, 0]` the linear kernel ramps as `1 + d / delta`; the
//! Gaussian-band kernel uses `exp(-gamma d^2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error("smoothing band width must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("gaussian rate must be positive and finite, got {0}")]
    BadGamma(f64),
}

/// Threshold on `exp(-gamma delta^2)` above which the Gaussian-band kernel
/// is reported as visibly discontinuous at `d = -delta`.
pub const GAUSSIAN_JUMP_WARN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Smoothing {
    Linear { delta: f64 },
    GaussianBand { delta: f64, gamma: f64 },
}

impl Smoothing {
    pub fn linear(delta: f64) -> Result<Self, SmoothingError> {
        let s = Smoothing::Linear { delta };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian_band(delta: f64, gamma: f64) -> Result<Self, SmoothingError> {
        let s = Smoothing::GaussianBand { delta, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SmoothingError> {
        let delta = self.delta();
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(SmoothingError::BadDelta(delta));
        }
        if let Smoothing::GaussianBand { gamma, .. } = *self {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(SmoothingError::BadGamma(gamma));
            }
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        match *self {
            Smoothing::Linear { delta } | Smoothing::GaussianBand { delta, .. } => delta,
        }
    }

    /// True on the closed band `[-delta, 0]`.
    #[inline]
    pub fn in_band(&self, d: f64) -> bool {
        d <= 0.0 && d >= -self.delta()
    }

    #[inline]
    pub fn psi(&self, d: f64) -> f64 {
        if d > 0.0 {
            return 1.0;
        }
        match *self {
            Smoothing::Linear { delta } => {
                if d >= -delta {
                    1.0 + d / delta
                } else {
                    0.0
                }
            }
            Smoothing::GaussianBand { delta, gamma } => {
                if d >= -delta {
                    (-gamma * d * d).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative of [`psi`](Self::psi). At the kinks `d = -delta` and
    /// `d = 0` the band-interior one-sided value is returned.
    #[inline]
    pub fn dpsi(&self, d: f64) -> f64 {
        if !self.in_band(d) {
            return 0.0;
        }
        match *self {
            Smoothing::Linear { delta } => 1.0 / delta,
            Smoothing::GaussianBand { gamma, .. } => -2.0 * gamma * d * (-gamma * d * d).exp(),
        }
    }

    /// Warning text when the Gaussian-band kernel jumps by more than
    /// [`GAUSSIAN_JUMP_WARN`] at the lower band edge.
    pub fn discontinuity_warning(&self) -> Option<String> {
        match *self {
            Smoothing::Linear { .. } => None,
            Smoothing::GaussianBand { delta, gamma } => {
                let jump = (-gamma * delta * delta).exp();
                (jump > GAUSSIAN_JUMP_WARN).then(|| {
                    format!(
                        "gaussian_band kernel jumps from {jump:.4} to 0 at d = -{delta}; \
                         increase gamma or delta for a continuous surrogate"
                    )
                })
            }
        }
    }
}
