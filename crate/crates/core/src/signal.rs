//! Time-varying scalar parameters such as arrival rates and price
//! sensitivities.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Constant,
    Sinusoid,
    AbsCosine,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("signal has non-finite coefficients")]
    NonFinite,
    #[error("signal must be strictly positive on [0, {horizon}] but reaches {min}")]
    NotPositive { min: f64, horizon: f64 },
}

/// `A`, `A + B sin(phase + rate t)` or `A + B |cos(phase + rate t)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub angular_rate: f64,
}

/// Whether `[lo, hi]` contains a point `offset + j * period` for integer `j`.
fn hits_lattice(lo: f64, hi: f64, offset: f64, period: f64) -> bool {
    let j = ((lo - offset) / period).ceil();
    offset + j * period <= hi
}

impl SignalSpec {
    pub fn constant(base: f64) -> Self {
        Self {
            kind: SignalKind::Constant,
            base,
            amplitude: 0.0,
            phase: 0.0,
            angular_rate: 0.0,
        }
    }

    pub fn sinusoid(base: f64, amplitude: f64, phase: f64, angular_rate: f64) -> Self {
        Self {
            kind: SignalKind::Sinusoid,
            base,
            amplitude,
            phase,
            angular_rate,
        }
    }

    pub fn abs_cosine(base: f64, amplitude: f64, phase: f64, angular_rate: f64) -> Self {
        Self {
            kind: SignalKind::AbsCosine,
            base,
            amplitude,
            phase,
            angular_rate,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let theta = self.phase + self.angular_rate * t;
        match self.kind {
            SignalKind::Constant => self.base,
            SignalKind::Sinusoid => self.base + self.amplitude * theta.sin(),
            SignalKind::AbsCosine => self.base + self.amplitude * theta.cos().abs(),
        }
    }

    /// Exact minimum over `[0, horizon]`.
    pub fn min_on(&self, horizon: f64) -> f64 {
        let ends = self.eval(0.0).min(self.eval(horizon));
        let (ta, tb) = (self.phase, self.phase + self.angular_rate * horizon);
        let (lo, hi) = (ta.min(tb), ta.max(tb));
        let b = self.amplitude;
        match self.kind {
            SignalKind::Constant => self.base,
            SignalKind::Sinusoid => {
                // Troughs of B sin: sin = -1 for B > 0, sin = +1 for B < 0.
                let trough = if b >= 0.0 { 3.0 * FRAC_PI_2 } else { FRAC_PI_2 };
                if b != 0.0 && hits_lattice(lo, hi, trough, 2.0 * PI) {
                    self.base - b.abs()
                } else {
                    ends
                }
            }
            SignalKind::AbsCosine => {
                // |cos| vanishes at pi/2 + j pi and peaks at j pi.
                let trough = if b >= 0.0 { FRAC_PI_2 } else { 0.0 };
                if b != 0.0 && hits_lattice(lo, hi, trough, PI) {
                    self.base + b.min(0.0)
                } else {
                    ends
                }
            }
        }
    }

    /// Checks finiteness and strict positivity on `[0, horizon]`.
    pub fn check_positive(&self, horizon: f64) -> Result<(), SignalError> {
        if ![self.base, self.amplitude, self.phase, self.angular_rate].iter().all(|v| v.is_finite()) {
            return Err(SignalError::NonFinite);
        }
        let min = self.min_on(horizon);
        if min > 0.0 {
            Ok(())
        } else {
            Err(SignalError::NotPositive { min, horizon })
        }
    }
}
