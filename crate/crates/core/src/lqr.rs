//! Scalar linear-quadratic regulator used as a solver sanity problem.
//!
//! `dx/dt = u`, maximize `∫ -(x^2 + u^2) dt` on `[0, T]` with no terminal
//! reward. The Riccati solution is `u*(t) = -tanh(T - t) x*(t)` with
//! `x*(t) = x0 cosh(T - t) / cosh(T)`.

use crate::fbs::{PontryaginSystem, Variant};
use crate::problem::{CombinedProblem, PeakDynamics};
use crate::smoothing::Smoothing;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuadratic {
    pub x0: [f64; 1],
    pub t_end: f64,
    /// Symmetric control box `[-bound, bound]`.
    pub bound: f64,
    pub sigma: f64,
    pub smoothing: Smoothing,
}

impl Default for LinearQuadratic {
    fn default() -> Self {
        Self {
            x0: [1.0],
            t_end: 1.0,
            bound: 2.0,
            sigma: 0.0,
            smoothing: Smoothing::Linear { delta: 0.01 },
        }
    }
}

impl LinearQuadratic {
    pub fn riccati_gain(&self, t: f64) -> f64 {
        (self.t_end - t).tanh()
    }

    pub fn optimal_state(&self, t: f64) -> f64 {
        self.x0[0] * (self.t_end - t).cosh() / self.t_end.cosh()
    }

    pub fn optimal_control(&self, t: f64) -> f64 {
        -self.riccati_gain(t) * self.optimal_state(t)
    }

    /// Optimal objective `-x0^2 tanh(T)`.
    pub fn optimal_value(&self) -> f64 {
        -self.x0[0] * self.x0[0] * self.t_end.tanh()
    }

    fn activation(&self, peak: PeakDynamics, x: f64, y: f64) -> f64 {
        match peak {
            PeakDynamics::Smoothed => self.smoothing.psi(x - y),
            PeakDynamics::Indicator => f64::from(u8::from(x >= y)),
        }
    }
}

impl CombinedProblem for LinearQuadratic {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }
    fn dynamics(&self, _: f64, _: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = u[0];
    }
    fn running_reward(&self, _: f64, x: &[f64], u: &[f64]) -> f64 {
        -(x[0] * x[0] + u[0] * u[0])
    }
    fn peak(&self, _: f64, x: &[f64]) -> f64 {
        x[0]
    }
    fn peak_rate(&self, _: f64, _: &[f64], dx: &[f64]) -> f64 {
        dx[0]
    }
    fn terminal_reward(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn control_bounds(&self, _: f64, lo: &mut [f64], hi: &mut [f64]) {
        lo[0] = -self.bound;
        hi[0] = self.bound;
    }
    fn smoothing(&self) -> Smoothing {
        self.smoothing
    }
    fn x0(&self) -> &[f64] {
        &self.x0
    }
    fn y0(&self) -> f64 {
        self.x0[0]
    }
}

impl PontryaginSystem for LinearQuadratic {
    fn costate_rhs(&self, v: Variant, _: f64, s: &[f64], lam: &[f64], u: &[f64], out: &mut [f64]) {
        let band = match v.peak {
            PeakDynamics::Smoothed => lam[1] * u[0].max(0.0) * self.smoothing.dpsi(s[0] - s[1]),
            PeakDynamics::Indicator => 0.0,
        };
        out[0] = 2.0 * s[0] - band;
        out[1] = band;
    }

    fn costate_terminal(&self, _: Variant, _: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = -self.sigma;
    }

    fn control_update(&self, peak: PeakDynamics, _: f64, s: &[f64], lam: &[f64], out: &mut [f64]) {
        // H is concave and piecewise quadratic in u with a kink at u = 0.
        let w = self.activation(peak, s[0], s[1]);
        let b = self.bound;
        let h = |u: f64| lam[0] * u + lam[1] * u.max(0.0) * w - u * u;
        let candidates = [(lam[0] / 2.0).clamp(-b, 0.0), ((lam[0] + lam[1] * w) / 2.0).clamp(0.0, b), 0.0];
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            let (hc, hb) = (h(c), h(best));
            if hc > hb || (hc == hb && c < best) {
                best = c;
            }
        }
        out[0] = best;
    }
}
