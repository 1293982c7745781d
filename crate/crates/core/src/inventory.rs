//! Inventory with production and dynamic pricing.
//!
//! Demand is `(alpha - beta p)^+`. Holding the price at
//! `p = a u + alpha / (2 beta)` reduces the two-control problem to the single
//! production rate `u` with
//!
//! ```text
//! dx/dt = gamma u - alpha / 2,    gamma = 1 + a beta,
//! reward = alpha^2 / (4 beta) - a gamma u^2 - h(x),   terminal = -h_T(x(T)),
//! ```
//!
//! and `u` in `[0, alpha / (2 a beta)]`. The holding/shortage costs are
//! quadratic with separate coefficients on each side of zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbs::{self, CostateMode, FbsConfig, FbsError, FbsSolution, PontryaginSystem, Variant};
use crate::problem::{CombinedProblem, PeakDynamics};
use crate::signal::{SignalError, SignalSpec};
use crate::smoothing::{Smoothing, SmoothingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InventoryError {
    #[error("invalid inventory parameters: {0}")]
    Invalid(String),
    #[error("alpha: {0}")]
    Alpha(SignalError),
    #[error("beta: {0}")]
    Beta(SignalError),
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error(transparent)]
    Solver(#[from] FbsError),
}

fn default_smoothing() -> Smoothing {
    Smoothing::Linear { delta: 0.01 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryParams {
    pub alpha: SignalSpec,
    pub beta: SignalSpec,
    /// Production-cost coefficient.
    pub a: f64,
    pub c_h: f64,
    pub c_s: f64,
    pub c_h_terminal: f64,
    pub c_s_terminal: f64,
    #[serde(default)]
    pub sigma: f64,
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    /// Defaults to `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default = "default_smoothing")]
    pub smoothing: Smoothing,
}

impl InventoryParams {
    /// High shortage costs, oscillating demand intercept.
    pub fn case_study_1() -> Self {
        Self {
            alpha: SignalSpec::sinusoid(15.0, 4.5, 0.2 * std::f64::consts::PI, 4.1 * std::f64::consts::PI),
            beta: SignalSpec::constant(2.5),
            a: 0.6,
            c_h: 3.0,
            c_s: 40.0,
            c_h_terminal: 6.0,
            c_s_terminal: 410.0,
            sigma: 0.0,
            horizon: 1.0,
            x0: 0.0,
            y0: None,
            smoothing: default_smoothing(),
        }
    }

    /// Low shortage costs and a less price-sensitive demand.
    pub fn case_study_2() -> Self {
        Self {
            beta: SignalSpec::constant(0.5),
            c_s: 2.0,
            c_s_terminal: 30.0,
            ..Self::case_study_1()
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma,
            ..self.clone()
        }
    }
}

pub fn demand(alpha: f64, beta: f64, p: f64) -> f64 {
    (alpha - beta * p).max(0.0)
}

/// Price that makes `u` the production rate of the reduced problem.
pub fn price_from_rate(u: f64, alpha: f64, beta: f64, a: f64) -> f64 {
    a * u + alpha / (2.0 * beta)
}

/// Quadratic cost with coefficient `c_s` below zero and `c_h` above.
pub fn side_cost(c_h: f64, c_s: f64, x: f64) -> f64 {
    if x < 0.0 {
        c_s * x * x
    } else {
        c_h * x * x
    }
}

/// Validated inventory instance.
#[derive(Debug, Clone)]
pub struct InventoryModel {
    params: InventoryParams,
    x0: [f64; 1],
    y0: f64,
}

impl InventoryModel {
    pub fn new(params: InventoryParams) -> Result<Self, InventoryError> {
        let p = &params;
        let bad = |m: String| Err(InventoryError::Invalid(m));
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", p.horizon));
        }
        if !(p.a > 0.0 && p.a.is_finite()) {
            return bad(format!("a must be positive, got {}", p.a));
        }
        for (name, v) in [
            ("c_h", p.c_h),
            ("c_s", p.c_s),
            ("c_h_terminal", p.c_h_terminal),
            ("c_s_terminal", p.c_s_terminal),
            ("sigma", p.sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !p.x0.is_finite() {
            return bad("x0 must be finite".into());
        }
        let y0 = p.y0.unwrap_or(p.x0);
        if !(y0.is_finite() && y0 >= p.x0) {
            return bad(format!("y0 = {y0} must be at least x0 = {}", p.x0));
        }
        p.alpha.check_positive(p.horizon).map_err(InventoryError::Alpha)?;
        p.beta.check_positive(p.horizon).map_err(InventoryError::Beta)?;
        p.smoothing.validate()?;
        if let Some(w) = p.smoothing.discontinuity_warning() {
            log::warn!("{w}");
        }
        Ok(Self {
            x0: [p.x0],
            y0,
            params,
        })
    }

    pub fn params(&self) -> &InventoryParams {
        &self.params
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.params.alpha.eval(t)
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.params.beta.eval(t)
    }

    pub fn gamma(&self, t: f64) -> f64 {
        1.0 + self.params.a * self.beta(t)
    }

    pub fn upper_bound(&self, t: f64) -> f64 {
        self.alpha(t) / (2.0 * self.params.a * self.beta(t))
    }

    /// Production rate at which inventory is flat.
    pub fn breakpoint(&self, t: f64) -> f64 {
        self.alpha(t) / (2.0 * self.gamma(t))
    }

    pub fn reduced_rhs(&self, t: f64, u: f64) -> f64 {
        u * self.gamma(t) - 0.5 * self.alpha(t)
    }

    pub fn holding_cost(&self, x: f64) -> f64 {
        side_cost(self.params.c_h, self.params.c_s, x)
    }

    pub fn holding_cost_slope(&self, x: f64) -> f64 {
        if x < 0.0 {
            2.0 * self.params.c_s * x
        } else {
            2.0 * self.params.c_h * x
        }
    }

    pub fn terminal_cost(&self, x: f64) -> f64 {
        side_cost(self.params.c_h_terminal, self.params.c_s_terminal, x)
    }

    /// Reward rate without the production term: `alpha^2 / (4 beta) - h(x)`.
    pub fn control_free_reward(&self, t: f64, x: f64) -> f64 {
        let al = self.alpha(t);
        al * al / (4.0 * self.beta(t)) - self.holding_cost(x)
    }

    pub fn price(&self, t: f64, u: f64) -> f64 {
        price_from_rate(u, self.alpha(t), self.beta(t), self.params.a)
    }

    fn activation(&self, peak: PeakDynamics, x: f64, y: f64) -> f64 {
        match peak {
            PeakDynamics::Smoothed => self.params.smoothing.psi(x - y),
            PeakDynamics::Indicator => f64::from(u8::from(x >= y)),
        }
    }
}

impl CombinedProblem for InventoryModel {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> (f64, f64) {
        (0.0, self.params.horizon)
    }
    fn dynamics(&self, t: f64, _: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = self.reduced_rhs(t, u[0]);
    }
    fn running_reward(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
        self.control_free_reward(t, x[0]) - self.params.a * self.gamma(t) * u[0] * u[0]
    }
    fn peak(&self, _: f64, x: &[f64]) -> f64 {
        x[0]
    }
    fn peak_rate(&self, _: f64, _: &[f64], dx: &[f64]) -> f64 {
        dx[0]
    }
    fn terminal_reward(&self, x: &[f64]) -> f64 {
        -self.terminal_cost(x[0])
    }
    fn sigma(&self) -> f64 {
        self.params.sigma
    }
    fn control_bounds(&self, t: f64, lo: &mut [f64], hi: &mut [f64]) {
        lo[0] = 0.0;
        hi[0] = self.upper_bound(t);
    }
    fn smoothing(&self) -> Smoothing {
        self.params.smoothing
    }
    fn x0(&self) -> &[f64] {
        &self.x0
    }
    fn y0(&self) -> f64 {
        self.y0
    }
}

impl PontryaginSystem for InventoryModel {
    fn costate_rhs(&self, v: Variant, t: f64, s: &[f64], lam: &[f64], u: &[f64], out: &mut [f64]) {
        let (x, y) = (s[0], s[1]);
        let band = match v.peak {
            PeakDynamics::Smoothed => {
                let rate = self.reduced_rhs(t, u[0]);
                let drive = match v.costate {
                    CostateMode::Literal => rate,
                    CostateMode::GradientConsistent => rate.max(0.0),
                };
                lam[1] * drive * self.params.smoothing.dpsi(x - y)
            }
            PeakDynamics::Indicator => 0.0,
        };
        out[0] = self.holding_cost_slope(x) - band;
        out[1] = band;
    }

    fn costate_terminal(&self, v: Variant, s: &[f64], out: &mut [f64]) {
        let x = s[0];
        let c = if x < 0.0 {
            self.params.c_s_terminal
        } else {
            self.params.c_h_terminal
        };
        out[0] = match v.costate {
            CostateMode::Literal => -c * x,
            CostateMode::GradientConsistent => -2.0 * c * x,
        };
        out[1] = -self.params.sigma;
    }

    fn control_update(&self, peak: PeakDynamics, t: f64, s: &[f64], lam: &[f64], out: &mut [f64]) {
        out[0] = self.update_rate(peak, t, s[0], s[1], lam[0], lam[1]);
    }
}

impl InventoryModel {
    /// Maximizer of the concave, piecewise-quadratic Hamiltonian. Each branch
    /// of the running-max switch contributes its stationary point clipped to
    /// the branch interval; endpoints and the breakpoint are also compared,
    /// and ties go to the smaller rate.
    pub fn update_rate(&self, peak: PeakDynamics, t: f64, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        let a = self.params.a;
        let ub = self.upper_bound(t);
        let br = self.breakpoint(t).min(ub);
        let w = self.activation(peak, x, y);
        let state = [x, y];
        let costate = [lx, ly];
        let h = |u: f64| self.hamiltonian(peak, t, &state, &costate, &[u]);
        let candidates = [
            0.0,
            ub,
            br,
            (lx / (2.0 * a)).clamp(0.0, br),
            ((lx + ly * w) / (2.0 * a)).clamp(br, ub),
        ];
        let mut best = candidates[0];
        let mut best_h = h(best);
        for &c in &candidates[1..] {
            let hc = h(c);
            if hc > best_h || (hc == best_h && c < best) {
                best = c;
                best_h = hc;
            }
        }
        best
    }
}

/// Thresholds used by [`structural_checks`].
pub const MONOTONICITY_MIN_ABS_X: f64 = 0.02;
pub const TERMINAL_SHORTAGE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub terminal_shortage_ok: bool,
    pub x_terminal: f64,
    pub local_monotonicity_fraction: f64,
    pub monotonicity_nodes: usize,
    pub monotonicity_empty: bool,
    pub min_abs_x: f64,
    pub terminal_slack: f64,
}

/// Shape checks on an optimal inventory policy: the level ends in shortage,
/// the rate rises where stock is positive and falls where it is negative.
///
/// The monotonicity fraction counts nodes with `|x| > 0.02`, the rate
/// strictly inside its box on both ends of the step, and `x - y` off the
/// smoothing band.
pub fn structural_checks(model: &InventoryModel, sol: &FbsSolution) -> StructuralReport {
    let grid = *sol.control.grid();
    let x_terminal = sol.states.last()[0];
    let smoothing = model.params.smoothing;
    let interior = |k: usize| {
        let u = sol.control.row(k)[0];
        let ub = model.upper_bound(grid.node(k));
        u > 1e-9 && u < ub - 1e-9
    };
    let (mut total, mut agree) = (0usize, 0usize);
    for k in 0..grid.n_steps() {
        let (x, y) = (sol.states.row(k)[0], sol.states.row(k)[1]);
        if x.abs() <= MONOTONICITY_MIN_ABS_X || smoothing.in_band(x - y) || !interior(k) || !interior(k + 1) {
            continue;
        }
        total += 1;
        let du = sol.control.row(k + 1)[0] - sol.control.row(k)[0];
        if du != 0.0 && du.signum() == x.signum() {
            agree += 1;
        }
    }
    StructuralReport {
        terminal_shortage_ok: x_terminal <= TERMINAL_SHORTAGE_SLACK,
        x_terminal,
        local_monotonicity_fraction: if total == 0 { 1.0 } else { agree as f64 / total as f64 },
        monotonicity_nodes: total,
        monotonicity_empty: total == 0,
        min_abs_x: MONOTONICITY_MIN_ABS_X,
        terminal_slack: TERMINAL_SHORTAGE_SLACK,
    }
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub solution: FbsSolution,
    /// Integral plus terminal reward.
    pub revenue: f64,
    /// Terminal value of the running-max state.
    pub peak_terminal: f64,
    pub price: Vec<f64>,
}

impl CaseReport {
    fn from_solution(model: &InventoryModel, solution: FbsSolution) -> Self {
        let grid = *solution.control.grid();
        let price = (0..grid.n_nodes()).map(|k| model.price(grid.node(k), solution.control.row(k)[0])).collect();
        Self {
            revenue: solution.breakdown.unpenalized(),
            peak_terminal: solution.states.last()[1],
            price,
            solution,
        }
    }
}

pub fn solve_case(model: &InventoryModel, cfg: &FbsConfig) -> Result<CaseReport, InventoryError> {
    let solution = fbs::solve(model, cfg)?;
    Ok(CaseReport::from_solution(model, solution))
}

pub fn solve_case_dn(model: &InventoryModel, cfg: &FbsConfig) -> Result<CaseReport, InventoryError> {
    let solution = fbs::solve_dn(model, cfg)?;
    Ok(CaseReport::from_solution(model, solution))
}

/// Largest violation of the price box `[0, alpha / beta]` or of
/// nonnegative served demand along a solution; zero when admissible.
pub fn bound_violation(model: &InventoryModel, sol: &FbsSolution) -> f64 {
    let grid = *sol.control.grid();
    let mut worst = 0.0f64;
    for k in 0..grid.n_nodes() {
        let t = grid.node(k);
        let u = sol.control.row(k)[0];
        let (al, be) = (model.alpha(t), model.beta(t));
        let p = model.price(t, u);
        let served = al - be * p;
        worst = worst
            .max(-u)
            .max(u - model.upper_bound(t))
            .max(-p)
            .max(p - al / be)
            .max(-served);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub revenue: f64,
    pub peak_terminal: f64,
    pub peak_exact: f64,
    pub total_smoothed: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Independent solves for each weight, returned sorted by weight. Rows that
/// fail carry the error message.
pub fn sweep_sigma(
    params: &InventoryParams,
    sigmas: &[f64],
    cfg: &FbsConfig,
) -> Vec<(f64, Result<SigmaRow, InventoryError>)> {
    let mut rows: Vec<(f64, Result<SigmaRow, InventoryError>)> = sigmas
        .par_iter()
        .map(|&sigma| {
            let row = InventoryModel::new(params.with_sigma(sigma)).and_then(|m| {
                let r = solve_case(&m, cfg)?;
                Ok(SigmaRow {
                    sigma,
                    revenue: r.revenue,
                    peak_terminal: r.peak_terminal,
                    peak_exact: r.solution.breakdown.peak_exact,
                    total_smoothed: r.solution.breakdown.total_smoothed,
                    converged: r.solution.converged,
                    iterations: r.solution.iterations_used,
                    residual: r.solution.final_update_norm,
                })
            });
            (sigma, row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}
