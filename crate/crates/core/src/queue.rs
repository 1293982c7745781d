//! Fluid queue with a controlled service rate.
//!
//! The service rate is proportional to the load, `mu = (alpha + x) u`, and
//! the queue length follows `dx/dt = alpha - mu`. Costs are a linear
//! congestion term `rho x`, a utilization term `beta (mu - mu_id)^2`, a
//! terminal term `eta x(T)` and the peak penalty `sigma y(T)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbs::{self, FbsConfig, FbsError, FbsSolution, PontryaginSystem, Variant};
use crate::problem::{CombinedProblem, PeakDynamics};
use crate::signal::{SignalError, SignalSpec};
use crate::smoothing::{Smoothing, SmoothingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("invalid queue parameters: {0}")]
    Invalid(String),
    #[error("alpha: {0}")]
    Alpha(SignalError),
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error(transparent)]
    Solver(#[from] FbsError),
}

/// `1 + |cos(3 pi / 2 + t 1.7 pi / 3000)|`.
pub fn default_arrivals() -> SignalSpec {
    SignalSpec::abs_cosine(1.0, 1.0, 1.5 * PI, 1.7 * PI / 3000.0)
}

fn default_smoothing() -> Smoothing {
    Smoothing::Linear { delta: 0.2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueParams {
    #[serde(default = "default_arrivals")]
    pub alpha: SignalSpec,
    pub rho: f64,
    pub sigma: f64,
    pub beta: f64,
    pub eta: f64,
    pub mu_id: f64,
    pub u_bar: f64,
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    /// Defaults to `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default = "default_smoothing")]
    pub smoothing: Smoothing,
}

impl QueueParams {
    /// Utilization-cost setting with weights left at zero.
    pub fn base() -> Self {
        Self {
            alpha: default_arrivals(),
            rho: 0.0,
            sigma: 0.0,
            beta: 14.0,
            eta: 1.0,
            mu_id: 11.5,
            u_bar: 0.9,
            horizon: 1.0,
            x0: 0.0,
            y0: None,
            smoothing: default_smoothing(),
        }
    }

    pub fn with_weights(&self, sigma: f64, rho: f64) -> Self {
        Self {
            sigma,
            rho,
            ..self.clone()
        }
    }
}

pub fn service_rate(alpha: f64, x: f64, u: f64) -> f64 {
    (alpha + x) * u
}

#[derive(Debug, Clone)]
pub struct QueueModel {
    params: QueueParams,
    x0: [f64; 1],
    y0: f64,
}

impl QueueModel {
    pub fn new(params: QueueParams) -> Result<Self, QueueError> {
        let p = &params;
        let bad = |m: String| Err(QueueError::Invalid(m));
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", p.horizon));
        }
        for (name, v) in [("rho", p.rho), ("sigma", p.sigma), ("beta", p.beta), ("eta", p.eta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(p.mu_id > 0.0 && p.mu_id.is_finite()) {
            return bad(format!("mu_id must be positive, got {}", p.mu_id));
        }
        if !(p.u_bar > 0.0 && p.u_bar.is_finite()) {
            return bad(format!("u_bar must be positive, got {}", p.u_bar));
        }
        if !(p.x0 >= 0.0 && p.x0.is_finite()) {
            return bad(format!("x0 must be nonnegative, got {}", p.x0));
        }
        let y0 = p.y0.unwrap_or(p.x0);
        if !(y0.is_finite() && y0 >= p.x0) {
            return bad(format!("y0 = {y0} must be at least x0 = {}", p.x0));
        }
        p.alpha.check_positive(p.horizon).map_err(QueueError::Alpha)?;
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

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.params.alpha.eval(t)
    }

    pub fn queue_rhs(&self, t: f64, x: f64, u: f64) -> f64 {
        let al = self.alpha(t);
        al - service_rate(al, x, u)
    }

    pub fn utilization_cost(&self, mu: f64) -> f64 {
        let d = mu - self.params.mu_id;
        d * d
    }

    /// Terminal reward including the peak term, `-(eta x + sigma y)`.
    pub fn terminal_reward_with_peak(&self, x: f64, y: f64) -> f64 {
        -(self.params.eta * x + self.params.sigma * y)
    }

    fn activation(&self, peak: PeakDynamics, x: f64, y: f64) -> (f64, f64) {
        match peak {
            PeakDynamics::Smoothed => {
                let d = x - y;
                (self.params.smoothing.psi(d), self.params.smoothing.dpsi(d))
            }
            PeakDynamics::Indicator => (f64::from(u8::from(x >= y)), 0.0),
        }
    }

    /// Hamiltonian maximizer. `H` is concave in `mu` on each side of the
    /// breakpoint `mu = alpha`; the stationary point of each side, clipped to
    /// its interval, competes with the endpoints and the breakpoint. Ties go
    /// to the smaller rate.
    pub fn update_rate(&self, peak: PeakDynamics, t: f64, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        let al = self.alpha(t);
        let s = al + x;
        let ub = self.params.u_bar;
        let state = [x, y];
        let costate = [lx, ly];
        if s <= 0.0 {
            let mut out = [0.0];
            fbs::grid_maximize(self, peak, t, &state, &costate, &mut out);
            return out[0];
        }
        let br = (al / s).min(ub);
        let (w, _) = self.activation(peak, x, y);
        let beta = self.params.beta;
        let mut candidates = vec![0.0, ub, br];
        if beta > 0.0 {
            let mid = self.params.mu_id;
            candidates.push(((mid - (lx + ly * w) / (2.0 * beta)) / s).clamp(0.0, br));
            candidates.push(((mid - lx / (2.0 * beta)) / s).clamp(br, ub));
        }
        let h = |u: f64| self.hamiltonian(peak, t, &state, &costate, &[u]);
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

impl CombinedProblem for QueueModel {
    fn state_dim(&self) -> usize {
        1
    }
    fn control_dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> (f64, f64) {
        (0.0, self.params.horizon)
    }
    fn dynamics(&self, t: f64, x: &[f64], u: &[f64], dx: &mut [f64]) {
        dx[0] = self.queue_rhs(t, x[0], u[0]);
    }
    fn running_reward(&self, t: f64, x: &[f64], u: &[f64]) -> f64 {
        let mu = service_rate(self.alpha(t), x[0], u[0]);
        -(self.params.rho * x[0] + self.params.beta * self.utilization_cost(mu))
    }
    fn peak(&self, _: f64, x: &[f64]) -> f64 {
        x[0]
    }
    fn peak_rate(&self, _: f64, _: &[f64], dx: &[f64]) -> f64 {
        dx[0]
    }
    fn terminal_reward(&self, x: &[f64]) -> f64 {
        -self.params.eta * x[0]
    }
    fn sigma(&self) -> f64 {
        self.params.sigma
    }
    fn control_bounds(&self, _: f64, lo: &mut [f64], hi: &mut [f64]) {
        lo[0] = 0.0;
        hi[0] = self.params.u_bar;
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

impl PontryaginSystem for QueueModel {
    fn costate_rhs(&self, v: Variant, t: f64, s: &[f64], lam: &[f64], u: &[f64], out: &mut [f64]) {
        let (x, y, u) = (s[0], s[1], u[0]);
        let al = self.alpha(t);
        let mu = service_rate(al, x, u);
        let inflow = (al - mu).max(0.0);
        let filling = f64::from(u8::from(al >= mu));
        let (w, dw) = self.activation(v.peak, x, y);
        let p = &self.params;
        out[0] = lam[0] * u - lam[1] * (dw * inflow - w * u * filling) + p.rho + 2.0 * p.beta * u * (mu - p.mu_id);
        out[1] = -lam[1] * (-dw * inflow);
    }

    fn costate_terminal(&self, _: Variant, _: &[f64], out: &mut [f64]) {
        out[0] = -self.params.eta;
        out[1] = -self.params.sigma;
    }

    fn control_update(&self, peak: PeakDynamics, t: f64, s: &[f64], lam: &[f64], out: &mut [f64]) {
        out[0] = self.update_rate(peak, t, s[0], s[1], lam[0], lam[1]);
    }
}

#[derive(Debug, Clone)]
pub struct QueueReport {
    pub solution: FbsSolution,
    pub peak_terminal: f64,
    /// `∫ x dt`.
    pub integral_g: f64,
    /// `∫ (mu - mu_id)^2 dt`.
    pub integral_h: f64,
    /// Smallest `alpha + x` along the solution; positive means the service
    /// rate never turned negative.
    pub min_load: f64,
}

pub fn report(model: &QueueModel, solution: FbsSolution) -> QueueReport {
    let grid = *solution.control.grid();
    let x = |k: usize| solution.states.row(k)[0];
    let integral_g = grid.trapezoid((0..grid.n_nodes()).map(x));
    let integral_h = grid.trapezoid((0..grid.n_nodes()).map(|k| {
        let mu = service_rate(model.alpha(grid.node(k)), x(k), solution.control.row(k)[0]);
        model.utilization_cost(mu)
    }));
    let min_load = (0..grid.n_nodes())
        .map(|k| model.alpha(grid.node(k)) + x(k))
        .fold(f64::INFINITY, f64::min);
    if min_load <= 0.0 {
        log::warn!("queue level fell to -alpha; service rate would turn negative");
    }
    QueueReport {
        peak_terminal: solution.states.last()[1],
        integral_g,
        integral_h,
        min_load,
        solution,
    }
}

pub fn solve_queue(model: &QueueModel, cfg: &FbsConfig) -> Result<QueueReport, QueueError> {
    let solution = fbs::solve(model, cfg)?;
    Ok(report(model, solution))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoMode {
    /// `rho = 0`, sweep `sigma`.
    PeakVsUtilization,
    /// `sigma = 0`, sweep `rho`.
    CongestionVsUtilization,
}

impl ParetoMode {
    pub fn params(self, base: &QueueParams, weight: f64) -> QueueParams {
        match self {
            ParetoMode::PeakVsUtilization => base.with_weights(weight, 0.0),
            ParetoMode::CongestionVsUtilization => base.with_weights(0.0, weight),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub weight: f64,
    pub peak_terminal: f64,
    pub integral_g: f64,
    pub integral_h: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl FrontierRow {
    fn from_report(weight: f64, r: &QueueReport) -> Self {
        Self {
            weight,
            peak_terminal: r.peak_terminal,
            integral_g: r.integral_g,
            integral_h: r.integral_h,
            converged: r.solution.converged,
            iterations: r.solution.iterations_used,
            residual: r.solution.final_update_norm,
        }
    }
}

pub fn solve_weighted(base: &QueueParams, mode: ParetoMode, weight: f64, cfg: &FbsConfig) -> Result<FrontierRow, QueueError> {
    let model = QueueModel::new(mode.params(base, weight))?;
    let r = solve_queue(&model, cfg)?;
    Ok(FrontierRow::from_report(weight, &r))
}

/// One independent solve per weight, in the order given.
pub fn pareto_sweep(
    base: &QueueParams,
    mode: ParetoMode,
    weights: &[f64],
    cfg: &FbsConfig,
) -> Vec<(f64, Result<FrontierRow, QueueError>)> {
    weights
        .par_iter()
        .map(|&w| (w, solve_weighted(base, mode, w, cfg)))
        .collect()
}

/// Whether a quantity moves monotonically along a frontier, within `slack`.
pub fn is_monotone(values: &[f64], non_increasing: bool, slack: f64) -> bool {
    values.windows(2).all(|w| {
        if non_increasing {
            w[1] <= w[0] + slack
        } else {
            w[1] >= w[0] - slack
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedComparison {
    pub target_integral_h: f64,
    pub peak_row: FrontierRow,
    pub congestion_row: FrontierRow,
    /// `(y_congestion - y_peak) / y_congestion`.
    pub peak_reduction: f64,
    /// `(g_peak - g_congestion) / g_congestion`.
    pub congestion_increase: f64,
}

fn closest(rows: &[FrontierRow], target: f64) -> Option<&FrontierRow> {
    rows.iter()
        .min_by(|a, b| (a.integral_h - target).abs().total_cmp(&(b.integral_h - target).abs()))
}

/// Compares the two frontiers at a target utilization cost, using the row
/// of each frontier nearest to the target.
pub fn matched_utilization(peak: &[FrontierRow], congestion: &[FrontierRow], target: f64) -> Option<MatchedComparison> {
    let p = closest(peak, target)?.clone();
    let c = closest(congestion, target)?.clone();
    let ratio = |num: f64, den: f64| if den != 0.0 { num / den } else { f64::NAN };
    Some(MatchedComparison {
        target_integral_h: target,
        peak_reduction: ratio(c.peak_terminal - p.peak_terminal, c.peak_terminal),
        congestion_increase: ratio(p.integral_g - c.integral_g, c.integral_g),
        peak_row: p,
        congestion_row: c,
    })
}

/// Midpoint of the utilization range covered by both frontiers.
pub fn mid_range_utilization(peak: &[FrontierRow], congestion: &[FrontierRow]) -> Option<f64> {
    let range = |rows: &[FrontierRow]| {
        rows.iter().fold(None, |acc: Option<(f64, f64)>, r| match acc {
            None => Some((r.integral_h, r.integral_h)),
            Some((lo, hi)) => Some((lo.min(r.integral_h), hi.max(r.integral_h))),
        })
    };
    let (a_lo, a_hi) = range(peak)?;
    let (b_lo, b_hi) = range(congestion)?;
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    Some(if lo <= hi { 0.5 * (lo + hi) } else { 0.25 * (a_lo + a_hi + b_lo + b_hi) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Sigma,
    Rho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebalanced {
    pub weight: Weight,
    pub value: f64,
    pub row: FrontierRow,
    /// Whether the search interval bracketed the target.
    pub bracketed: bool,
    pub evaluations: usize,
}

/// Scales one weight (keeping the other and `eta` fixed) until the
/// utilization cost `∫h` meets `target`. The search is a geometric bisection
/// on `[lo, hi]`; when the interval does not bracket the target, the end
/// closest to it is returned with `bracketed = false`.
pub fn rebalance_utilization(
    params: &QueueParams,
    weight: Weight,
    target: f64,
    (lo, hi): (f64, f64),
    cfg: &FbsConfig,
) -> Result<Rebalanced, QueueError> {
    let with = |v: f64| match weight {
        Weight::Sigma => params.with_weights(v, params.rho),
        Weight::Rho => params.with_weights(params.sigma, v),
    };
    let eval = |v: f64| -> Result<FrontierRow, QueueError> {
        let m = QueueModel::new(with(v))?;
        Ok(FrontierRow::from_report(v, &solve_queue(&m, cfg)?))
    };
    let (mut a, mut b) = (lo, hi);
    let (mut ra, mut rb) = (eval(a)?, eval(b)?);
    let mut evaluations = 2;
    let (fa, fb) = (ra.integral_h - target, rb.integral_h - target);
    if fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        let (value, row) = if fa.abs() <= fb.abs() { (a, ra) } else { (b, rb) };
        return Ok(Rebalanced {
            weight,
            value,
            row,
            bracketed: false,
            evaluations,
        });
    }
    for _ in 0..40 {
        let best = if (ra.integral_h - target).abs() <= (rb.integral_h - target).abs() { &ra } else { &rb };
        if (best.integral_h - target).abs() <= 1e-3 * target.abs() {
            break;
        }
        let m = (a * b).sqrt();
        let rm = eval(m)?;
        evaluations += 1;
        if (rm.integral_h - target).signum() == (ra.integral_h - target).signum() {
            a = m;
            ra = rm;
        } else {
            b = m;
            rb = rm;
        }
    }
    let (value, row) = if (ra.integral_h - target).abs() <= (rb.integral_h - target).abs() { (a, ra) } else { (b, rb) };
    Ok(Rebalanced {
        weight,
        value,
        row,
        bracketed: true,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(sigma: f64, rho: f64) -> QueueModel {
        QueueModel::new(QueueParams::base().with_weights(sigma, rho)).unwrap()
    }

    fn v() -> Variant {
        Variant {
            peak: PeakDynamics::Smoothed,
            costate: Default::default(),
        }
    }

    #[test]
    fn service_and_queue_rates() {
        assert!((service_rate(1.0, 0.5, 0.9) - 1.35).abs() < 1e-12);
        assert_eq!(service_rate(1.3, 2.0, 0.0), 0.0);
        let (al, x) = (1.3, 0.7);
        assert!((service_rate(al, x, al / (al + x)) - al).abs() < 1e-15);
    }

    #[test]
    fn costs() {
        let m = QueueModel::new(QueueParams { beta: 0.0, ..QueueParams::base().with_weights(0.0, 1.0) }).unwrap();
        assert!((m.running_reward(0.0, &[2.0], &[0.0]) + 2.0).abs() < 1e-12);
        let m = model(2.0, 0.0);
        assert_eq!(m.utilization_cost(11.5), 0.0);
        assert_eq!(m.terminal_reward_with_peak(1.0, 6.0), -13.0);
    }

    #[test]
    fn costates_off_band_and_draining() {
        let m = QueueModel::new(QueueParams { beta: 0.0, ..QueueParams::base().with_weights(0.0, 1.0) }).unwrap();
        let mut out = [0.0; 2];
        m.costate_rhs(v(), 0.0, &[0.5, 2.0], &[0.3, 0.0], &[0.0], &mut out);
        assert!((out[0] - 1.0).abs() < 1e-12);
        assert_eq!(out[1], 0.0);

        let m = model(2.0, 1.0);
        // x = 3, u = 0.9 gives mu ≈ 3.6 > alpha ≈ 1.
        let (lx, u, x) = (-0.7, 0.9, 3.0);
        m.costate_rhs(v(), 0.0, &[x, 3.05], &[lx, -2.0], &[u], &mut out);
        let mu = service_rate(m.alpha(0.0), x, u);
        let expect = lx * u + 1.0 + 2.0 * 14.0 * u * (mu - 11.5);
        assert!((out[0] - expect).abs() < 1e-9);
        assert_eq!(out[1], 0.0);
    }

    #[test]
    fn costate_band_term() {
        let m = model(3.0, 0.0);
        // alpha(0) = 1 + |cos(3 pi/2)| ≈ 1; choose u so that alpha - mu = 0.5.
        let al = m.alpha(0.0);
        let x = 0.5;
        let u = (al - 0.5) / (al + x);
        let mut out = [0.0; 2];
        m.costate_rhs(v(), 0.0, &[x, x + 0.1], &[0.0, -3.0], &[u], &mut out);
        assert!((out[1] + 2.5 * 3.0).abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn terminal_costates() {
        let mut out = [0.0; 2];
        model(2.0, 0.0).costate_terminal(v(), &[0.0, 0.0], &mut out);
        assert_eq!(out, [-1.0, -2.0]);
        let m = QueueModel::new(QueueParams { eta: 0.0, ..QueueParams::base() }).unwrap();
        m.costate_terminal(v(), &[0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn update_targets_ideal_rate() {
        let m = QueueModel::new(QueueParams { u_bar: 50.0, ..QueueParams::base() }).unwrap();
        let (x, t) = (0.5, 0.0);
        let u = m.update_rate(PeakDynamics::Smoothed, t, x, x + 1.0, 0.0, 0.0);
        assert!((u - 11.5 / (m.alpha(t) + x)).abs() < 1e-12);
        let m = QueueModel::new(QueueParams { beta: 0.0, ..QueueParams::base() }).unwrap();
        assert_eq!(m.update_rate(PeakDynamics::Smoothed, t, x, x + 1.0, -1.0, 0.0), 0.9);
    }

    #[test]
    fn rebalancing_reports_missing_bracket() {
        // Utilization cost cannot rise above the u = 0 baseline, so a huge
        // target is never bracketed.
        let cfg = FbsConfig { n_steps: 100, ..FbsConfig::default() };
        let r = rebalance_utilization(&QueueParams::base(), Weight::Rho, 1e6, (0.1, 10.0), &cfg).unwrap();
        assert!(!r.bracketed);
        assert_eq!(r.evaluations, 2);
    }

    #[test]
    fn matched_rows_and_ratios() {
        let row = |w: f64, y: f64, g: f64, h: f64| FrontierRow {
            weight: w,
            peak_terminal: y,
            integral_g: g,
            integral_h: h,
            converged: true,
            iterations: 1,
            residual: 0.0,
        };
        let peak = [row(1.0, 4.0, 3.0, 10.0), row(2.0, 3.0, 3.3, 20.0)];
        let cong = [row(1.0, 5.0, 2.0, 11.0), row(2.0, 4.5, 1.8, 30.0)];
        let c = matched_utilization(&peak, &cong, 12.0).unwrap();
        assert_eq!(c.peak_row.weight, 1.0);
        assert_eq!(c.congestion_row.weight, 1.0);
        assert!((c.peak_reduction - 0.2).abs() < 1e-12);
        assert!((c.congestion_increase - 0.5).abs() < 1e-12);
        assert_eq!(mid_range_utilization(&peak, &cong), Some(15.5));
    }
}
