//! The combined-cost problem and its augmented `(x, y)` dynamics.
//!
//! Maximizes `∫ L dt - sigma * sup_t L_inf(t, x(t)) + Psi(x(T))`. The peak is
//! tracked by `y` with `dy/dt = (dL_inf/dt)^+ * w`, where `w` is either the
//! smoothing kernel `psi(L_inf - y)` or the raw indicator `1{L_inf >= y}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{TimeGrid, Trajectory};
use crate::ode::{integrate_forward, OdeError};
use crate::smoothing::Smoothing;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("control has dimension {got}, problem expects {expected}")]
    ControlDim { expected: usize, got: usize },
}

/// How the running-max state switches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakDynamics {
    Smoothed,
    Indicator,
}

/// A finite-horizon problem with reward rate, peak functional and terminal
/// reward. Costs enter as negative rewards.
pub trait CombinedProblem: Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// `(t0, T)`.
    fn horizon(&self) -> (f64, f64);
    fn dynamics(&self, t: f64, x: &[f64], u: &[f64], dx: &mut [f64]);
    fn running_reward(&self, t: f64, x: &[f64], u: &[f64]) -> f64;
    fn peak(&self, t: f64, x: &[f64]) -> f64;
    /// Total derivative `dL_inf/dt = grad_x L_inf · dx + ∂L_inf/∂t`.
    fn peak_rate(&self, t: f64, x: &[f64], dx: &[f64]) -> f64;
    fn terminal_reward(&self, x: &[f64]) -> f64;
    fn sigma(&self) -> f64;
    fn control_bounds(&self, t: f64, lower: &mut [f64], upper: &mut [f64]);
    fn smoothing(&self) -> Smoothing;
    fn x0(&self) -> &[f64];
    fn y0(&self) -> f64;
}

/// Writes `dx` and returns `dy` under the smoothing kernel.
pub fn augmented_rhs<P: CombinedProblem + ?Sized>(
    p: &P,
    t: f64,
    x: &[f64],
    y: f64,
    u: &[f64],
    dx: &mut [f64],
) -> f64 {
    p.dynamics(t, x, u, dx);
    let rate = p.peak_rate(t, x, dx);
    rate.max(0.0) * p.smoothing().psi(p.peak(t, x) - y)
}

/// Writes `dx` and returns `dy` under the raw indicator `1{L_inf >= y}`.
pub fn augmented_rhs_indicator<P: CombinedProblem + ?Sized>(
    p: &P,
    t: f64,
    x: &[f64],
    y: f64,
    u: &[f64],
    dx: &mut [f64],
) -> f64 {
    p.dynamics(t, x, u, dx);
    let rate = p.peak_rate(t, x, dx);
    if rate >= 0.0 && p.peak(t, x) >= y {
        rate
    } else {
        0.0
    }
}

/// Right-hand side on the stacked state `[x.., y]`.
pub fn stacked_rhs<P: CombinedProblem + ?Sized>(
    p: &P,
    mode: PeakDynamics,
    t: f64,
    s: &[f64],
    u: &[f64],
    out: &mut [f64],
) {
    let n = p.state_dim();
    let (dx, dy) = out.split_at_mut(n);
    dy[0] = match mode {
        PeakDynamics::Smoothed => augmented_rhs(p, t, &s[..n], s[n], u, dx),
        PeakDynamics::Indicator => augmented_rhs_indicator(p, t, &s[..n], s[n], u, dx),
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub integral_term: f64,
    pub peak_smoothed: f64,
    pub peak_exact: f64,
    pub terminal_term: f64,
    pub total_smoothed: f64,
    pub total_exact: f64,
}

impl ObjectiveBreakdown {
    pub fn new(
        integral_term: f64,
        peak_smoothed: f64,
        peak_exact: f64,
        terminal_term: f64,
        sigma: f64,
    ) -> Self {
        Self {
            integral_term,
            peak_smoothed,
            peak_exact,
            terminal_term,
            total_smoothed: integral_term - sigma * peak_smoothed + terminal_term,
            total_exact: integral_term - sigma * peak_exact + terminal_term,
        }
    }

    /// Integral plus terminal reward, without the peak penalty.
    pub fn unpenalized(&self) -> f64 {
        self.integral_term + self.terminal_term
    }
}

/// Objective parts for a stacked `[x.., y]` trajectory driven by `control`.
pub fn breakdown<P: CombinedProblem + ?Sized>(
    p: &P,
    states: &Trajectory,
    control: &Trajectory,
) -> ObjectiveBreakdown {
    let grid = states.grid();
    let n = p.state_dim();
    let integral = grid.trapezoid(
        (0..grid.n_nodes()).map(|k| p.running_reward(grid.node(k), &states.row(k)[..n], control.row(k))),
    );
    let peak_exact = (0..grid.n_nodes())
        .map(|k| p.peak(grid.node(k), &states.row(k)[..n]))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = states.last();
    ObjectiveBreakdown::new(integral, last[n], peak_exact, p.terminal_reward(&last[..n]), p.sigma())
}

/// Result of [`evaluate`].
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Stacked `[x.., y]` per node.
    pub states: Trajectory,
    /// The control actually applied, after clamping into the box.
    pub control: Trajectory,
    pub breakdown: ObjectiveBreakdown,
    /// Nodes where at least one component had to be clamped.
    pub clamped_nodes: usize,
}

/// Clamps `control` into the box in place, returning the number of nodes
/// that needed it.
pub fn clamp_to_bounds<P: CombinedProblem + ?Sized>(p: &P, control: &mut Trajectory) -> usize {
    let m = p.control_dim();
    let grid = *control.grid();
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut clamped = 0;
    for k in 0..grid.n_nodes() {
        p.control_bounds(grid.node(k), &mut lo, &mut hi);
        let mut hit = false;
        for (i, u) in control.row_mut(k).iter_mut().enumerate() {
            let c = u.clamp(lo[i], hi[i]);
            if c != *u {
                hit = true;
                *u = c;
            }
        }
        clamped += hit as usize;
    }
    clamped
}

/// Integrates the smoothed augmented dynamics under `control` and evaluates
/// the objective.
pub fn evaluate<P: CombinedProblem + ?Sized>(
    p: &P,
    grid: &TimeGrid,
    control: &Trajectory,
) -> Result<Evaluation, ProblemError> {
    evaluate_with(p, PeakDynamics::Smoothed, grid, control)
}

pub fn evaluate_with<P: CombinedProblem + ?Sized>(
    p: &P,
    mode: PeakDynamics,
    grid: &TimeGrid,
    control: &Trajectory,
) -> Result<Evaluation, ProblemError> {
    if control.dim() != p.control_dim() {
        return Err(ProblemError::ControlDim {
            expected: p.control_dim(),
            got: control.dim(),
        });
    }
    let mut applied = control.clone();
    let clamped_nodes = clamp_to_bounds(p, &mut applied);
    if clamped_nodes > 0 {
        log::warn!("control outside its bounds at {clamped_nodes} nodes; clamped");
    }
    let mut s0 = p.x0().to_vec();
    s0.push(p.y0());
    let states = integrate_forward(|t, s, u, out| stacked_rhs(p, mode, t, s, u, out), &s0, grid, &applied)?;
    let breakdown = breakdown(p, &states, &applied);
    Ok(Evaluation {
        states,
        control: applied,
        breakdown,
        clamped_nodes,
    })
}
