//! Forward–backward sweep on the Pontryagin conditions.
//!
//! One sweep integrates the stacked state `[x.., y]` forward under the
//! current control, integrates the costates `[lambda_x.., lambda_y]`
//! backward from their terminal values, and maximizes the Hamiltonian
//! pointwise. The sweep defines a fixed-point map `u -> c(u)`; the solver
//! iterates it with relaxation and, optionally, Anderson mixing.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, TimeGrid, Trajectory};
use crate::ode::{integrate_backward, integrate_forward, OdeError};
use crate::problem::{
    breakdown, clamp_to_bounds, evaluate_with, stacked_rhs, CombinedProblem, ObjectiveBreakdown,
    PeakDynamics, ProblemError,
};

/// Which terminal costate and band-term convention a model uses.
///
/// `Literal` keeps the costate formulas as they are usually written for
/// the inventory model (terminal `-C x`, band term driven by the signed rate).
/// `GradientConsistent` uses the true gradients of the implemented objective
/// (terminal `-2 C x`, band term driven by the positive part of the rate).
/// Models without such an ambiguity ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostateMode {
    #[default]
    Literal,
    GradientConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub peak: PeakDynamics,
    pub costate: CostateMode,
}

/// Costate system and Hamiltonian maximization for a [`CombinedProblem`].
///
/// States are stacked as `[x.., y]` and costates as `[lambda_x.., lambda_y]`.
pub trait PontryaginSystem: CombinedProblem {
    fn costate_rhs(&self, v: Variant, t: f64, state: &[f64], costate: &[f64], u: &[f64], out: &mut [f64]);

    fn costate_terminal(&self, v: Variant, state: &[f64], out: &mut [f64]);

    /// `lambda_x · dx + lambda_y · dy + L`.
    fn hamiltonian(&self, peak: PeakDynamics, t: f64, state: &[f64], costate: &[f64], u: &[f64]) -> f64 {
        let n = self.state_dim();
        let mut buf = [0.0; 9];
        let mut heap;
        let out: &mut [f64] = if n < buf.len() {
            &mut buf[..n + 1]
        } else {
            heap = vec![0.0; n + 1];
            &mut heap
        };
        stacked_rhs(self, peak, t, state, u, out);
        let flow: f64 = out.iter().zip(costate).map(|(d, l)| d * l).sum();
        flow + self.running_reward(t, &state[..n], u)
    }

    /// Control maximizing the Hamiltonian at one node, written into `out`.
    fn control_update(&self, peak: PeakDynamics, t: f64, state: &[f64], costate: &[f64], out: &mut [f64]) {
        grid_maximize(self, peak, t, state, costate, out);
    }
}

/// Points of the coarse search in [`grid_maximize`].
pub const FALLBACK_GRID_POINTS: usize = 257;

/// Generic Hamiltonian maximizer: a 257-point scan per control component
/// followed by one golden-section refinement around the best point.
/// Multi-dimensional controls are handled by two cyclic coordinate passes.
pub fn grid_maximize<S: PontryaginSystem + ?Sized>(
    sys: &S,
    peak: PeakDynamics,
    t: f64,
    state: &[f64],
    costate: &[f64],
    out: &mut [f64],
) {
    let m = sys.control_dim();
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    sys.control_bounds(t, &mut lo, &mut hi);
    for i in 0..m {
        out[i] = 0.5 * (lo[i] + hi[i]);
    }
    let passes = if m == 1 { 1 } else { 2 };
    let mut u = out.to_vec();
    for _ in 0..passes {
        for i in 0..m {
            let mut h = |v: f64| {
                u[i] = v;
                sys.hamiltonian(peak, t, state, costate, &u)
            };
            let step = (hi[i] - lo[i]) / (FALLBACK_GRID_POINTS - 1) as f64;
            let node = |j: usize| if j + 1 == FALLBACK_GRID_POINTS { hi[i] } else { lo[i] + j as f64 * step };
            let (mut best_j, mut best_h) = (0, f64::NEG_INFINITY);
            for j in 0..FALLBACK_GRID_POINTS {
                let v = h(node(j));
                if v > best_h {
                    best_h = v;
                    best_j = j;
                }
            }
            let a = node(best_j.saturating_sub(1));
            let b = node((best_j + 1).min(FALLBACK_GRID_POINTS - 1));
            let (refined, refined_h) = golden_section_max(&mut h, a, b, 60);
            u[i] = if refined_h > best_h { refined } else { node(best_j) };
        }
    }
    out.copy_from_slice(&u);
}

fn golden_section_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Initial control for the sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UInit {
    #[default]
    Midpoint,
    Zero,
    /// Row-major values, one row of `control_dim` entries per node.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbsConfig {
    pub n_steps: usize,
    pub max_iterations: usize,
    /// Stop once `sup |c(u) - u|` over nodes and components drops below this.
    pub tolerance: f64,
    /// Mixing weight `omega` in `u + omega (c(u) - u)`.
    pub relaxation: f64,
    /// Floor for the adaptive reduction of `omega`.
    pub min_relaxation: f64,
    /// Number of past residuals used for Anderson mixing; 0 disables it.
    pub anderson_depth: usize,
    pub u_init: UInit,
    pub costate_mode: CostateMode,
}

impl Default for FbsConfig {
    fn default() -> Self {
        Self {
            n_steps: 2000,
            max_iterations: 20000,
            tolerance: 1e-6,
            relaxation: 0.5,
            min_relaxation: 1.0 / 64.0,
            anderson_depth: 6,
            u_init: UInit::Midpoint,
            costate_mode: CostateMode::Literal,
        }
    }
}

/// Consecutive growing (or shrinking) residuals before `omega` is halved
/// (or doubled back toward its configured value).
pub const RELAXATION_PATIENCE: usize = 50;

/// Residual, relative to the best seen so far, at which Anderson mixing
/// restarts from the best iterate.
pub const ANDERSON_RESTART_FACTOR: f64 = 1e3;

/// Sweeps without a new best residual before the iteration restarts from the
/// best iterate with a fresh history and halved `omega`.
pub const STALL_PATIENCE: usize = 100;

/// Writes `u + omega r`, Anderson-mixed when a history is given, into `u`.
/// Returns whether an Anderson correction was applied.
fn step(u: &mut Trajectory, r: &[f64], omega: f64, anderson: Option<&mut Anderson>) -> bool {
    let next = u.as_mut_slice();
    for (x, d) in next.iter_mut().zip(r) {
        *x += omega * d;
    }
    anderson.is_some_and(|a| a.mix(next, r))
}

impl FbsConfig {
    pub fn validate(&self) -> Result<(), FbsError> {
        let bad = |msg: String| Err(FbsError::InvalidConfig(msg));
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad(format!("relaxation must lie in (0, 1], got {}", self.relaxation));
        }
        if !(self.min_relaxation > 0.0 && self.min_relaxation <= self.relaxation) {
            return bad(format!(
                "min_relaxation must lie in (0, relaxation], got {}",
                self.min_relaxation
            ));
        }
        Ok(())
    }

    pub fn grid_for<P: CombinedProblem + ?Sized>(&self, p: &P) -> Result<TimeGrid, FbsError> {
        let (t0, t_end) = p.horizon();
        Ok(TimeGrid::new(t0, t_end, self.n_steps)?)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbsError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("initial control has {got} values, expected {expected}")]
    InitLength { expected: usize, got: usize },
    #[error("sweep {iteration}: {source}")]
    NonFinite { iteration: usize, source: OdeError },
}

#[derive(Debug, Clone)]
pub struct FbsSolution {
    pub control: Trajectory,
    /// Stacked `[x.., y]`.
    pub states: Trajectory,
    /// Stacked `[lambda_x.., lambda_y]`.
    pub costates: Trajectory,
    pub breakdown: ObjectiveBreakdown,
    pub converged: bool,
    pub iterations_used: usize,
    /// `sup |c(u) - u|` of the returned iterate.
    pub final_update_norm: f64,
    pub final_relaxation: f64,
    /// Iteration index of the returned iterate.
    pub selected_iteration: usize,
    /// Times Anderson mixing was restarted from the best iterate.
    pub anderson_restarts: usize,
    pub variant: Variant,
    /// `total_smoothed` of every sweep, in order.
    pub objective_trace: Vec<f64>,
    /// Residual of every sweep, in order.
    pub residual_trace: Vec<f64>,
}

struct SweepOut {
    states: Trajectory,
    costates: Trajectory,
    candidate: Trajectory,
}

fn sweep<S: PontryaginSystem + ?Sized>(
    sys: &S,
    v: Variant,
    grid: &TimeGrid,
    u: &Trajectory,
) -> Result<SweepOut, OdeError> {
    let n = sys.state_dim();
    let mut s0 = sys.x0().to_vec();
    s0.push(sys.y0());
    let states = integrate_forward(|t, s, u, out| stacked_rhs(sys, v.peak, t, s, u, out), &s0, grid, u)?;
    let mut terminal = vec![0.0; n + 1];
    sys.costate_terminal(v, states.last(), &mut terminal);
    let costates = integrate_backward(
        |t, lam, s, u, out| sys.costate_rhs(v, t, s, lam, u, out),
        &terminal,
        grid,
        &states,
        u,
    )?;
    let mut candidate = Trajectory::zeros(*grid, sys.control_dim());
    for k in 0..grid.n_nodes() {
        sys.control_update(v.peak, grid.node(k), states.row(k), costates.row(k), candidate.row_mut(k));
    }
    clamp_to_bounds(sys, &mut candidate);
    Ok(SweepOut {
        states,
        costates,
        candidate,
    })
}

/// Builds the initial control for `cfg.u_init`, clamped into the box.
pub fn initial_control<P: CombinedProblem + ?Sized>(
    p: &P,
    grid: &TimeGrid,
    init: &UInit,
) -> Result<Trajectory, FbsError> {
    let m = p.control_dim();
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut u = match init {
        UInit::Midpoint => Trajectory::from_fn(*grid, m, |_, t, out| {
            p.control_bounds(t, &mut lo, &mut hi);
            for i in 0..m {
                out[i] = 0.5 * (lo[i] + hi[i]);
            }
        }),
        UInit::Zero => Trajectory::zeros(*grid, m),
        UInit::Given(values) => {
            let expected = m * grid.n_nodes();
            if values.len() != expected {
                return Err(FbsError::InitLength {
                    expected,
                    got: values.len(),
                });
            }
            let mut u = Trajectory::zeros(*grid, m);
            u.as_mut_slice().copy_from_slice(values);
            u
        }
    };
    clamp_to_bounds(p, &mut u);
    Ok(u)
}

/// Anderson mixing over the last `depth + 1` (iterate, residual) pairs.
struct Anderson {
    depth: usize,
    g: VecDeque<Vec<f64>>,
    r: VecDeque<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            g: VecDeque::new(),
            r: VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.g.clear();
        self.r.clear();
    }

    /// Records `(g, r)` and writes the mixed iterate into `g`. Returns whether
    /// a correction was applied.
    fn mix(&mut self, g: &mut [f64], r: &[f64]) -> bool {
        self.g.push_back(g.to_vec());
        self.r.push_back(r.to_vec());
        if self.r.len() > self.depth + 1 {
            self.g.pop_front();
            self.r.pop_front();
        }
        let k = self.r.len() - 1;
        if k == 0 {
            return false;
        }
        let n = r.len();
        let df = DMatrix::from_fn(n, k, |i, j| self.r[j + 1][i] - self.r[j][i]);
        let rhs = DVector::from_column_slice(r);
        let svd = df.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let Ok(gamma) = svd.solve(&rhs, cutoff) else {
            return false;
        };
        if gamma.iter().any(|c| !c.is_finite()) {
            return false;
        }
        for (i, gi) in g.iter_mut().enumerate() {
            let mut corr = 0.0;
            for j in 0..k {
                corr += (self.g[j + 1][i] - self.g[j][i]) * gamma[j];
            }
            *gi -= corr;
        }
        true
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Selection {
    BestResidual,
    BestObjective,
}

struct Snapshot {
    iteration: usize,
    residual: f64,
    objective: f64,
    control: Trajectory,
    sweep: SweepOut,
}

/// Solves with the smoothed running-max dynamics. Returns the first iterate
/// whose residual is below tolerance, or the smallest-residual iterate when
/// the iteration limit is reached.
pub fn solve<S: PontryaginSystem + ?Sized>(sys: &S, cfg: &FbsConfig) -> Result<FbsSolution, FbsError> {
    let v = Variant {
        peak: PeakDynamics::Smoothed,
        costate: cfg.costate_mode,
    };
    iterate(sys, v, cfg, Selection::BestResidual)
}

/// Solves with the raw indicator in the `y` dynamics and indicator-based
/// costates. The iteration is not expected to settle; the iterate with the
/// largest objective is returned.
pub fn solve_dn<S: PontryaginSystem + ?Sized>(sys: &S, cfg: &FbsConfig) -> Result<FbsSolution, FbsError> {
    let v = Variant {
        peak: PeakDynamics::Indicator,
        costate: cfg.costate_mode,
    };
    iterate(sys, v, cfg, Selection::BestObjective)
}

fn iterate<S: PontryaginSystem + ?Sized>(
    sys: &S,
    v: Variant,
    cfg: &FbsConfig,
    selection: Selection,
) -> Result<FbsSolution, FbsError> {
    cfg.validate()?;
    let grid = cfg.grid_for(sys)?;
    let mut u = initial_control(sys, &grid, &cfg.u_init)?;
    let omega0 = cfg.relaxation;
    let mut omega = omega0;
    let mut anderson = Anderson::new(cfg.anderson_depth);
    let mut prev_res: Option<f64> = None;
    let mut mixed = false;
    let mut restarts = 0usize;
    let mut last_restart = 0usize;
    let (mut growing, mut shrinking) = (0usize, 0usize);
    let mut best_res: Option<Snapshot> = None;
    let mut best_obj: Option<Snapshot> = None;
    let mut objective_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;

    for it in 0..cfg.max_iterations {
        iterations_used = it + 1;
        let sw = sweep(sys, v, &grid, &u).map_err(|source| FbsError::NonFinite { iteration: it, source })?;
        let r: Vec<f64> = sw.candidate.as_slice().iter().zip(u.as_slice()).map(|(c, x)| c - x).collect();
        let res = r.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let objective = breakdown(sys, &sw.states, &u).total_smoothed;
        objective_trace.push(objective);
        residual_trace.push(res);

        let done = res < cfg.tolerance;
        let better_res = best_res.as_ref().is_none_or(|b| res < b.residual);
        let better_obj = selection == Selection::BestObjective
            && best_obj.as_ref().is_none_or(|b| objective > b.objective);
        if better_res || better_obj || done {
            let snap = || Snapshot {
                iteration: it,
                residual: res,
                objective,
                control: u.clone(),
                sweep: SweepOut {
                    states: sw.states.clone(),
                    costates: sw.costates.clone(),
                    candidate: sw.candidate.clone(),
                },
            };
            if better_obj {
                best_obj = Some(snap());
            }
            if better_res || done {
                best_res = Some(snap());
            }
        }
        if done {
            converged = true;
            break;
        }

        if let Some(p) = prev_res {
            let best = best_res.as_ref().expect("a best iterate exists after one sweep");
            let stalled = it - best.iteration >= STALL_PATIENCE && it - last_restart >= STALL_PATIENCE;
            if (mixed && res > ANDERSON_RESTART_FACTOR * best.residual) || stalled {
                last_restart = it;
                u = best.control.clone();
                anderson.clear();
                restarts += 1;
                omega = (0.5 * omega).max(cfg.min_relaxation);
                prev_res = None;
                growing = 0;
                shrinking = 0;
                log::debug!("sweep {it}: residual {res:.3e}, best {:.3e}; restarting from best, omega = {omega}", best.residual);
                continue;
            }
            if res > p {
                growing += 1;
                shrinking = 0;
                if growing >= RELAXATION_PATIENCE {
                    omega = (0.5 * omega).max(cfg.min_relaxation);
                    growing = 0;
                }
            } else {
                shrinking += 1;
                growing = 0;
                if shrinking >= RELAXATION_PATIENCE && omega < omega0 {
                    omega = (2.0 * omega).min(omega0);
                    shrinking = 0;
                }
            }
        }
        prev_res = Some(res);

        mixed = step(&mut u, &r, omega, (cfg.anderson_depth > 0).then_some(&mut anderson));
        clamp_to_bounds(sys, &mut u);
    }

    let chosen = if converged || selection == Selection::BestResidual {
        best_res
    } else {
        best_obj
    }
    .expect("at least one sweep ran");
    if !converged {
        log::info!(
            "no convergence after {iterations_used} sweeps; returning sweep {} (residual {:.3e})",
            chosen.iteration,
            chosen.residual
        );
    }
    let breakdown = breakdown(sys, &chosen.sweep.states, &chosen.control);
    Ok(FbsSolution {
        control: chosen.control,
        states: chosen.sweep.states,
        costates: chosen.sweep.costates,
        breakdown,
        converged,
        iterations_used,
        final_update_norm: chosen.residual,
        final_relaxation: omega,
        selected_iteration: chosen.iteration,
        anderson_restarts: restarts,
        variant: v,
        objective_trace,
        residual_trace,
    })
}

/// Outcome of [`hamiltonian_maximality_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalityReport {
    pub fraction: f64,
    pub nodes: usize,
    /// Largest `max_probe H - H(u*)` observed.
    pub worst_gap: f64,
}

/// Fraction of nodes where the solution control attains the probed maximum
/// of the Hamiltonian within `1e-6 (1 + |H|)`. Probes form a uniform grid with
/// `n_probe` points per control component.
pub fn hamiltonian_maximality_report<S: PontryaginSystem + ?Sized>(
    sys: &S,
    sol: &FbsSolution,
    n_probe: usize,
) -> MaximalityReport {
    let grid = *sol.control.grid();
    let m = sys.control_dim();
    let n_probe = n_probe.max(2);
    let total = n_probe.pow(m as u32);
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut probe = vec![0.0; m];
    let mut ok = 0;
    let mut worst_gap = 0.0f64;
    for k in 0..grid.n_nodes() {
        let t = grid.node(k);
        let (s, lam) = (sol.states.row(k), sol.costates.row(k));
        let h_star = sys.hamiltonian(sol.variant.peak, t, s, lam, sol.control.row(k));
        sys.control_bounds(t, &mut lo, &mut hi);
        let mut h_max = f64::NEG_INFINITY;
        for idx in 0..total {
            let mut rest = idx;
            for i in 0..m {
                let j = rest % n_probe;
                rest /= n_probe;
                probe[i] = lo[i] + (hi[i] - lo[i]) * j as f64 / (n_probe - 1) as f64;
            }
            h_max = h_max.max(sys.hamiltonian(sol.variant.peak, t, s, lam, &probe));
        }
        let gap = h_max - h_star;
        worst_gap = worst_gap.max(gap);
        if gap <= 1e-6 * (1.0 + h_star.abs()) {
            ok += 1;
        }
    }
    MaximalityReport {
        fraction: ok as f64 / grid.n_nodes() as f64,
        nodes: grid.n_nodes(),
        worst_gap,
    }
}

/// Outcome of [`adjoint_gradient_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub nodes: Vec<usize>,
}

/// Compares central finite differences of `total_smoothed` with respect to
/// single control nodes against `dt · ∂H/∂u` built from the costates.
///
/// Candidate nodes exclude the two end nodes, nodes where a perturbation
/// would leave the box, and nodes rejected by `keep(k, state)`. Up to
/// `n_sampled` nodes are taken evenly from the remaining set.
pub fn adjoint_gradient_check<S: PontryaginSystem + ?Sized>(
    sys: &S,
    costate: CostateMode,
    control: &Trajectory,
    n_sampled: usize,
    keep: impl Fn(usize, &[f64]) -> bool,
) -> Result<GradientCheck, ProblemError> {
    let v = Variant {
        peak: PeakDynamics::Smoothed,
        costate,
    };
    let grid = *control.grid();
    let m = sys.control_dim();
    let base = evaluate_with(sys, v.peak, &grid, control)?;
    let u = base.control;
    let sw = sweep(sys, v, &grid, &u)?;
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let step = |lo: &[f64], hi: &[f64], i: usize| 1e-5 * (hi[i] - lo[i]).max(1.0);

    let eligible: Vec<usize> = (1..grid.n_steps())
        .filter(|&k| {
            sys.control_bounds(grid.node(k), &mut lo, &mut hi);
            let interior = (0..m).all(|i| {
                let h = step(&lo, &hi, i);
                u.row(k)[i] - h >= lo[i] && u.row(k)[i] + h <= hi[i]
            });
            interior && keep(k, sw.states.row(k))
        })
        .collect();
    let count = n_sampled.min(eligible.len());
    let nodes: Vec<usize> = (0..count)
        .map(|j| eligible[((2 * j + 1) * eligible.len()) / (2 * count)])
        .collect();

    let mut worst = 0.0f64;
    let dt = grid.dt();
    for &k in &nodes {
        let t = grid.node(k);
        sys.control_bounds(t, &mut lo, &mut hi);
        for i in 0..m {
            let h = step(&lo, &hi, i);
            let mut pert = u.clone();
            pert.row_mut(k)[i] = u.row(k)[i] + h;
            let up = evaluate_with(sys, v.peak, &grid, &pert)?.breakdown.total_smoothed;
            pert.row_mut(k)[i] = u.row(k)[i] - h;
            let down = evaluate_with(sys, v.peak, &grid, &pert)?.breakdown.total_smoothed;
            let fd = (up - down) / (2.0 * h);

            let mut probe = u.row(k).to_vec();
            probe[i] += h;
            let hp = sys.hamiltonian(v.peak, t, sw.states.row(k), sw.costates.row(k), &probe);
            probe[i] -= 2.0 * h;
            let hm = sys.hamiltonian(v.peak, t, sw.states.row(k), sw.costates.row(k), &probe);
            let adj = dt * (hp - hm) / (2.0 * h);

            let scale = fd.abs().max(adj.abs()).max(1e-12);
            worst = worst.max((fd - adj).abs() / scale);
        }
    }
    Ok(GradientCheck {
        max_relative_error: worst,
        nodes,
    })
}
