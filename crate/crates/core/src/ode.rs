//! Fixed-step classical Runge–Kutta integration on a [`TimeGrid`].
//!
//! Controls are sample-and-hold: over the step `[t_k, t_{k+1}]` every stage
//! sees the left-node control `u_k`. Backward integration additionally takes
//! node-sampled forward data (states) which is linearly interpolated at the
//! half-step stages.

use thiserror::Error;

use crate::grid::{TimeGrid, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("state became non-finite at node {node} (t = {t})")]
    NonFinite { node: usize, t: f64 },
    #[error("trajectory sampled on a different grid than the integration grid")]
    GridMismatch,
}

struct Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }
}

#[inline]
fn axpy(out: &mut [f64], base: &[f64], h: f64, slope: &[f64]) {
    for ((o, b), s) in out.iter_mut().zip(base).zip(slope) {
        *o = b + h * s;
    }
}

#[inline]
fn combine(state: &mut [f64], h: f64, sc: &Scratch) {
    for (i, v) in state.iter_mut().enumerate() {
        *v += h / 6.0 * (sc.k1[i] + 2.0 * sc.k2[i] + 2.0 * sc.k3[i] + sc.k4[i]);
    }
}

fn check_finite(state: &[f64], node: usize, t: f64) -> Result<(), OdeError> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { node, t })
    }
}

/// Integrates `ds/dt = rhs(t, s, u)` from `s0` at `t0` to the horizon end.
///
/// `rhs(t, state, control, out)` writes the derivative into `out`;
/// `control` holds the left-node sample of the current step.
pub fn integrate_forward<F>(
    mut rhs: F,
    s0: &[f64],
    grid: &TimeGrid,
    control: &Trajectory,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &[f64], &mut [f64]),
{
    if control.grid() != grid {
        return Err(OdeError::GridMismatch);
    }
    let dim = s0.len();
    let mut out = Trajectory::zeros(*grid, dim);
    out.row_mut(0).copy_from_slice(s0);
    check_finite(s0, 0, grid.t0())?;

    let h = grid.dt();
    let mut sc = Scratch::new(dim);
    let mut state = s0.to_vec();
    for k in 0..grid.n_steps() {
        let t = grid.node(k);
        let u = control.row(k);
        rhs(t, &state, u, &mut sc.k1);
        axpy(&mut sc.stage, &state, 0.5 * h, &sc.k1);
        rhs(t + 0.5 * h, &sc.stage, u, &mut sc.k2);
        axpy(&mut sc.stage, &state, 0.5 * h, &sc.k2);
        rhs(t + 0.5 * h, &sc.stage, u, &mut sc.k3);
        axpy(&mut sc.stage, &state, h, &sc.k3);
        rhs(t + h, &sc.stage, u, &mut sc.k4);
        combine(&mut state, h, &sc);
        check_finite(&state, k + 1, grid.node(k + 1))?;
        out.row_mut(k + 1).copy_from_slice(&state);
    }
    Ok(out)
}

/// Integrates `ds/dt = rhs(t, s, data(t), u)` backward from `s_end` at the
/// horizon end to `t0`.
///
/// `interpolated` is reconstructed linearly between nodes; `held` is taken at
/// the left node of each step. The returned trajectory ends at `s_end`
/// bit-exactly.
pub fn integrate_backward<F>(
    mut rhs: F,
    s_end: &[f64],
    grid: &TimeGrid,
    interpolated: &Trajectory,
    held: &Trajectory,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, &[f64], &[f64], &[f64], &mut [f64]),
{
    if interpolated.grid() != grid || held.grid() != grid {
        return Err(OdeError::GridMismatch);
    }
    let dim = s_end.len();
    let n = grid.n_steps();
    let mut out = Trajectory::zeros(*grid, dim);
    out.row_mut(n).copy_from_slice(s_end);
    check_finite(s_end, n, grid.t_end())?;

    let h = grid.dt();
    let mut sc = Scratch::new(dim);
    let mut mid = vec![0.0; interpolated.dim()];
    let mut state = s_end.to_vec();
    for k in (0..n).rev() {
        let t = grid.node(k + 1);
        let u = held.row(k);
        interpolated.interpolate_into(k, 0.5, &mut mid);
        rhs(t, &state, interpolated.row(k + 1), u, &mut sc.k1);
        axpy(&mut sc.stage, &state, -0.5 * h, &sc.k1);
        rhs(t - 0.5 * h, &sc.stage, &mid, u, &mut sc.k2);
        axpy(&mut sc.stage, &state, -0.5 * h, &sc.k2);
        rhs(t - 0.5 * h, &sc.stage, &mid, u, &mut sc.k3);
        axpy(&mut sc.stage, &state, -h, &sc.k3);
        rhs(grid.node(k), &sc.stage, interpolated.row(k), u, &mut sc.k4);
        combine(&mut state, -h, &sc);
        check_finite(&state, k, grid.node(k))?;
        out.row_mut(k).copy_from_slice(&state);
    }
    Ok(out)
}
