//! Uniform time grids and node-sampled trajectories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("empty horizon: end time {t_end} must exceed start time {t0}")]
    EmptyHorizon { t0: f64, t_end: f64 },
    #[error("grid needs at least one step")]
    ZeroSteps,
}

/// A uniform partition of `[t0, t_end]` into `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self, GridError> {
        if t_end.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
            return Err(GridError::EmptyHorizon { t0, t_end });
        }
        if n_steps == 0 {
            return Err(GridError::ZeroSteps);
        }
        Ok(Self {
            t0,
            t_end,
            n_steps,
            dt: (t_end - t0) / n_steps as f64,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of node `k`. The last node is pinned to `t_end` exactly.
    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_steps);
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |k| self.node(k))
    }

    /// Trapezoid weight of node `k` (half steps at both ends).
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_steps {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// Composite trapezoid rule over per-node samples.
    pub fn trapezoid(&self, samples: impl IntoIterator<Item = f64>) -> f64 {
        samples
            .into_iter()
            .enumerate()
            .map(|(k, v)| self.trapezoid_weight(k) * v)
            .sum()
    }
}

/// Per-node samples of a fixed-dimension vector signal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; dim * grid.n_nodes()],
        }
    }

    pub fn constant(grid: TimeGrid, value: &[f64]) -> Self {
        let mut values = Vec::with_capacity(value.len() * grid.n_nodes());
        for _ in 0..grid.n_nodes() {
            values.extend_from_slice(value);
        }
        Self {
            grid,
            dim: value.len(),
            values,
        }
    }

    /// Builds a trajectory by evaluating `f(k, t_k, out)` at every node.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(usize, f64, &mut [f64])) -> Self {
        let mut traj = Self::zeros(grid, dim);
        for k in 0..grid.n_nodes() {
            let t = grid.node(k);
            f(k, t, traj.row_mut(k));
        }
        traj
    }

    /// Scalar trajectory from one value per node.
    pub fn from_scalars(grid: TimeGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_nodes(), "one sample per node");
        Self {
            grid,
            dim: 1,
            values,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.n_nodes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.row(0)
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.grid.n_steps())
    }

    /// Component `i` at every node.
    pub fn component(&self, i: usize) -> Vec<f64> {
        assert!(i < self.dim);
        self.values.iter().skip(i).step_by(self.dim).copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Linear interpolation at `t_k + theta * dt` for `theta` in `[0, 1]`.
    pub fn interpolate_into(&self, k: usize, theta: f64, out: &mut [f64]) {
        let left = self.row(k);
        if theta == 0.0 || k == self.grid.n_steps() {
            out.copy_from_slice(left);
            return;
        }
        let right = self.row(k + 1);
        for ((o, l), r) in out.iter_mut().zip(left).zip(right) {
            *o = l + theta * (r - l);
        }
    }

    /// Largest absolute componentwise difference against another trajectory.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
