//! Exhaustive search over piecewise-constant controls.
//!
//! The horizon is split into equal segments; on each segment every control
//! component takes one of `n_levels` values spread uniformly over the box at
//! the segment midpoint. Each value is clamped into the box node by node, so
//! every candidate is admissible on time-varying boxes too.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, TimeGrid, Trajectory};
use crate::problem::{clamp_to_bounds, evaluate, CombinedProblem, Evaluation, ObjectiveBreakdown, ProblemError};

/// Largest enumeration the oracle accepts.
pub const MAX_CANDIDATES: u64 = 10_000_000;

const TOP_K: usize = 5;
const BLOCK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{levels}^{slots} = {size} candidates exceeds the limit of {MAX_CANDIDATES}")]
    TooLarge { levels: usize, slots: usize, size: f64 },
    #[error("oracle needs at least 2 levels and 1 segment")]
    Degenerate,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n_segments: usize,
    pub n_levels: usize,
    /// Steps of the evaluation grid.
    pub n_steps: usize,
    pub criterion: Criterion,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_segments: 4,
            n_levels: 9,
            n_steps: 240,
            criterion: Criterion::TotalSmoothed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    TotalSmoothed,
    TotalExact,
}

impl Criterion {
    pub fn score(self, b: &ObjectiveBreakdown) -> f64 {
        match self {
            Criterion::TotalSmoothed => b.total_smoothed,
            Criterion::TotalExact => b.total_exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Level index per segment, component-major within a segment.
    pub levels: Vec<usize>,
    pub score: f64,
    pub breakdown: ObjectiveBreakdown,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_control: Trajectory,
    pub best: Candidate,
    /// Up to five best candidates, best first.
    pub top: Vec<Candidate>,
    pub evaluated: u64,
}

/// Segment owning node `k`; the last node belongs to the last segment.
pub fn segment_of(k: usize, n_steps: usize, n_segments: usize) -> usize {
    if k >= n_steps {
        n_segments - 1
    } else {
        k * n_segments / n_steps
    }
}

/// Builds a piecewise-constant control from per-segment values
/// (`n_segments * control_dim`, segment-major), clamped node by node.
pub fn piecewise_control<P: CombinedProblem + ?Sized>(
    p: &P,
    grid: &TimeGrid,
    n_segments: usize,
    values: &[f64],
) -> Trajectory {
    let m = p.control_dim();
    let mut u = Trajectory::from_fn(*grid, m, |k, _, out| {
        let s = segment_of(k, grid.n_steps(), n_segments);
        out.copy_from_slice(&values[s * m..(s + 1) * m]);
    });
    clamp_to_bounds(p, &mut u);
    u
}

/// Level values per segment and component.
fn level_table<P: CombinedProblem + ?Sized>(p: &P, grid: &TimeGrid, cfg: &OracleConfig) -> Vec<Vec<f64>> {
    let m = p.control_dim();
    let (t0, t_end) = (grid.t0(), grid.t_end());
    let seg_len = (t_end - t0) / cfg.n_segments as f64;
    let mut lo = vec![0.0; m];
    let mut hi = vec![0.0; m];
    let mut table = Vec::with_capacity(cfg.n_segments * m);
    for s in 0..cfg.n_segments {
        p.control_bounds(t0 + (s as f64 + 0.5) * seg_len, &mut lo, &mut hi);
        for i in 0..m {
            table.push(
                (0..cfg.n_levels)
                    .map(|j| lo[i] + (hi[i] - lo[i]) * j as f64 / (cfg.n_levels - 1) as f64)
                    .collect(),
            );
        }
    }
    table
}

/// Decodes a candidate index; the first slot is the most significant digit,
/// so index order is lexicographic order of the level vector.
fn decode(mut index: u64, levels: usize, slots: usize, out: &mut [usize]) {
    for slot in (0..slots).rev() {
        out[slot] = (index % levels as u64) as usize;
        index /= levels as u64;
    }
}

/// Total order: higher score first, then lexicographically smaller levels.
fn ranks_before(a: &Candidate, b: &Candidate) -> bool {
    match b.score.total_cmp(&a.score) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.levels < b.levels,
    }
}

fn push_top(top: &mut Vec<Candidate>, c: Candidate) {
    let pos = top.iter().position(|t| ranks_before(&c, t)).unwrap_or(top.len());
    if pos < TOP_K {
        top.insert(pos, c);
        top.truncate(TOP_K);
    }
}

pub fn enumeration_size(cfg: &OracleConfig, control_dim: usize) -> f64 {
    (cfg.n_levels as f64).powi((cfg.n_segments * control_dim) as i32)
}

/// Evaluates every level combination and ranks them by `cfg.criterion`.
pub fn brute_force<P: CombinedProblem + ?Sized>(p: &P, cfg: &OracleConfig) -> Result<OracleResult, OracleError> {
    let criterion = cfg.criterion;
    if cfg.n_levels < 2 || cfg.n_segments == 0 {
        return Err(OracleError::Degenerate);
    }
    let m = p.control_dim();
    let slots = cfg.n_segments * m;
    let size = enumeration_size(cfg, m);
    if size > MAX_CANDIDATES as f64 {
        return Err(OracleError::TooLarge {
            levels: cfg.n_levels,
            slots,
            size,
        });
    }
    let total = size as u64;
    let (t0, t_end) = p.horizon();
    let grid = TimeGrid::new(t0, t_end, cfg.n_steps)?;
    let table = level_table(p, &grid, cfg);
    let n_blocks = total.div_ceil(BLOCK as u64);

    let blocks: Vec<Result<Vec<Candidate>, ProblemError>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut top = Vec::with_capacity(TOP_K + 1);
            let mut levels = vec![0usize; slots];
            let mut values = vec![0.0; slots];
            let end = ((b + 1) * BLOCK as u64).min(total);
            for index in b * BLOCK as u64..end {
                decode(index, cfg.n_levels, slots, &mut levels);
                for (slot, &j) in levels.iter().enumerate() {
                    values[slot] = table[slot][j];
                }
                let u = piecewise_control(p, &grid, cfg.n_segments, &values);
                let breakdown = evaluate(p, &grid, &u)?.breakdown;
                push_top(
                    &mut top,
                    Candidate {
                        levels: levels.clone(),
                        score: criterion.score(&breakdown),
                        breakdown,
                    },
                );
            }
            Ok(top)
        })
        .collect();

    let mut top = Vec::with_capacity(TOP_K + 1);
    for block in blocks {
        for c in block? {
            push_top(&mut top, c);
        }
    }
    let best = top[0].clone();
    let values: Vec<f64> = best.levels.iter().enumerate().map(|(slot, &j)| table[slot][j]).collect();
    Ok(OracleResult {
        best_control: piecewise_control(p, &grid, cfg.n_segments, &values),
        best,
        top,
        evaluated: total,
    })
}

/// Averages `control` over the held steps of each segment and re-evaluates
/// the resulting piecewise-constant control.
pub fn project_to_segments<P: CombinedProblem + ?Sized>(
    p: &P,
    control: &Trajectory,
    n_segments: usize,
) -> Result<Evaluation, ProblemError> {
    let grid = *control.grid();
    let m = control.dim();
    let mut sums = vec![0.0; n_segments * m];
    let mut counts = vec![0usize; n_segments];
    for k in 0..grid.n_steps() {
        let s = segment_of(k, grid.n_steps(), n_segments);
        counts[s] += 1;
        for i in 0..m {
            sums[s * m + i] += control.row(k)[i];
        }
    }
    for s in 0..n_segments {
        for i in 0..m {
            sums[s * m + i] /= counts[s].max(1) as f64;
        }
    }
    let u = piecewise_control(p, &grid, n_segments, &sums);
    evaluate(p, &grid, &u)
}
