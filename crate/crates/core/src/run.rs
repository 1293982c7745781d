//! Run orchestration and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Model, RunConfig, RunKind};
use crate::fbs::{
    self, hamiltonian_maximality_report, FbsConfig, FbsError, FbsSolution, PontryaginSystem, ANDERSON_RESTART_FACTOR,
    FALLBACK_GRID_POINTS, RELAXATION_PATIENCE, STALL_PATIENCE,
};
use crate::inventory::{self, InventoryError};
use crate::oracle::{self, OracleError};
use crate::problem::ProblemError;
use crate::queue::{self, ParetoMode, QueueError};

/// Probe points per control component for the maximality report.
const MAXIMALITY_PROBES: usize = 257;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid run: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    NonFinite(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for numerical failure, 3 for invalid input, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Io { .. }) | RunError::Io { .. } => 1,
            RunError::Config(_) | RunError::Validation(_) => 3,
            RunError::NonFinite(_) => 2,
        }
    }
}

impl From<FbsError> for RunError {
    fn from(e: FbsError) -> Self {
        match e {
            FbsError::NonFinite { .. } => RunError::NonFinite(e.to_string()),
            _ => RunError::Validation(e.to_string()),
        }
    }
}

impl From<InventoryError> for RunError {
    fn from(e: InventoryError) -> Self {
        match e {
            InventoryError::Solver(e) => e.into(),
            e => RunError::Validation(e.to_string()),
        }
    }
}

impl From<QueueError> for RunError {
    fn from(e: QueueError) -> Self {
        match e {
            QueueError::Solver(e) => e.into(),
            e => RunError::Validation(e.to_string()),
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Problem(ProblemError::Ode(_)) => RunError::NonFinite(e.to_string()),
            e => RunError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
    /// False when any solve in the run stopped at the iteration limit.
    pub converged: bool,
}

/// 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), RunError> {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Num(v) => out.push_str(&format_number(*v)),
                    Cell::Int(v) => write!(out, "{v}").expect("writing to a String"),
                    Cell::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
                }
            }
            out.push('\n');
        }
        self.write(name, &out)
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "x", "y", "u", "lambda_x", "lambda_y"];

fn trajectory_rows(sol: &FbsSolution, price: Option<&[f64]>) -> Vec<Vec<Cell>> {
    let grid = *sol.control.grid();
    (0..grid.n_nodes())
        .map(|k| {
            let (s, l) = (sol.states.row(k), sol.costates.row(k));
            let mut row = vec![
                Cell::Num(grid.node(k)),
                Cell::Num(s[0]),
                Cell::Num(s[1]),
                Cell::Num(sol.control.row(k)[0]),
                Cell::Num(l[0]),
                Cell::Num(l[1]),
            ];
            if let Some(p) = price {
                row.push(Cell::Num(p[k]));
            }
            row
        })
        .collect()
}

fn write_trajectory(w: &mut Writer, name: &str, sol: &FbsSolution, price: Option<&[f64]>) -> Result<(), RunError> {
    let mut header = TRAJECTORY_HEADER.to_vec();
    if price.is_some() {
        header.push("p");
    }
    w.csv(name, &header, &trajectory_rows(sol, price))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn convergence(sol: &FbsSolution) -> Value {
    json!({
        "converged": sol.converged,
        "iterations_used": sol.iterations_used,
        "final_update_norm": sol.final_update_norm,
        "final_relaxation": sol.final_relaxation,
        "selected_iteration": sol.selected_iteration,
        "anderson_restarts": sol.anderson_restarts,
        "variant": to_value(&sol.variant),
    })
}

/// A single solve with its application report.
struct Solved {
    solution: FbsSolution,
    price: Option<Vec<f64>>,
    /// Integral plus terminal reward, without the peak penalty.
    revenue: f64,
    peak_terminal: f64,
    report: Value,
}

impl Model {
    fn system(&self) -> &dyn PontryaginSystem {
        match self {
            Model::Inventory(m) => m,
            Model::Queue(m) => m,
        }
    }

    fn solve(&self, cfg: &FbsConfig, dn: bool) -> Result<Solved, RunError> {
        match self {
            Model::Inventory(m) => {
                let r = if dn {
                    inventory::solve_case_dn(m, cfg)?
                } else {
                    inventory::solve_case(m, cfg)?
                };
                let structural = inventory::structural_checks(m, &r.solution);
                let report = json!({
                    "revenue": r.revenue,
                    "peak_terminal": r.peak_terminal,
                    "x_terminal": r.solution.states.last()[0],
                    "bound_violation": inventory::bound_violation(m, &r.solution),
                    "structural": to_value(&structural),
                });
                Ok(Solved {
                    revenue: r.revenue,
                    peak_terminal: r.peak_terminal,
                    price: Some(r.price),
                    solution: r.solution,
                    report,
                })
            }
            Model::Queue(m) => {
                let solution = if dn { fbs::solve_dn(m, cfg)? } else { fbs::solve(m, cfg)? };
                let r = queue::report(m, solution);
                let report = json!({
                    "peak_terminal": r.peak_terminal,
                    "integral_g": r.integral_g,
                    "integral_h": r.integral_h,
                    "min_load": r.min_load,
                });
                Ok(Solved {
                    revenue: r.solution.breakdown.unpenalized(),
                    peak_terminal: r.peak_terminal,
                    price: None,
                    solution: r.solution,
                    report,
                })
            }
        }
    }

    fn with_sigma(&self, sigma: f64) -> Result<Model, RunError> {
        Ok(match self {
            Model::Inventory(m) => Model::Inventory(inventory::InventoryModel::new(m.params().with_sigma(sigma))?),
            Model::Queue(m) => {
                let p = m.params();
                Model::Queue(queue::QueueModel::new(p.with_weights(sigma, p.rho))?)
            }
        })
    }
}

fn solved_summary(model: &Model, s: &Solved) -> Value {
    json!({
        "objective": to_value(&s.solution.breakdown),
        "report": s.report,
        "convergence": convergence(&s.solution),
        "maximality": to_value(&hamiltonian_maximality_report(model.system(), &s.solution, MAXIMALITY_PROBES)),
    })
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("run_kind".into(), to_value(&cfg.run_kind));
    m.insert("config".into(), to_value(&cfg.effective()));
    m.insert(
        "solver_constants".into(),
        json!({
            "relaxation_patience": RELAXATION_PATIENCE,
            "stall_patience": STALL_PATIENCE,
            "anderson_restart_factor": ANDERSON_RESTART_FACTOR,
            "fallback_grid_points": FALLBACK_GRID_POINTS,
            "maximality_probes": MAXIMALITY_PROBES,
        }),
    );
    m
}

/// Executes a validated configuration and writes its outputs into
/// `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let mut summary = header(cfg);
    let converged = match cfg.run_kind {
        RunKind::Solve => run_solve(cfg, &model, &mut w, &mut summary)?,
        RunKind::SweepSigma => run_sweep(cfg, &model, &mut w, &mut summary)?,
        RunKind::Pareto => run_pareto(cfg, &model, &mut w, &mut summary)?,
        RunKind::OracleCompare => run_oracle(cfg, &model, &mut w, &mut summary)?,
        RunKind::DnCompare => run_dn(cfg, &model, &mut w, &mut summary)?,
    };
    summary.insert("converged".into(), Value::Bool(converged));
    w.json("summary.json", &Value::Object(summary))?;
    Ok(RunOutcome {
        output_dir: w.dir,
        files: w.files,
        converged,
    })
}

type Summary = serde_json::Map<String, Value>;

fn run_solve(cfg: &RunConfig, model: &Model, w: &mut Writer, summary: &mut Summary) -> Result<bool, RunError> {
    let s = model.solve(&cfg.solver, false)?;
    write_trajectory(w, "trajectory.csv", &s.solution, s.price.as_deref())?;
    let rows: Vec<Vec<Cell>> = s
        .solution
        .residual_trace
        .iter()
        .zip(&s.solution.objective_trace)
        .enumerate()
        .map(|(i, (r, j))| vec![Cell::Int(i), Cell::Num(*r), Cell::Num(*j)])
        .collect();
    w.csv("convergence.csv", &["iteration", "residual", "total_smoothed"], &rows)?;
    summary.insert("solution".into(), solved_summary(model, &s));
    Ok(s.solution.converged)
}

fn run_sweep(cfg: &RunConfig, model: &Model, w: &mut Writer, summary: &mut Summary) -> Result<bool, RunError> {
    let rows: Vec<(f64, Solved)> = cfg
        .sweep_values
        .par_iter()
        .map(|&sigma| Ok((sigma, model.with_sigma(sigma)?.solve(&cfg.solver, false)?)))
        .collect::<Result<_, RunError>>()?;
    let mut rows = rows;
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|(sigma, s)| {
            let mut row = vec![Cell::Num(*sigma), Cell::Num(s.revenue)];
            if let Model::Queue(_) = model {
                row.push(Cell::Num(s.report["integral_g"].as_f64().unwrap_or(f64::NAN)));
                row.push(Cell::Num(s.report["integral_h"].as_f64().unwrap_or(f64::NAN)));
            }
            row.extend([
                Cell::Num(s.peak_terminal),
                Cell::Num(s.solution.breakdown.peak_exact),
                Cell::Num(s.solution.breakdown.total_smoothed),
                Cell::Bool(s.solution.converged),
                Cell::Int(s.solution.iterations_used),
                Cell::Num(s.solution.final_update_norm),
            ]);
            row
        })
        .collect();
    let mut head = vec!["sigma", "J"];
    if let Model::Queue(_) = model {
        head.extend(["integral_g", "integral_h"]);
    }
    head.extend(["y_T", "peak_exact", "total_smoothed", "converged", "iterations", "residual"]);
    w.csv("frontier.csv", &head, &cells)?;
    let per_row: Vec<Value> = rows
        .iter()
        .map(|(sigma, s)| {
            let mut v = solved_summary(model, s);
            v["sigma"] = json!(sigma);
            v
        })
        .collect();
    summary.insert("rows".into(), Value::Array(per_row));
    Ok(rows.iter().all(|(_, s)| s.solution.converged))
}

fn run_pareto(cfg: &RunConfig, model: &Model, w: &mut Writer, summary: &mut Summary) -> Result<bool, RunError> {
    let Model::Queue(m) = model else {
        return Err(RunError::Validation("pareto runs need the queue application".into()));
    };
    let mut frontiers = Vec::new();
    for (mode, name) in [
        (ParetoMode::PeakVsUtilization, "frontier_peak_vs_utilization.csv"),
        (ParetoMode::CongestionVsUtilization, "frontier_congestion_vs_utilization.csv"),
    ] {
        let rows: Vec<queue::FrontierRow> = queue::pareto_sweep(m.params(), mode, &cfg.sweep_values, &cfg.solver)
            .into_iter()
            .map(|(_, r)| r.map_err(RunError::from))
            .collect::<Result<_, _>>()?;
        let cells: Vec<Vec<Cell>> = rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.weight),
                    Cell::Num(r.integral_g),
                    Cell::Num(r.integral_h),
                    Cell::Num(r.peak_terminal),
                    Cell::Bool(r.converged),
                    Cell::Int(r.iterations),
                    Cell::Num(r.residual),
                ]
            })
            .collect();
        w.csv(
            name,
            &["weight", "integral_g", "integral_h", "y_T", "converged", "iterations", "residual"],
            &cells,
        )?;
        frontiers.push((mode, rows));
    }
    let (peak, congestion) = (&frontiers[0].1, &frontiers[1].1);
    let matched = queue::mid_range_utilization(peak, congestion)
        .and_then(|target| queue::matched_utilization(peak, congestion, target));
    summary.insert("peak_vs_utilization".into(), to_value(peak));
    summary.insert("congestion_vs_utilization".into(), to_value(congestion));
    summary.insert(
        "matched_utilization".into(),
        match &matched {
            Some(c) => json!({
                "target_integral_h": c.target_integral_h,
                "peak_reduction": c.peak_reduction,
                "congestion_increase": c.congestion_increase,
                "peak_row": to_value(&c.peak_row),
                "congestion_row": to_value(&c.congestion_row),
            }),
            None => Value::Null,
        },
    );
    Ok(peak.iter().chain(congestion).all(|r| r.converged))
}

fn run_oracle(cfg: &RunConfig, model: &Model, w: &mut Writer, summary: &mut Summary) -> Result<bool, RunError> {
    let sys = model.system();
    let started = Instant::now();
    let best = oracle::brute_force(sys, &cfg.oracle)?;
    let oracle_seconds = started.elapsed().as_secs_f64();
    let fbs_cfg = FbsConfig {
        n_steps: cfg.oracle.n_steps,
        ..cfg.solver.clone()
    };
    let s = model.solve(&fbs_cfg, false)?;
    let projected = oracle::project_to_segments(sys, &s.solution.control, cfg.oracle.n_segments)
        .map_err(OracleError::from)?;
    let score = |b| cfg.oracle.criterion.score(b);
    let projected_score = score(&projected.breakdown);
    let relative_gap = (best.best.score - projected_score) / best.best.score.abs().max(f64::MIN_POSITIVE);

    write_trajectory(w, "trajectory.csv", &s.solution, s.price.as_deref())?;
    let grid = *projected.control.grid();
    let cells: Vec<Vec<Cell>> = (0..grid.n_nodes())
        .map(|k| {
            vec![
                Cell::Num(grid.node(k)),
                Cell::Num(best.best_control.row(k)[0]),
                Cell::Num(projected.control.row(k)[0]),
                Cell::Num(s.solution.control.row(k)[0]),
            ]
        })
        .collect();
    w.csv("oracle.csv", &["t", "u_oracle", "u_projected", "u_fbs"], &cells)?;
    summary.insert(
        "oracle".into(),
        json!({
            "evaluated": best.evaluated,
            "seconds": oracle_seconds,
            "best": to_value(&best.best),
            "top": to_value(&best.top),
            "projected_fbs": to_value(&projected.breakdown),
            "projected_score": projected_score,
            "relative_gap": relative_gap,
            "fbs_n_steps": fbs_cfg.n_steps,
        }),
    );
    summary.insert("solution".into(), solved_summary(model, &s));
    Ok(s.solution.converged)
}

fn run_dn(cfg: &RunConfig, model: &Model, w: &mut Writer, summary: &mut Summary) -> Result<bool, RunError> {
    let sigmas = if cfg.sweep_values.is_empty() {
        vec![cfg.params.sigma()]
    } else {
        cfg.sweep_values.clone()
    };
    let pairs: Vec<(f64, Solved, Solved)> = sigmas
        .par_iter()
        .map(|&sigma| {
            let m = model.with_sigma(sigma)?;
            Ok((sigma, m.solve(&cfg.solver, false)?, m.solve(&cfg.solver, true)?))
        })
        .collect::<Result<_, RunError>>()?;
    let (_, smooth0, dn0) = &pairs[0];
    write_trajectory(w, "trajectory.csv", &smooth0.solution, smooth0.price.as_deref())?;
    write_trajectory(w, "trajectory_dn.csv", &dn0.solution, dn0.price.as_deref())?;
    let cells: Vec<Vec<Cell>> = pairs
        .iter()
        .map(|(sigma, s, d)| {
            vec![
                Cell::Num(*sigma),
                Cell::Num(s.revenue),
                Cell::Num(s.peak_terminal),
                Cell::Num(s.solution.breakdown.peak_exact),
                Cell::Bool(s.solution.converged),
                Cell::Num(d.revenue),
                Cell::Num(d.peak_terminal),
                Cell::Num(d.solution.breakdown.peak_exact),
                Cell::Bool(d.solution.converged),
                Cell::Int(d.solution.selected_iteration),
            ]
        })
        .collect();
    w.csv(
        "dn_compare.csv",
        &[
            "sigma",
            "J_smooth",
            "y_T_smooth",
            "peak_exact_smooth",
            "converged_smooth",
            "J_dn",
            "y_T_dn",
            "peak_exact_dn",
            "converged_dn",
            "selected_iteration_dn",
        ],
        &cells,
    )?;
    let rows: Vec<Value> = pairs
        .iter()
        .map(|(sigma, s, d)| {
            json!({
                "sigma": sigma,
                "smooth": solved_summary(model, s),
                "dn": {
                    "objective": to_value(&d.solution.breakdown),
                    "report": d.report,
                    "convergence": convergence(&d.solution),
                },
            })
        })
        .collect();
    summary.insert("rows".into(), Value::Array(rows));
    // DN is expected to stall; only the smooth solves count.
    Ok(pairs.iter().all(|(_, s, _)| s.solution.converged))
}
