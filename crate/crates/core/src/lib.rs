//! Finite-horizon optimal control with a combined integral and peak cost.
//!
//! The peak term `sup_t L_inf(t, x(t))` is carried by an auxiliary
//! running-max state `y` whose switching indicator is replaced by a smooth
//! kernel, so that a standard forward–backward sweep on the Pontryagin
//! conditions applies. Two concrete models ship with the crate: an inventory
//! system with dynamic pricing and a fluid queue with a controlled service
//! rate.

pub mod config;
pub mod fbs;
pub mod grid;
pub mod inventory;
pub mod lqr;
pub mod ode;
pub mod oracle;
pub mod problem;
pub mod queue;
pub mod run;
pub mod signal;
pub mod smoothing;

pub use fbs::{CostateMode, FbsConfig, FbsError, FbsSolution, PontryaginSystem, UInit};
pub use grid::{GridError, TimeGrid, Trajectory};
pub use problem::{CombinedProblem, ObjectiveBreakdown, PeakDynamics};
pub use smoothing::Smoothing;
