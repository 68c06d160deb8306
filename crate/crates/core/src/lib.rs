//! Charge scheduling for battery-electric bus fleets.
//!
//! Scenarios describe buses, their station visits and the charging queues.
//! From a scenario the crate builds the mixed-integer model and exports it as
//! MPS, solves small instances exactly on a time grid, runs a threshold
//! heuristic, validates schedules and derives power, energy and charger-count
//! series.

pub mod cli;
pub mod heuristic;
pub mod metrics;
pub mod milp;
pub mod scenario;
pub mod schedule;
pub mod solver;
pub mod validator;
