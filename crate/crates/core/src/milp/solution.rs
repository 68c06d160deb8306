//! Solution files: one `name value` pair per line, `#` starts a comment.
//!
//! Two comment lines carry metadata, `# status: <status>` and
//! `# objective: <value>`. A missing or empty file means no solution exists.
//! The same format is used for schedules written by this crate.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::mps::num;
use super::{Domain, ModelIR, ModelKind, VarRef};
use crate::scenario::{QueueId, VisitId};
use crate::schedule::{Schedule, ScheduleStatus, VisitPlan};

/// Integer values within this distance of an integer are rounded silently.
pub const ROUND_TOL: f64 = 1e-6;
/// Integer values further than this from an integer are rejected.
pub const INTEGRALITY_TOL: f64 = 1e-4;
/// Slack allowed when deriving order witnesses from times.
pub const WITNESS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("cannot read solution file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("solution line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("variable `{name}` = {value} is not integral")]
    Integrality { name: String, value: f64 },
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedSolution {
    pub schedule: Schedule,
    /// Full column vector; empty when there is no schedule.
    pub point: Vec<f64>,
    /// Objective reported in the file, if any.
    pub reported_objective: Option<f64>,
    pub warnings: Vec<String>,
}

/// Canonical temporal and spatial order indicators for a schedule.
///
/// `t[i,j] = 1` when visit `i` ends no later than `j` starts; when both
/// directions hold (zero-length sessions at one instant) the earlier arrival
/// wins. `p[i,j] = 1` when `i` sits on a lower queue than `j`.
pub fn order_witnesses(schedule: &Schedule, arrivals_s: &[f64]) -> Vec<(VarRef, f64)> {
    let n = schedule.visits.len();
    let mut out = Vec::with_capacity(2 * n * n.saturating_sub(1));
    let precedes = |i: usize, j: usize| -> bool {
        let (pi, pj) = (&schedule.visits[i], &schedule.visits[j]);
        let forward = pi.end_s <= pj.start_s + WITNESS_TOL;
        let backward = pj.end_s <= pi.start_s + WITNESS_TOL;
        forward
            && (!backward
                || (arrivals_s[i], pi.start_s, i) < (arrivals_s[j], pj.start_s, j))
    };
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = if precedes(i, j) { 1.0 } else { 0.0 };
                out.push((VarRef::Before(VisitId::new(i), VisitId::new(j)), v));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let below = schedule.visits[i].queue < schedule.visits[j].queue;
                let v = if below { 1.0 } else { 0.0 };
                out.push((VarRef::Below(VisitId::new(i), VisitId::new(j)), v));
            }
        }
    }
    out
}

/// Column vector for a bus charging model at a schedule, with canonical order
/// witnesses.
pub fn schedule_point(
    model: &ModelIR,
    schedule: &Schedule,
    arrivals_s: &[f64],
) -> Result<Vec<f64>, SolutionError> {
    if model.metadata.kind != ModelKind::Beb {
        return Err(SolutionError::Model("schedules map only onto the bus charging model".into()));
    }
    let n = model.metadata.visit_count;
    let nq = model.metadata.queue_count;
    if schedule.visits.len() != n || arrivals_s.len() != n {
        return Err(SolutionError::Model(format!(
            "schedule has {} visits, model has {n}",
            schedule.visits.len()
        )));
    }
    let mut point = vec![0.0; model.variables.len()];
    let mut set = |var: VarRef, value: f64| -> Result<(), SolutionError> {
        let col = model
            .variables
            .get(var)
            .ok_or_else(|| SolutionError::Model(format!("model has no variable {}", var.name())))?;
        point[col.0] = value;
        Ok(())
    };
    for (k, plan) in schedule.visits.iter().enumerate() {
        if plan.assignment.len() != nq || plan.gain_s.len() != nq {
            return Err(SolutionError::Model(format!(
                "visit {} has {} queue entries, model has {nq}",
                k + 1,
                plan.assignment.len()
            )));
        }
        let i = VisitId::new(k);
        set(VarRef::Start(i), plan.start_s)?;
        set(VarRef::End(i), plan.end_s)?;
        set(VarRef::Duration(i), plan.duration_s)?;
        set(VarRef::Soc(i), plan.arrival_soc_kwh)?;
        set(VarRef::Queue(i), plan.queue.number() as f64)?;
        for q in 0..nq {
            set(VarRef::Assign(i, QueueId::new(q)), plan.assignment[q])?;
            set(VarRef::Gain(i, QueueId::new(q)), plan.gain_s[q])?;
        }
    }
    for (var, value) in order_witnesses(schedule, arrivals_s) {
        set(var, value)?;
    }
    Ok(point)
}

/// Solution text for a schedule of a bus charging model. A schedule without
/// visit plans produces the header only.
pub fn write_solution(
    model: &ModelIR,
    schedule: &Schedule,
    arrivals_s: &[f64],
) -> Result<String, SolutionError> {
    let mut out = String::new();
    writeln!(out, "# status: {}", schedule.status).unwrap();
    if !schedule.has_plan() {
        return Ok(out);
    }
    writeln!(out, "# objective: {}", num(schedule.objective)).unwrap();
    let point = schedule_point(model, schedule, arrivals_s)?;
    for (col, var) in model.variables.iter() {
        writeln!(out, "{} {}", var.name, num(point[col.0])).unwrap();
    }
    Ok(out)
}

pub fn import_solution(model: &ModelIR, path: impl AsRef<Path>) -> Result<ImportedSolution, SolutionError> {
    let path = path.as_ref();
    match std::fs::read_to_string(path) {
        Ok(text) => import_solution_text(model, &text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => import_solution_text(model, ""),
        Err(source) => Err(SolutionError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}

pub fn import_solution_text(model: &ModelIR, text: &str) -> Result<ImportedSolution, SolutionError> {
    if model.metadata.kind != ModelKind::Beb {
        return Err(SolutionError::Model("only bus charging solutions can be imported".into()));
    }
    let mut status: Option<ScheduleStatus> = None;
    let mut reported_objective = None;
    let mut values: Vec<Option<f64>> = vec![None; model.variables.len()];
    let mut warnings = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "status" => {
                        status = Some(value.parse().map_err(|message| SolutionError::Parse {
                            line: ln,
                            message,
                        })?)
                    }
                    "objective" => {
                        reported_objective = Some(value.parse::<f64>().map_err(|_| {
                            SolutionError::Parse {
                                line: ln,
                                message: format!("bad objective `{value}`"),
                            }
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(SolutionError::Parse {
                line: ln,
                message: "expected `name value`".into(),
            });
        }
        let col = model
            .variables
            .by_name(toks[0])
            .ok_or_else(|| SolutionError::UnknownVariable {
                line: ln,
                name: toks[0].to_string(),
            })?;
        let value = toks[1].parse::<f64>().map_err(|_| SolutionError::Parse {
            line: ln,
            message: format!("`{}` is not a number", toks[1]),
        })?;
        if values[col.0].replace(value).is_some() {
            warnings.push(format!("{} given more than once; last value kept", toks[0]));
        }
    }

    if values.iter().all(Option::is_none) {
        let status = match status {
            Some(s @ (ScheduleStatus::Infeasible | ScheduleStatus::TimeLimit)) => s,
            Some(other) => {
                return Err(SolutionError::Model(format!(
                    "status {other} but no variable values"
                )))
            }
            None => ScheduleStatus::Infeasible,
        };
        return Ok(ImportedSolution {
            schedule: Schedule::empty(status),
            point: Vec::new(),
            reported_objective,
            warnings,
        });
    }

    let mut point = Vec::with_capacity(values.len());
    for (col, var) in model.variables.iter() {
        let mut x = match values[col.0] {
            Some(x) => x,
            None => {
                warnings.push(format!("{} missing; set to 0", var.name));
                0.0
            }
        };
        if var.domain != Domain::Continuous {
            let dev = (x - x.round()).abs();
            if dev > INTEGRALITY_TOL {
                return Err(SolutionError::Integrality {
                    name: var.name.clone(),
                    value: x,
                });
            }
            if dev > ROUND_TOL {
                warnings.push(format!("{} = {x} rounded", var.name));
            }
            x = x.round();
        }
        point.push(x);
    }

    let n = model.metadata.visit_count;
    let nq = model.metadata.queue_count;
    let at = |var: VarRef| point[model.variables.col(var).0];
    let mut assign_cost = vec![0.0; nq];
    let mut use_cost = vec![0.0; nq];
    for &(col, a) in &model.objective {
        match model.variables.var(col).var {
            VarRef::Assign(_, q) => assign_cost[q.get()] = a,
            VarRef::Gain(_, q) => use_cost[q.get()] = a,
            _ => {}
        }
    }
    let visits = (0..n)
        .map(|k| {
            let i = VisitId::new(k);
            let v = at(VarRef::Queue(i)).round().clamp(1.0, nq as f64) as usize;
            VisitPlan {
                start_s: at(VarRef::Start(i)),
                end_s: at(VarRef::End(i)),
                duration_s: at(VarRef::Duration(i)),
                queue: QueueId::new(v - 1),
                assignment: (0..nq).map(|q| at(VarRef::Assign(i, QueueId::new(q)))).collect(),
                gain_s: (0..nq).map(|q| at(VarRef::Gain(i, QueueId::new(q)))).collect(),
                arrival_soc_kwh: at(VarRef::Soc(i)),
            }
        })
        .collect();
    let mut schedule = Schedule {
        visits,
        objective: 0.0,
        status: status.unwrap_or(ScheduleStatus::Feasible),
    };
    schedule.objective = schedule.objective_with(&assign_cost, &use_cost);
    Ok(ImportedSolution {
        schedule,
        point,
        reported_objective,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build_beb_model, BuildOptions};
    use crate::scenario::{Bus, BusId, QueueBank, Scenario, Visit};
    use crate::schedule::Decision;

    fn one_visit() -> Scenario {
        let bus = Bus {
            id: BusId::new(0),
            capacity_kwh: 100.0,
            initial_frac: 0.8,
            final_frac: 0.5,
            min_frac: 0.2,
            discharge_kw: 30.0,
        };
        let visit = Visit {
            id: VisitId::new(0),
            bus: BusId::new(0),
            arrival_s: 600.0,
            departure_s: 4200.0,
            route_discharge_kwh: 0.0,
        };
        let queues = QueueBank::with_fewest_charger_costs(1, &[50.0]).unwrap();
        Scenario::new(7200.0, vec![bus], vec![visit], queues).unwrap()
    }

    fn arrivals(s: &Scenario) -> Vec<f64> {
        s.visits().iter().map(|v| v.arrival_s).collect()
    }

    #[test]
    fn write_then_import_is_identity() {
        let s = one_visit();
        let model = build_beb_model(&s, &BuildOptions::default()).unwrap();
        let sched = Schedule::from_decisions(
            &s,
            &[Decision {
                queue: QueueId::new(1),
                start_s: 900.0,
                duration_s: 1234.5,
            }],
            ScheduleStatus::Feasible,
        );
        let text = write_solution(&model, &sched, &arrivals(&s)).unwrap();
        let back = import_solution_text(&model, &text).unwrap();
        assert_eq!(back.schedule, sched);
        assert!(back.warnings.is_empty());
        assert_eq!(back.reported_objective, Some(sched.objective));
        assert!(model.is_feasible(&back.point, 1e-9));
    }

    #[test]
    fn half_assignment_is_an_integrality_error() {
        let s = one_visit();
        let model = build_beb_model(&s, &BuildOptions::default()).unwrap();
        let err = import_solution_text(&model, "w[1,1] 0.5\n").unwrap_err();
        assert!(matches!(err, SolutionError::Integrality { ref name, .. } if name == "w[1,1]"));
    }

    #[test]
    fn near_integral_values_round_with_warning() {
        let s = one_visit();
        let model = build_beb_model(&s, &BuildOptions::default()).unwrap();
        let text = "u[1] 600\nd[1] 600\nv[1] 1\nw[1,1] 0.99995\neta[1] 80\n";
        let out = import_solution_text(&model, text).unwrap();
        assert!(out.warnings.iter().any(|w| w.contains("w[1,1]") && w.contains("rounded")));
        assert!(out.warnings.iter().any(|w| w.contains("s[1] missing")));
        assert_eq!(out.schedule.visits[0].assignment, vec![1.0, 0.0]);
    }

    #[test]
    fn unknown_names_and_empty_files() {
        let s = one_visit();
        let model = build_beb_model(&s, &BuildOptions::default()).unwrap();
        assert!(matches!(
            import_solution_text(&model, "# c\nzz[3] 1\n"),
            Err(SolutionError::UnknownVariable { line: 2, .. })
        ));
        let empty = import_solution_text(&model, "").unwrap();
        assert_eq!(empty.schedule.status, ScheduleStatus::Infeasible);
        assert!(!empty.schedule.has_plan());
        let missing = import_solution(&model, "/nonexistent/solution.sol").unwrap();
        assert_eq!(missing.schedule.status, ScheduleStatus::Infeasible);
    }

    #[test]
    fn zero_length_sessions_at_one_instant_get_one_order() {
        let mk = |start_s| VisitPlan {
            start_s,
            end_s: start_s,
            duration_s: 0.0,
            queue: QueueId::new(0),
            assignment: vec![1.0],
            gain_s: vec![0.0],
            arrival_soc_kwh: 0.0,
        };
        let sched = Schedule {
            visits: vec![mk(5.0), mk(5.0)],
            objective: 0.0,
            status: ScheduleStatus::Feasible,
        };
        let w = order_witnesses(&sched, &[5.0, 0.0]);
        // the second visit arrived first
        assert_eq!(w[0], (VarRef::Before(VisitId::new(0), VisitId::new(1)), 0.0));
        assert_eq!(w[1], (VarRef::Before(VisitId::new(1), VisitId::new(0)), 1.0));
    }
}
