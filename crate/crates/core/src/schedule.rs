//! Per-visit decisions shared by the solvers, the heuristic, the validator and
//! the metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scenario::{QueueBank, QueueId, Scenario, VisitId, SECONDS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
    /// Populated, but known to break at least one constraint family.
    Violating,
}

impl ScheduleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleStatus::Optimal => "optimal",
            ScheduleStatus::Feasible => "feasible",
            ScheduleStatus::Infeasible => "infeasible",
            ScheduleStatus::TimeLimit => "time-limit",
            ScheduleStatus::Violating => "violating",
        }
    }
}

impl fmt::Display for ScheduleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "optimal" => Ok(ScheduleStatus::Optimal),
            "feasible" => Ok(ScheduleStatus::Feasible),
            "infeasible" => Ok(ScheduleStatus::Infeasible),
            "time-limit" => Ok(ScheduleStatus::TimeLimit),
            "violating" => Ok(ScheduleStatus::Violating),
            other => Err(format!("unknown schedule status `{other}`")),
        }
    }
}

/// Decisions for one visit. Times in seconds, charge in kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitPlan {
    pub start_s: f64,
    pub end_s: f64,
    pub duration_s: f64,
    pub queue: QueueId,
    /// One entry per queue; a valid plan is one-hot on `queue`.
    pub assignment: Vec<f64>,
    /// Seconds charged on each queue.
    pub gain_s: Vec<f64>,
    /// Charge held on arrival.
    pub arrival_soc_kwh: f64,
}

impl VisitPlan {
    /// Energy received, from the per-queue gains.
    pub fn energy_kwh(&self, queues: &QueueBank) -> f64 {
        self.gain_s
            .iter()
            .zip(queues.ids())
            .map(|(g, q)| g * queues.rate_kw(q))
            .sum::<f64>()
            / SECONDS_PER_HOUR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Indexed by visit id; empty when no schedule exists.
    pub visits: Vec<VisitPlan>,
    pub objective: f64,
    pub status: ScheduleStatus,
}

/// A queue/start/duration choice for one visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub queue: QueueId,
    pub start_s: f64,
    pub duration_s: f64,
}

impl Schedule {
    pub fn empty(status: ScheduleStatus) -> Self {
        Self {
            visits: Vec::new(),
            objective: f64::NAN,
            status,
        }
    }

    pub fn has_plan(&self) -> bool {
        !self.visits.is_empty()
    }

    pub fn plan(&self, i: VisitId) -> &VisitPlan {
        &self.visits[i.get()]
    }

    /// Completes per-visit decisions into a full schedule: end times, one-hot
    /// assignments, gains and the arrival charge propagated along each bus's
    /// visit chain from its initial charge.
    pub fn from_decisions(
        scenario: &Scenario,
        decisions: &[Decision],
        status: ScheduleStatus,
    ) -> Self {
        assert_eq!(decisions.len(), scenario.visit_count(), "one decision per visit");
        let queues = scenario.queues();
        let nq = queues.len();
        let mut visits: Vec<VisitPlan> = decisions
            .iter()
            .map(|d| {
                let mut assignment = vec![0.0; nq];
                let mut gain_s = vec![0.0; nq];
                assignment[d.queue.get()] = 1.0;
                gain_s[d.queue.get()] = d.duration_s;
                VisitPlan {
                    start_s: d.start_s,
                    end_s: d.start_s + d.duration_s,
                    duration_s: d.duration_s,
                    queue: d.queue,
                    assignment,
                    gain_s,
                    arrival_soc_kwh: 0.0,
                }
            })
            .collect();
        let m = scenario.mappings();
        for b in scenario.bus_ids() {
            let mut soc = scenario.bus(b).initial_kwh();
            for i in m.chain(b) {
                let plan = &mut visits[i.get()];
                plan.arrival_soc_kwh = soc;
                soc = soc + plan.energy_kwh(queues) - scenario.visit(i).route_discharge_kwh;
            }
        }
        let mut out = Self {
            visits,
            objective: 0.0,
            status,
        };
        out.objective = out.evaluate_objective(queues);
        out
    }

    /// Assignment cost plus usage cost, summed visit by visit and queue by
    /// queue in id order.
    pub fn evaluate_objective(&self, queues: &QueueBank) -> f64 {
        let assign: Vec<f64> = queues.ids().map(|q| queues.assign_cost(q)).collect();
        let usage: Vec<f64> = queues.ids().map(|q| queues.use_cost(q)).collect();
        self.objective_with(&assign, &usage)
    }

    pub(crate) fn objective_with(&self, assign_cost: &[f64], use_cost: &[f64]) -> f64 {
        let mut total = 0.0;
        for plan in &self.visits {
            for q in 0..assign_cost.len() {
                total += plan.assignment[q] * assign_cost[q] + plan.gain_s[q] * use_cost[q];
            }
        }
        total
    }

    pub fn decisions(&self) -> Vec<Decision> {
        self.visits
            .iter()
            .map(|p| Decision {
                queue: p.queue,
                start_s: p.start_s,
                duration_s: p.duration_s,
            })
            .collect()
    }
}
