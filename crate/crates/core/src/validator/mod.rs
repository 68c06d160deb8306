//! Schedule checking against every constraint family of the charging model,
//! independent of how the schedule was produced.

mod soc;

pub use soc::{simulate_soc, SocSimulation, SocTrajectory};

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::milp::FinalChargeMode;
use crate::scenario::{Scenario, SECONDS_PER_HOUR};
use crate::schedule::Schedule;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("schedule does not match the scenario: {0}")]
    Dimension(String),
}

/// Check families. Residuals are in seconds for the time families, in
/// kWh for the charge families and unitless otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckFamily {
    Window,
    Overlap,
    Assignment,
    GainLinkage,
    SocChain,
    SocBounds,
    FinalSoc,
}

impl CheckFamily {
    pub const ALL: [CheckFamily; 7] = [
        CheckFamily::Window,
        CheckFamily::Overlap,
        CheckFamily::Assignment,
        CheckFamily::GainLinkage,
        CheckFamily::SocChain,
        CheckFamily::SocBounds,
        CheckFamily::FinalSoc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckFamily::Window => "window",
            CheckFamily::Overlap => "overlap",
            CheckFamily::Assignment => "assignment",
            CheckFamily::GainLinkage => "gain-linkage",
            CheckFamily::SocChain => "soc-chain",
            CheckFamily::SocBounds => "soc-bounds",
            CheckFamily::FinalSoc => "final-soc",
        }
    }
}

impl fmt::Display for CheckFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub family: CheckFamily,
    /// 1-based visit numbers.
    pub visits: Vec<usize>,
    /// 1-based bus number, for per-bus checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bus: Option<usize>,
    pub residual: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub tolerance: f64,
    pub entries: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<CheckFamily, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.family).or_insert(0) += 1;
        }
        out
    }

    pub fn worst_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn families(&self) -> Vec<CheckFamily> {
        self.counts().into_keys().collect()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            clean: bool,
            tolerance: f64,
            worst_residual: f64,
            counts: BTreeMap<CheckFamily, usize>,
            entries: &'a [Violation],
        }
        let doc = Doc {
            clean: self.is_clean(),
            tolerance: self.tolerance,
            worst_residual: self.worst_residual(),
            counts: self.counts(),
            entries: &self.entries,
        };
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if self.is_clean() {
            writeln!(out, "no violations (tol {:e})", self.tolerance).unwrap();
            return out;
        }
        writeln!(out, "{:<13} {:<10} {:>14}  message", "family", "visits", "residual").unwrap();
        for e in &self.entries {
            let visits = e.visits.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            let visits = match e.bus {
                Some(b) if visits.is_empty() => format!("bus {b}"),
                _ => visits,
            };
            writeln!(out, "{:<13} {:<10} {:>14.6e}  {}", e.family.as_str(), visits, e.residual, e.message)
                .unwrap();
        }
        for (family, n) in self.counts() {
            writeln!(out, "{family}: {n}").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub tol: f64,
    pub final_charge: FinalChargeMode,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            final_charge: FinalChargeMode::OnArrival,
        }
    }
}

pub fn validate_schedule(
    scenario: &Scenario,
    schedule: &Schedule,
    tol: f64,
) -> Result<ViolationReport, ValidationError> {
    validate_schedule_with(
        scenario,
        schedule,
        &ValidationOptions {
            tol,
            ..ValidationOptions::default()
        },
    )
}

pub(crate) fn check_dimensions(scenario: &Scenario, schedule: &Schedule) -> Result<(), ValidationError> {
    let n = scenario.visit_count();
    let nq = scenario.queue_count();
    if schedule.visits.len() != n {
        return Err(ValidationError::Dimension(format!(
            "{} visit plans for {n} visits",
            schedule.visits.len()
        )));
    }
    for (k, p) in schedule.visits.iter().enumerate() {
        if p.assignment.len() != nq || p.gain_s.len() != nq {
            return Err(ValidationError::Dimension(format!(
                "visit {} has {} assignment and {} gain entries for {nq} queues",
                k + 1,
                p.assignment.len(),
                p.gain_s.len()
            )));
        }
        if p.queue.get() >= nq {
            return Err(ValidationError::Dimension(format!(
                "visit {} is on queue {} of {nq}",
                k + 1,
                p.queue.number()
            )));
        }
        let finite = [p.start_s, p.end_s, p.duration_s, p.arrival_soc_kwh]
            .iter()
            .chain(&p.assignment)
            .chain(&p.gain_s)
            .all(|x| x.is_finite());
        if !finite {
            return Err(ValidationError::Dimension(format!(
                "visit {} has non-finite values",
                k + 1
            )));
        }
    }
    Ok(())
}

pub fn validate_schedule_with(
    scenario: &Scenario,
    schedule: &Schedule,
    options: &ValidationOptions,
) -> Result<ViolationReport, ValidationError> {
    check_dimensions(scenario, schedule)?;
    let tol = options.tol;
    let queues = scenario.queues();
    let horizon = scenario.horizon_s();
    let mut entries = Vec::new();
    let mut flag = |family, visits: Vec<usize>, bus: Option<usize>, residual: f64, message: String| {
        if residual > tol {
            entries.push(Violation {
                family,
                visits,
                bus,
                residual,
                message,
            });
        }
    };

    for i in scenario.visit_ids() {
        let v = scenario.visit(i);
        let p = schedule.plan(i);
        let n = vec![i.number()];
        flag(CheckFamily::Window, n.clone(), None, v.arrival_s - p.start_s, format!("starts at {} before arrival {}", p.start_s, v.arrival_s));
        flag(CheckFamily::Window, n.clone(), None, p.end_s - v.departure_s, format!("ends at {} after departure {}", p.end_s, v.departure_s));
        flag(CheckFamily::Window, n.clone(), None, (p.end_s - p.start_s - p.duration_s).abs(), format!("end {} differs from start {} plus duration {}", p.end_s, p.start_s, p.duration_s));
        flag(CheckFamily::Window, n.clone(), None, -p.duration_s, format!("negative duration {}", p.duration_s));
        flag(CheckFamily::Window, n.clone(), None, p.start_s + p.duration_s - horizon, format!("runs past the horizon {horizon}"));
        flag(CheckFamily::Window, n, None, -p.start_s, format!("starts before time zero at {}", p.start_s));
    }

    let ids: Vec<_> = scenario.visit_ids().collect();
    for (k, &i) in ids.iter().enumerate() {
        for &j in &ids[k + 1..] {
            let (pi, pj) = (schedule.plan(i), schedule.plan(j));
            if pi.queue != pj.queue {
                continue;
            }
            let clash = (pi.end_s - pj.start_s).min(pj.end_s - pi.start_s);
            flag(
                CheckFamily::Overlap,
                vec![i.number(), j.number()],
                None,
                clash,
                format!(
                    "share queue {} over [{}, {}) and [{}, {})",
                    pi.queue, pi.start_s, pi.end_s, pj.start_s, pj.end_s
                ),
            );
        }
    }

    for i in scenario.visit_ids() {
        let p = schedule.plan(i);
        let n = vec![i.number()];
        let total: f64 = p.assignment.iter().sum();
        flag(CheckFamily::Assignment, n.clone(), None, (total - 1.0).abs(), format!("assignments sum to {total}"));
        let index: f64 = p.assignment.iter().enumerate().map(|(q, w)| (q + 1) as f64 * w).sum();
        flag(CheckFamily::Assignment, n.clone(), None, (p.queue.number() as f64 - index).abs(), format!("queue {} but weighted assignment {index}", p.queue));
        for (q, &w) in p.assignment.iter().enumerate() {
            flag(CheckFamily::Assignment, n.clone(), None, (w - w.round()).abs().max(-w).max(w - 1.0), format!("assignment to queue {} is {w}", q + 1));
        }
        for (q, (&g, &w)) in p.gain_s.iter().zip(&p.assignment).enumerate() {
            flag(CheckFamily::GainLinkage, n.clone(), None, (g - p.duration_s * w).abs(), format!("gain on queue {} is {g}, expected {}", q + 1, p.duration_s * w));
        }
    }

    let m = scenario.mappings();
    for b in scenario.bus_ids() {
        let bus = scenario.bus(b);
        let first = m.first(b);
        let eta0 = schedule.plan(first).arrival_soc_kwh;
        flag(
            CheckFamily::SocChain,
            vec![first.number()],
            Some(b.number()),
            (eta0 - bus.initial_kwh()).abs(),
            format!("arrival charge {eta0} differs from initial charge {}", bus.initial_kwh()),
        );
        for i in m.chain(b) {
            let p = schedule.plan(i);
            let v = scenario.visit(i);
            let eta = p.arrival_soc_kwh;
            let gained = p.energy_kwh(queues);
            let n = vec![i.number()];
            if let Some(next) = m.next(i) {
                let expected = eta + gained - v.route_discharge_kwh;
                let got = schedule.plan(next).arrival_soc_kwh;
                flag(
                    CheckFamily::SocChain,
                    vec![i.number(), next.number()],
                    Some(b.number()),
                    (got - expected).abs(),
                    format!("next arrival charge {got}, chain gives {expected}"),
                );
            }
            flag(CheckFamily::SocBounds, n.clone(), Some(b.number()), bus.min_kwh() - eta, format!("arrives with {eta} below the floor {}", bus.min_kwh()));
            flag(CheckFamily::SocBounds, n.clone(), Some(b.number()), eta - bus.capacity_kwh, format!("arrives with {eta} above capacity {}", bus.capacity_kwh));
            flag(CheckFamily::SocBounds, n.clone(), Some(b.number()), eta + gained - bus.capacity_kwh, format!("charges to {} above capacity {}", eta + gained, bus.capacity_kwh));
            flag(
                CheckFamily::SocBounds,
                n,
                Some(b.number()),
                bus.min_kwh() + v.route_discharge_kwh - eta - gained,
                format!(
                    "leaves with {} but the route needs {} above the floor {}",
                    eta + gained,
                    v.route_discharge_kwh,
                    bus.min_kwh()
                ),
            );
        }
        let last = m.last(b);
        let p = schedule.plan(last);
        let end = match options.final_charge {
            FinalChargeMode::OnArrival => p.arrival_soc_kwh,
            FinalChargeMode::AfterCharge => {
                p.arrival_soc_kwh + p.energy_kwh(queues) - scenario.visit(last).route_discharge_kwh
            }
        };
        flag(
            CheckFamily::FinalSoc,
            vec![last.number()],
            Some(b.number()),
            bus.final_kwh() - end,
            format!("ends the day with {end} below {}", bus.final_kwh()),
        );
    }

    Ok(ViolationReport {
        tolerance: tol,
        entries,
    })
}

/// Energy in kWh delivered by a session of `duration_s` at `rate_kw`.
pub(crate) fn session_energy(rate_kw: f64, duration_s: f64) -> f64 {
    rate_kw * duration_s / SECONDS_PER_HOUR
}
