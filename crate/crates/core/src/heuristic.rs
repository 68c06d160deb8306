//! Threshold charging heuristic with fast and slow charger classes.
//!
//! Each visit is decided once, at its arrival, from its arrival charge
//! fraction `f`:
//!
//! | band                    | chargers tried |
//! |-------------------------|----------------|
//! | `f <= low`              | fast, slow     |
//! | `low < f <= medium`     | slow, fast     |
//! | `medium < f <= high`    | slow           |
//! | `f > high`              | none           |
//!
//! A bus that gets a charger keeps it from arrival until departure or until
//! it holds `high` of its capacity. Visits without a charger wait on the first
//! idle queue with zero duration.

use serde::Deserialize;
use thiserror::Error;

use crate::scenario::{QueueBank, QueueClass, QueueId, Scenario, SECONDS_PER_HOUR};
use crate::schedule::{Decision, Schedule, ScheduleStatus};
use crate::validator::{validate_schedule, DEFAULT_TOL};

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("invalid threshold policy: {0}")]
    Policy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdPolicy {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            low: 0.85,
            medium: 0.90,
            high: 0.95,
        }
    }
}

impl ThresholdPolicy {
    pub fn new(low: f64, medium: f64, high: f64) -> Result<Self, HeuristicError> {
        let p = Self { low, medium, high };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), HeuristicError> {
        if 0.0 < self.low && self.low < self.medium && self.medium < self.high && self.high <= 1.0 {
            Ok(())
        } else {
            Err(HeuristicError::Policy(format!(
                "need 0 < low < medium < high <= 1, got {} {} {}",
                self.low, self.medium, self.high
            )))
        }
    }

    pub fn band(&self, f: f64) -> Band {
        if f <= self.low {
            Band::Low
        } else if f <= self.medium {
            Band::Medium
        } else if f <= self.high {
            Band::High
        } else {
            Band::Full
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    Medium,
    High,
    Full,
}

impl Band {
    /// Charger classes in order of preference.
    pub fn preferred_classes(self) -> &'static [QueueClass] {
        match self {
            Band::Low => &[QueueClass::Fast, QueueClass::Slow],
            Band::Medium => &[QueueClass::Slow, QueueClass::Fast],
            Band::High => &[QueueClass::Slow],
            Band::Full => &[],
        }
    }
}

/// Half-open booked intervals per queue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bookings {
    by_queue: Vec<Vec<(f64, f64)>>,
}

impl Bookings {
    pub fn new(queue_count: usize) -> Self {
        Self {
            by_queue: vec![Vec::new(); queue_count],
        }
    }

    pub fn book(&mut self, q: QueueId, start_s: f64, end_s: f64) {
        self.by_queue[q.get()].push((start_s, end_s));
    }

    pub fn is_free(&self, q: QueueId, t: f64) -> bool {
        !self.by_queue[q.get()].iter().any(|&(u, d)| u <= t && t < d)
    }
}

/// Queues of `class` with no booking covering `t`, ascending.
pub fn charger_availability(bookings: &Bookings, queues: &QueueBank, t: f64, class: QueueClass) -> Vec<QueueId> {
    queues
        .of_class(class)
        .into_iter()
        .filter(|&q| bookings.is_free(q, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QinOutcome {
    /// Arrival charges follow the unclamped chain; status is `Violating` when
    /// the validator finds anything.
    pub schedule: Schedule,
    /// Band of each visit, by visit id.
    pub bands: Vec<Band>,
    /// Arrival charge per visit with the battery floored at zero.
    pub clamped_arrival_soc_kwh: Vec<f64>,
    /// Per bus, the route energy the battery could not supply once empty.
    pub unmet_energy_kwh: Vec<f64>,
}

pub fn qin_modified(scenario: &Scenario, policy: &ThresholdPolicy) -> Result<QinOutcome, HeuristicError> {
    policy.check()?;
    let queues = scenario.queues();
    let m = scenario.mappings();
    let n = scenario.visit_count();
    let idle = queues.of_class(QueueClass::Idle)[0];
    let mut bookings = Bookings::new(queues.len());
    let mut soc: Vec<f64> = scenario.bus_ids().map(|b| scenario.bus(b).initial_kwh()).collect();
    let mut decisions = vec![None; n];
    let mut bands = vec![Band::Full; n];

    for i in scenario.visits_by_arrival() {
        let v = scenario.visit(i);
        let bus = scenario.bus_of(i);
        let b = m.bus_of(i).get();
        let eta = soc[b];
        let band = policy.band(eta / bus.capacity_kwh);
        bands[i.get()] = band;
        let charger = band
            .preferred_classes()
            .iter()
            .find_map(|&class| charger_availability(&bookings, queues, v.arrival_s, class).first().copied());
        let decision = match charger {
            Some(q) => {
                let rate = queues.rate_kw(q);
                let to_cap = (policy.high * bus.capacity_kwh - eta) / rate * SECONDS_PER_HOUR;
                let duration_s = (v.departure_s - v.arrival_s).min(to_cap).max(0.0);
                bookings.book(q, v.arrival_s, v.arrival_s + duration_s);
                soc[b] = eta + rate * duration_s / SECONDS_PER_HOUR;
                Decision {
                    queue: q,
                    start_s: v.arrival_s,
                    duration_s,
                }
            }
            None => Decision {
                queue: idle,
                start_s: v.arrival_s,
                duration_s: 0.0,
            },
        };
        soc[b] -= v.route_discharge_kwh;
        decisions[i.get()] = Some(decision);
    }

    let decisions: Vec<Decision> = decisions.into_iter().map(|d| d.expect("every visit decided")).collect();
    let mut schedule = Schedule::from_decisions(scenario, &decisions, ScheduleStatus::Feasible);
    let report = validate_schedule(scenario, &schedule, DEFAULT_TOL).expect("dimensions match by construction");
    if !report.is_clean() {
        schedule.status = ScheduleStatus::Violating;
    }

    let mut clamped = vec![0.0; n];
    let mut unmet = vec![0.0; scenario.bus_count()];
    for bus_id in scenario.bus_ids() {
        let mut level = scenario.bus(bus_id).initial_kwh().max(0.0);
        for i in m.chain(bus_id) {
            clamped[i.get()] = level;
            let after = level + schedule.plan(i).energy_kwh(queues) - scenario.visit(i).route_discharge_kwh;
            if after < 0.0 {
                unmet[bus_id.get()] -= after;
            }
            level = after.max(0.0);
        }
    }

    Ok(QinOutcome {
        schedule,
        bands,
        clamped_arrival_soc_kwh: clamped,
        unmet_energy_kwh: unmet,
    })
}
