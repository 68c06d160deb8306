use crate::metrics::TimeSeries;
use crate::scenario::{BusId, Scenario};
use crate::schedule::Schedule;

use super::{check_dimensions, session_energy, ValidationError};

/// Piecewise-linear charge of one bus over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    pub bus: BusId,
    /// `(t_s, kWh)` breakpoints, time-sorted.
    pub points: Vec<(f64, f64)>,
}

impl SocTrajectory {
    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        let k = pts.partition_point(|p| p.0 <= t);
        if k == 0 {
            return pts[0].1;
        }
        if k == pts.len() {
            return pts[k - 1].1;
        }
        let (t0, y0) = pts[k - 1];
        let (t1, y1) = pts[k];
        if t1 == t0 {
            y1
        } else {
            y0 + (y1 - y0) * (t - t0) / (t1 - t0)
        }
    }

    pub fn min_kwh(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn final_kwh(&self) -> f64 {
        self.points.last().map(|p| p.1).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocSimulation {
    pub trajectories: Vec<SocTrajectory>,
    /// One sampled series per bus, in kWh.
    pub series: Vec<TimeSeries>,
}

/// Simulates each bus from its initial charge: flat while waiting, a ramp at
/// the queue rate while charging, and a linear ramp down over each route.
/// The arrival charges stored in the schedule are not read.
pub fn simulate_soc(scenario: &Scenario, schedule: &Schedule, dt: f64) -> Result<SocSimulation, ValidationError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ValidationError::Dimension(format!("sample step must be positive, got {dt}")));
    }
    check_dimensions(scenario, schedule)?;
    let horizon = scenario.horizon_s();
    let queues = scenario.queues();
    let m = scenario.mappings();
    let mut trajectories = Vec::with_capacity(scenario.bus_count());
    for b in scenario.bus_ids() {
        let mut soc = scenario.bus(b).initial_kwh();
        let mut points = vec![(0.0, soc)];
        let mut push = |t: f64, y: f64| {
            let last = points.last().unwrap().0;
            points.push((t.max(last), y));
        };
        for i in m.chain(b) {
            let v = scenario.visit(i);
            let p = schedule.plan(i);
            push(v.arrival_s, soc);
            push(p.start_s, soc);
            soc += session_energy(queues.rate_kw(p.queue), p.end_s - p.start_s);
            push(p.end_s, soc);
            push(v.departure_s, soc);
            soc -= v.route_discharge_kwh;
            match m.next(i) {
                Some(next) => push(scenario.visit(next).arrival_s, soc),
                None => push(horizon, soc),
            }
        }
        if points.last().unwrap().0 < horizon {
            points.push((horizon, soc));
        }
        trajectories.push(SocTrajectory { bus: b, points });
    }
    let series = trajectories
        .iter()
        .map(|tr| TimeSeries::sample(horizon, dt, "kWh", |t| tr.value_at(t)))
        .collect();
    Ok(SocSimulation {
        trajectories,
        series,
    })
}
