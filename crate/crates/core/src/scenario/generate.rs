use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    compute_route_discharge, Bus, BusId, ChargerSpec, QueueBank, Scenario, ScenarioError, Visit,
    VisitId,
};

/// How queue costs are populated for generated instances.
#[derive(Debug, Clone, PartialEq)]
pub enum CostShaping {
    /// `m_q = 1000 q` on chargers, usage cost equal to the charger rate.
    FewestChargers,
    /// The same assignment and per-second usage cost on every charger.
    Uniform { assign_cost: f64, use_cost: f64 },
}

/// Parameters for synthetic instances. Durations are in seconds and are drawn
/// uniformly in whole multiples of `time_quantum_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub buses: usize,
    pub visits_per_bus: usize,
    pub horizon_s: f64,
    pub dwell_s: (f64, f64),
    pub route_s: (f64, f64),
    pub time_quantum_s: f64,
    pub capacity_kwh: f64,
    pub initial_frac: f64,
    pub final_frac: f64,
    pub min_frac: f64,
    pub discharge_kw: f64,
    /// Defaults to one idle queue per bus.
    pub idle_count: Option<usize>,
    pub charger_rates_kw: Vec<f64>,
    pub costs: CostShaping,
}

impl Default for GeneratorParams {
    /// The desk-scale instance: 4 buses with 3 visits each over 24 h,
    /// two 100 kW chargers and one 400 kW charger.
    fn default() -> Self {
        Self {
            buses: 4,
            visits_per_bus: 3,
            horizon_s: 24.0 * 3600.0,
            dwell_s: (1200.0, 3600.0),
            route_s: (3600.0, 3.0 * 3600.0),
            time_quantum_s: 300.0,
            capacity_kwh: 400.0,
            initial_frac: 0.90,
            final_frac: 0.70,
            min_frac: 0.25,
            discharge_kw: 30.0,
            idle_count: None,
            charger_rates_kw: vec![100.0, 100.0, 400.0],
            costs: CostShaping::FewestChargers,
        }
    }
}

fn quanta(range: (f64, f64), quantum: f64, what: &str) -> Result<(u64, u64), ScenarioError> {
    let (lo, hi) = range;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(ScenarioError::Argument(format!(
            "{what} range [{lo}, {hi}] is not a valid interval"
        )));
    }
    let lo_q = (lo / quantum).ceil() as u64;
    let hi_q = (hi / quantum).floor() as u64;
    if lo_q > hi_q {
        return Err(ScenarioError::Argument(format!(
            "{what} range [{lo}, {hi}] contains no multiple of {quantum} s"
        )));
    }
    Ok((lo_q, hi_q))
}

/// Deterministic synthetic instance for a given seed.
///
/// Each bus alternates dwell windows at the station with routes. The route
/// after a visit discharges `zeta * duration`; the last visit of a bus has no
/// following route. Visit ids are assigned in arrival order.
pub fn generate_scenario(params: &GeneratorParams, seed: u64) -> Result<Scenario, ScenarioError> {
    if params.buses == 0 {
        return Err(ScenarioError::Empty("zero buses requested".into()));
    }
    if params.visits_per_bus == 0 {
        return Err(ScenarioError::Empty("zero visits per bus requested".into()));
    }
    let quantum = params.time_quantum_s;
    if !(quantum > 0.0 && quantum.is_finite()) {
        return Err(ScenarioError::Argument("time quantum must be positive".into()));
    }
    let horizon_q = (params.horizon_s / quantum).floor() as u64;
    let dwell = quanta(params.dwell_s, quantum, "dwell")?;
    let route = quanta(params.route_s, quantum, "route")?;
    let n = params.visits_per_bus as u64;
    let min_total = n * dwell.0 + (n - 1) * route.0;
    if min_total > horizon_q {
        return Err(ScenarioError::Generation(format!(
            "{} visits per bus need at least {} s but the horizon is {} s",
            params.visits_per_bus,
            min_total as f64 * quantum,
            params.horizon_s
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: Vec<(u64, usize, u64, u64, f64)> = Vec::new();
    for b in 0..params.buses {
        let mut dwells = Vec::new();
        let mut routes = Vec::new();
        let mut fitted = false;
        for _ in 0..64 {
            dwells = (0..n).map(|_| rng.gen_range(dwell.0..=dwell.1)).collect::<Vec<_>>();
            routes = (0..n - 1).map(|_| rng.gen_range(route.0..=route.1)).collect::<Vec<_>>();
            if dwells.iter().sum::<u64>() + routes.iter().sum::<u64>() <= horizon_q {
                fitted = true;
                break;
            }
        }
        if !fitted {
            dwells = vec![dwell.0; n as usize];
            routes = vec![route.0; n as usize - 1];
        }
        let total: u64 = dwells.iter().sum::<u64>() + routes.iter().sum::<u64>();
        let mut t = rng.gen_range(0..=horizon_q - total);
        for (k, &dwell) in dwells.iter().enumerate() {
            let arrival = t;
            let departure = t + dwell;
            let discharge = match routes.get(k) {
                Some(&r) => compute_route_discharge(r as f64 * quantum, params.discharge_kw)?,
                None => 0.0,
            };
            raw.push((arrival, b, departure, k as u64, discharge));
            t = departure + routes.get(k).copied().unwrap_or(0);
        }
    }
    raw.sort_by_key(|&(arrival, bus, _, k, _)| (arrival, bus, k));

    let visits = raw
        .iter()
        .enumerate()
        .map(|(id, &(arrival, bus, departure, _, discharge))| Visit {
            id: VisitId::new(id),
            bus: BusId::new(bus),
            arrival_s: arrival as f64 * quantum,
            departure_s: departure as f64 * quantum,
            route_discharge_kwh: discharge,
        })
        .collect();
    let buses = (0..params.buses)
        .map(|b| Bus {
            id: BusId::new(b),
            capacity_kwh: params.capacity_kwh,
            initial_frac: params.initial_frac,
            final_frac: params.final_frac,
            min_frac: params.min_frac,
            discharge_kw: params.discharge_kw,
        })
        .collect();
    let idle = params.idle_count.unwrap_or(params.buses);
    let queues = match params.costs {
        CostShaping::FewestChargers => {
            QueueBank::with_fewest_charger_costs(idle, &params.charger_rates_kw)?
        }
        CostShaping::Uniform {
            assign_cost,
            use_cost,
        } => {
            let chargers: Vec<ChargerSpec> = params
                .charger_rates_kw
                .iter()
                .map(|&rate_kw| ChargerSpec {
                    rate_kw,
                    assign_cost,
                    use_cost,
                })
                .collect();
            QueueBank::new(idle, &chargers)?
        }
    };
    Scenario::new(params.horizon_s, buses, visits, queues)
}
