//! Problem instances: buses, station visits, the queue bank and the
//! visit-to-bus mappings used by every other module.
//!
//! All times are held in seconds, energies in kWh and powers in kW. Identifiers
//! are zero-based internally; files and variable names use one-based numbers.

mod generate;
mod io;

pub use generate::{generate_scenario, CostShaping, GeneratorParams};
pub use io::{load_scenario, parse_scenario, save_scenario, scenario_to_string};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(usize);

        impl $name {
            #[inline]
            pub const fn new(index: usize) -> Self {
                Self(index)
            }

            /// Zero-based index.
            #[inline]
            pub const fn get(self) -> usize {
                self.0
            }

            /// One-based number, as used in files and variable names.
            #[inline]
            pub const fn number(self) -> usize {
                self.0 + 1
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.number())
            }
        }
    };
}

index_newtype!(
    /// A bus of the fleet.
    BusId
);
index_newtype!(
    /// One arrival-to-departure window of a bus at the station.
    VisitId
);
index_newtype!(
    /// A charging position. The first `idle_count` queues have zero rate.
    QueueId
);

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("empty instance: {0}")]
    Empty(String),
    #[error("invalid instance at `{field}`: {message}")]
    InstanceInvalid { field: String, message: String },
    #[error("visits {first} and {second} of bus {bus} overlap in time")]
    OverlappingVisits {
        bus: BusId,
        first: VisitId,
        second: VisitId,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::InstanceInvalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Battery capacity (kWh).
    pub capacity_kwh: f64,
    /// Fraction of capacity held at the first arrival of the day.
    pub initial_frac: f64,
    /// Minimum fraction required at the end of the day.
    pub final_frac: f64,
    /// Minimum fraction allowed at any arrival.
    pub min_frac: f64,
    /// Average discharge rate while on route (kW).
    pub discharge_kw: f64,
}

impl Bus {
    pub fn initial_kwh(&self) -> f64 {
        self.initial_frac * self.capacity_kwh
    }

    pub fn final_kwh(&self) -> f64 {
        self.final_frac * self.capacity_kwh
    }

    pub fn min_kwh(&self) -> f64 {
        self.min_frac * self.capacity_kwh
    }

    fn check(&self, field: &str) -> Result<(), ScenarioError> {
        let finite = [
            ("capacity_kwh", self.capacity_kwh),
            ("initial_frac", self.initial_frac),
            ("final_frac", self.final_frac),
            ("min_frac", self.min_frac),
            ("discharge_kw", self.discharge_kw),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(invalid(format!("{field}.{name}"), "must be finite"));
            }
        }
        if self.capacity_kwh <= 0.0 {
            return Err(invalid(format!("{field}.capacity_kwh"), "must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_frac) {
            return Err(invalid(
                format!("{field}.min_frac"),
                format!("{} is outside [0, 1)", self.min_frac),
            ));
        }
        for (name, value) in [
            ("initial_frac", self.initial_frac),
            ("final_frac", self.final_frac),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(invalid(
                    format!("{field}.{name}"),
                    format!("{value} is outside [0, 1]"),
                ));
            }
        }
        if self.discharge_kw < 0.0 {
            return Err(invalid(format!("{field}.discharge_kw"), "must be non-negative"));
        }
        if self.initial_frac < self.final_frac {
            return Err(invalid(
                format!("{field}.initial_frac"),
                "initial charge must be at least the required final charge",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub id: VisitId,
    pub bus: BusId,
    /// Arrival at the station (s).
    pub arrival_s: f64,
    /// Latest departure from the station (s).
    pub departure_s: f64,
    /// Energy spent on the route that follows this visit (kWh).
    pub route_discharge_kwh: f64,
}

impl Visit {
    pub fn dwell_s(&self) -> f64 {
        self.departure_s - self.arrival_s
    }
}

/// Charger class used by the threshold heuristic and the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueClass {
    Idle,
    Slow,
    Fast,
}

impl fmt::Display for QueueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueueClass::Idle => "idle",
            QueueClass::Slow => "slow",
            QueueClass::Fast => "fast",
        })
    }
}

/// A charger as described in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargerSpec {
    pub rate_kw: f64,
    pub assign_cost: f64,
    /// Cost per second of use.
    pub use_cost: f64,
}

/// The ordered set of queues: `idle_count` zero-rate queues followed by the
/// chargers.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueBank {
    idle_count: usize,
    rates_kw: Vec<f64>,
    assign_cost: Vec<f64>,
    use_cost: Vec<f64>,
}

impl QueueBank {
    /// Idle queues get zero rate and zero cost.
    pub fn new(idle_count: usize, chargers: &[ChargerSpec]) -> Result<Self, ScenarioError> {
        if idle_count == 0 {
            return Err(invalid(
                "queues.idle_count",
                "at least one idle queue is required",
            ));
        }
        for (k, c) in chargers.iter().enumerate() {
            let field = format!("queues.chargers[{k}]");
            if !(c.rate_kw.is_finite() && c.rate_kw > 0.0) {
                return Err(invalid(format!("{field}.rate_kw"), "must be positive"));
            }
            if !(c.assign_cost.is_finite() && c.assign_cost >= 0.0) {
                return Err(invalid(format!("{field}.assign_cost"), "must be non-negative"));
            }
            if !(c.use_cost.is_finite() && c.use_cost >= 0.0) {
                return Err(invalid(format!("{field}.use_cost"), "must be non-negative"));
            }
        }
        let n = idle_count + chargers.len();
        let mut rates_kw = vec![0.0; n];
        let mut assign_cost = vec![0.0; n];
        let mut use_cost = vec![0.0; n];
        for (k, c) in chargers.iter().enumerate() {
            rates_kw[idle_count + k] = c.rate_kw;
            assign_cost[idle_count + k] = c.assign_cost;
            use_cost[idle_count + k] = c.use_cost;
        }
        Ok(Self {
            idle_count,
            rates_kw,
            assign_cost,
            use_cost,
        })
    }

    /// Charger-count cost shaping: assignment cost `1000 q` for charger
    /// queue number `q` and a per-second usage cost equal to the rate, so the
    /// usage term accumulates consumed energy.
    pub fn with_fewest_charger_costs(
        idle_count: usize,
        rates_kw: &[f64],
    ) -> Result<Self, ScenarioError> {
        let chargers: Vec<ChargerSpec> = rates_kw
            .iter()
            .enumerate()
            .map(|(k, &rate_kw)| ChargerSpec {
                rate_kw,
                assign_cost: 1000.0 * (idle_count + k + 1) as f64,
                use_cost: rate_kw,
            })
            .collect();
        Self::new(idle_count, &chargers)
    }

    /// Returns a copy with one more idle queue. Charger costs travel with the
    /// chargers, so only queue numbers shift.
    pub fn with_extra_idle_queue(&self) -> Self {
        let mut out = self.clone();
        out.idle_count += 1;
        out.rates_kw.insert(0, 0.0);
        out.assign_cost.insert(0, 0.0);
        out.use_cost.insert(0, 0.0);
        out
    }

    pub fn len(&self) -> usize {
        self.rates_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates_kw.is_empty()
    }

    pub fn idle_count(&self) -> usize {
        self.idle_count
    }

    pub fn charger_count(&self) -> usize {
        self.len() - self.idle_count
    }

    pub fn ids(&self) -> impl Iterator<Item = QueueId> + '_ {
        (0..self.len()).map(QueueId::new)
    }

    pub fn rate_kw(&self, q: QueueId) -> f64 {
        self.rates_kw[q.get()]
    }

    pub fn assign_cost(&self, q: QueueId) -> f64 {
        self.assign_cost[q.get()]
    }

    pub fn use_cost(&self, q: QueueId) -> f64 {
        self.use_cost[q.get()]
    }

    pub fn is_idle(&self, q: QueueId) -> bool {
        q.get() < self.idle_count
    }

    pub fn chargers(&self) -> Vec<ChargerSpec> {
        (self.idle_count..self.len())
            .map(|k| ChargerSpec {
                rate_kw: self.rates_kw[k],
                assign_cost: self.assign_cost[k],
                use_cost: self.use_cost[k],
            })
            .collect()
    }

    /// Chargers at the lowest charger rate are slow; anything faster is fast.
    /// With a single rate every charger is slow.
    pub fn class(&self, q: QueueId) -> QueueClass {
        if self.is_idle(q) {
            return QueueClass::Idle;
        }
        let slowest = self.rates_kw[self.idle_count..]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if self.rate_kw(q) > slowest {
            QueueClass::Fast
        } else {
            QueueClass::Slow
        }
    }

    /// Queues of a class in ascending id order.
    pub fn of_class(&self, class: QueueClass) -> Vec<QueueId> {
        self.ids().filter(|&q| self.class(q) == class).collect()
    }
}

/// Visit-to-bus mapping, next-visit mapping and per-bus first/last visits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitMappings {
    gamma: Vec<BusId>,
    next: Vec<Option<VisitId>>,
    prev: Vec<Option<VisitId>>,
    first: Vec<VisitId>,
    last: Vec<VisitId>,
}

impl VisitMappings {
    pub fn bus_of(&self, i: VisitId) -> BusId {
        self.gamma[i.get()]
    }

    /// Next visit of the same bus, `None` for the bus's last visit.
    pub fn next(&self, i: VisitId) -> Option<VisitId> {
        self.next[i.get()]
    }

    pub fn prev(&self, i: VisitId) -> Option<VisitId> {
        self.prev[i.get()]
    }

    pub fn first(&self, b: BusId) -> VisitId {
        self.first[b.get()]
    }

    pub fn last(&self, b: BusId) -> VisitId {
        self.last[b.get()]
    }

    pub fn bus_count(&self) -> usize {
        self.first.len()
    }

    pub fn visit_count(&self) -> usize {
        self.gamma.len()
    }

    /// The bus's visits in arrival order.
    pub fn chain(&self, b: BusId) -> Chain<'_> {
        Chain {
            mappings: self,
            cursor: Some(self.first(b)),
        }
    }
}

pub struct Chain<'a> {
    mappings: &'a VisitMappings,
    cursor: Option<VisitId>,
}

impl Iterator for Chain<'_> {
    type Item = VisitId;

    fn next(&mut self) -> Option<VisitId> {
        let current = self.cursor?;
        self.cursor = self.mappings.next(current);
        Some(current)
    }
}

/// Builds the mappings from a visit list in any order. Visit ids must be the
/// dense range `0..n` and every bus in `0..=max bus` must own a visit. Visits
/// of one bus are ordered by arrival, ties broken by id.
pub fn build_visit_mappings(visits: &[Visit]) -> Result<VisitMappings, ScenarioError> {
    if visits.is_empty() {
        return Err(ScenarioError::Empty("no visits".into()));
    }
    let n = visits.len();
    let mut by_id: Vec<Option<&Visit>> = vec![None; n];
    for v in visits {
        let slot = by_id.get_mut(v.id.get()).ok_or_else(|| {
            invalid(
                format!("visits[{}].id", v.id.get()),
                format!("visit id {} exceeds visit count {n}", v.id.number()),
            )
        })?;
        if slot.is_some() {
            return Err(invalid(
                format!("visits[{}].id", v.id.get()),
                format!("duplicate visit id {}", v.id.number()),
            ));
        }
        *slot = Some(v);
    }
    let by_id: Vec<&Visit> = by_id.into_iter().map(|v| v.expect("dense ids")).collect();

    let bus_count = by_id.iter().map(|v| v.bus.get()).max().unwrap_or(0) + 1;
    let mut per_bus: Vec<Vec<&Visit>> = vec![Vec::new(); bus_count];
    for v in &by_id {
        per_bus[v.bus.get()].push(v);
    }

    let mut next = vec![None; n];
    let mut prev = vec![None; n];
    let mut first = Vec::with_capacity(bus_count);
    let mut last = Vec::with_capacity(bus_count);
    for (b, chain) in per_bus.iter_mut().enumerate() {
        if chain.is_empty() {
            return Err(invalid(
                format!("buses[{b}]"),
                format!("bus {} has no visits", b + 1),
            ));
        }
        chain.sort_by(|x, y| x.arrival_s.total_cmp(&y.arrival_s).then(x.id.cmp(&y.id)));
        for pair in chain.windows(2) {
            let (cur, nxt) = (pair[0], pair[1]);
            if cur.departure_s > nxt.arrival_s {
                return Err(ScenarioError::OverlappingVisits {
                    bus: BusId::new(b),
                    first: cur.id,
                    second: nxt.id,
                });
            }
            next[cur.id.get()] = Some(nxt.id);
            prev[nxt.id.get()] = Some(cur.id);
        }
        first.push(chain[0].id);
        last.push(chain[chain.len() - 1].id);
    }

    Ok(VisitMappings {
        gamma: by_id.iter().map(|v| v.bus).collect(),
        next,
        prev,
        first,
        last,
    })
}

/// Energy used on a route driven at a fixed discharge rate.
pub fn compute_route_discharge(route_duration_s: f64, zeta_kw: f64) -> Result<f64, ScenarioError> {
    if !(route_duration_s >= 0.0 && route_duration_s.is_finite()) {
        return Err(ScenarioError::Argument(format!(
            "route duration must be non-negative, got {route_duration_s}"
        )));
    }
    if !(zeta_kw >= 0.0 && zeta_kw.is_finite()) {
        return Err(ScenarioError::Argument(format!(
            "discharge rate must be non-negative, got {zeta_kw}"
        )));
    }
    Ok(zeta_kw * route_duration_s / SECONDS_PER_HOUR)
}

/// An immutable, validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    horizon_s: f64,
    buses: Vec<Bus>,
    visits: Vec<Visit>,
    queues: QueueBank,
    mappings: VisitMappings,
}

impl Scenario {
    /// Validates every instance invariant. Visits may be given in any order;
    /// they are stored indexed by id.
    pub fn new(
        horizon_s: f64,
        mut buses: Vec<Bus>,
        mut visits: Vec<Visit>,
        queues: QueueBank,
    ) -> Result<Self, ScenarioError> {
        if !(horizon_s.is_finite() && horizon_s > 0.0) {
            return Err(invalid("horizon_hours", "horizon must be positive"));
        }
        if buses.is_empty() {
            return Err(ScenarioError::Empty("no buses".into()));
        }
        if visits.is_empty() {
            return Err(ScenarioError::Empty("no visits".into()));
        }
        buses.sort_by_key(|b| b.id);
        for (k, bus) in buses.iter().enumerate() {
            if bus.id.get() != k {
                return Err(invalid(
                    format!("buses[{k}].id"),
                    "bus ids must be 1..=n without gaps or duplicates",
                ));
            }
            bus.check(&format!("buses[{k}]"))?;
        }
        visits.sort_by_key(|v| v.id);
        for (k, v) in visits.iter().enumerate() {
            let field = format!("visits[{k}]");
            if v.id.get() != k {
                return Err(invalid(
                    format!("{field}.id"),
                    "visit ids must be 1..=n without gaps or duplicates",
                ));
            }
            if v.bus.get() >= buses.len() {
                return Err(invalid(
                    format!("{field}.bus"),
                    format!("bus {} does not exist", v.bus.number()),
                ));
            }
            if !(v.arrival_s.is_finite() && v.departure_s.is_finite()) {
                return Err(invalid(field, "times must be finite"));
            }
            if v.arrival_s < 0.0 {
                return Err(invalid(format!("{field}.arrival_hours"), "must be non-negative"));
            }
            if v.departure_s < v.arrival_s {
                return Err(invalid(
                    format!("{field}.departure_hours"),
                    "departure precedes arrival",
                ));
            }
            if v.departure_s > horizon_s {
                return Err(invalid(
                    format!("{field}.departure_hours"),
                    "departure exceeds the horizon",
                ));
            }
            if !(v.route_discharge_kwh.is_finite() && v.route_discharge_kwh >= 0.0) {
                return Err(invalid(
                    format!("{field}.route_discharge_kwh"),
                    "must be non-negative",
                ));
            }
        }
        let mappings = build_visit_mappings(&visits)?;
        if mappings.bus_count() != buses.len() {
            let b = mappings.bus_count();
            return Err(invalid(
                format!("buses[{b}]"),
                format!("bus {} has no visits", b + 1),
            ));
        }
        Ok(Self {
            horizon_s,
            buses,
            visits,
            queues,
            mappings,
        })
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    /// Visits indexed by id.
    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    pub fn queues(&self) -> &QueueBank {
        &self.queues
    }

    pub fn mappings(&self) -> &VisitMappings {
        &self.mappings
    }

    pub fn bus(&self, b: BusId) -> &Bus {
        &self.buses[b.get()]
    }

    pub fn visit(&self, i: VisitId) -> &Visit {
        &self.visits[i.get()]
    }

    pub fn bus_of(&self, i: VisitId) -> &Bus {
        self.bus(self.mappings.bus_of(i))
    }

    pub fn visit_count(&self) -> usize {
        self.visits.len()
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn queue_count(&self) -> usize {
        self.queues.len()
    }

    pub fn visit_ids(&self) -> impl Iterator<Item = VisitId> {
        (0..self.visits.len()).map(VisitId::new)
    }

    pub fn bus_ids(&self) -> impl Iterator<Item = BusId> {
        (0..self.buses.len()).map(BusId::new)
    }

    /// All visits ordered by arrival, ties broken by id.
    pub fn visits_by_arrival(&self) -> Vec<VisitId> {
        let mut order: Vec<VisitId> = self.visit_ids().collect();
        order.sort_by(|&x, &y| {
            self.visit(x)
                .arrival_s
                .total_cmp(&self.visit(y).arrival_s)
                .then(x.cmp(&y))
        });
        order
    }

    /// Same instance with a different queue bank.
    pub fn with_queues(&self, queues: QueueBank) -> Self {
        Self {
            queues,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical file serialization.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(scenario_to_string(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visit(id: usize, bus: usize, a: f64, tau: f64) -> Visit {
        Visit {
            id: VisitId::new(id),
            bus: BusId::new(bus),
            arrival_s: a,
            departure_s: tau,
            route_discharge_kwh: 0.0,
        }
    }

    #[test]
    fn two_visit_chain() {
        let m = build_visit_mappings(&[visit(0, 0, 0.0, 50.0), visit(1, 0, 100.0, 150.0)]).unwrap();
        assert_eq!(m.next(VisitId::new(0)), Some(VisitId::new(1)));
        assert_eq!(m.next(VisitId::new(1)), None);
        assert_eq!(m.first(BusId::new(0)), VisitId::new(0));
        assert_eq!(m.last(BusId::new(0)), VisitId::new(1));
    }

    #[test]
    fn singleton_chain() {
        let m = build_visit_mappings(&[visit(0, 0, 10.0, 20.0)]).unwrap();
        assert_eq!(m.first(BusId::new(0)), m.last(BusId::new(0)));
        assert_eq!(m.next(VisitId::new(0)), None);
        assert_eq!(m.prev(VisitId::new(0)), None);
    }

    #[test]
    fn overlap_names_both_visits() {
        let err = build_visit_mappings(&[visit(0, 0, 0.0, 120.0), visit(1, 0, 100.0, 150.0)])
            .unwrap_err();
        match err {
            ScenarioError::OverlappingVisits { first, second, .. } => {
                assert_eq!((first.number(), second.number()), (1, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn same_bus_arrival_ties_break_by_id() {
        let m = build_visit_mappings(&[visit(1, 0, 0.0, 0.0), visit(0, 0, 0.0, 0.0)]).unwrap();
        assert_eq!(m.first(BusId::new(0)), VisitId::new(0));
        assert_eq!(m.next(VisitId::new(0)), Some(VisitId::new(1)));
    }

    #[test]
    fn route_discharge() {
        assert_eq!(compute_route_discharge(3600.0, 30.0).unwrap(), 30.0);
        assert_eq!(compute_route_discharge(0.0, 30.0).unwrap(), 0.0);
        assert_eq!(compute_route_discharge(1800.0, 30.0).unwrap(), 15.0);
        assert!(compute_route_discharge(-1.0, 30.0).is_err());
        assert!(compute_route_discharge(10.0, -30.0).is_err());
    }

    #[test]
    fn queue_classes() {
        let q = QueueBank::with_fewest_charger_costs(2, &[100.0, 100.0, 400.0]).unwrap();
        assert_eq!(q.len(), 5);
        assert_eq!(q.class(QueueId::new(0)), QueueClass::Idle);
        assert_eq!(q.class(QueueId::new(2)), QueueClass::Slow);
        assert_eq!(q.class(QueueId::new(4)), QueueClass::Fast);
        assert_eq!(q.assign_cost(QueueId::new(4)), 5000.0);
        assert_eq!(q.use_cost(QueueId::new(4)), 400.0);
        assert_eq!(q.of_class(QueueClass::Slow), vec![QueueId::new(2), QueueId::new(3)]);

        let single = QueueBank::with_fewest_charger_costs(1, &[50.0, 50.0]).unwrap();
        assert!(single.of_class(QueueClass::Fast).is_empty());
        assert!(QueueBank::new(0, &[]).is_err());
    }

    #[test]
    fn extra_idle_queue_keeps_charger_costs() {
        let q = QueueBank::with_fewest_charger_costs(1, &[100.0]).unwrap();
        let more = q.with_extra_idle_queue();
        assert_eq!(more.idle_count(), 2);
        assert_eq!(more.chargers(), q.chargers());
    }
}
