use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::scenario::{BusId, QueueClass, QueueId, Scenario, VisitId, SECONDS_PER_HOUR};
use crate::schedule::{Decision, Schedule, ScheduleStatus};

use super::{SearchLimits, SolverError};

/// Slack on charge comparisons (kWh) and grid snapping (s).
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub schedule: Schedule,
    pub nodes: u64,
    pub elapsed: Duration,
}

/// Optimal schedule over the time grid, or the best one found when a limit
/// runs out.
pub fn solve_exact_small(scenario: &Scenario, limits: &SearchLimits) -> Result<Schedule, SolverError> {
    solve_exact(scenario, limits).map(|o| o.schedule)
}

/// Depth-first search over visits in arrival order. Each visit either waits on
/// the first idle queue or takes a charger for a positive number of grid
/// steps; chargers are tried by ascending assignment cost. A queue's visits
/// must admit a non-overlapping order on the grid inside their windows.
/// Ties on the objective go to the smallest `(v, u, s)` vectors by visit id.
pub fn solve_exact(scenario: &Scenario, limits: &SearchLimits) -> Result<ExactOutcome, SolverError> {
    limits.check()?;
    let started = Instant::now();
    let search = Search::new(scenario, limits, started);
    let root = search.root();
    if let Some(root) = root {
        if limits.parallel {
            let children = search.expand(0, &root);
            children.into_par_iter().for_each(|child| search.dfs(1, child));
        } else {
            search.dfs(0, root);
        }
    }
    let aborted = search.aborted.load(AtomicOrdering::Relaxed);
    let best = search.best.into_inner().expect("incumbent lock");
    let schedule = match (best, aborted) {
        (Some(mut inc), true) => {
            inc.schedule.status = ScheduleStatus::TimeLimit;
            inc.schedule
        }
        (None, true) => Schedule::empty(ScheduleStatus::TimeLimit),
        (Some(inc), false) => inc.schedule,
        (None, false) => Schedule::empty(ScheduleStatus::Infeasible),
    };
    Ok(ExactOutcome {
        schedule,
        nodes: search.nodes.load(AtomicOrdering::Relaxed),
        elapsed: started.elapsed(),
    })
}

#[derive(Clone)]
struct State {
    /// `(queue, duration)` per visit id.
    choice: Vec<Option<(QueueId, f64)>>,
    /// Charge of each bus on arrival at its next undecided visit.
    soc: Vec<f64>,
    /// Index into the bus chain of the next undecided visit.
    next: Vec<usize>,
    members: Vec<Vec<VisitId>>,
    cost: f64,
}

struct Incumbent {
    objective: f64,
    key: (Vec<usize>, Vec<f64>, Vec<f64>),
    schedule: Schedule,
}

struct Search<'a> {
    scenario: &'a Scenario,
    limits: SearchLimits,
    deadline: Instant,
    order: Vec<VisitId>,
    chains: Vec<Vec<VisitId>>,
    idle: QueueId,
    chargers: Vec<QueueId>,
    /// Largest charge (kWh) a visit can take on the grid.
    max_gain: Vec<f64>,
    cost_per_kwh: f64,
    min_assign: f64,
    nodes: AtomicU64,
    aborted: AtomicBool,
    best_objective: AtomicU64,
    best: Mutex<Option<Incumbent>>,
}

fn key_cmp(a: &(Vec<usize>, Vec<f64>, Vec<f64>), b: &(Vec<usize>, Vec<f64>, Vec<f64>)) -> Ordering {
    let floats = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    a.0.cmp(&b.0)
        .then_with(|| floats(&a.1, &b.1))
        .then_with(|| floats(&a.2, &b.2))
}

impl<'a> Search<'a> {
    fn new(scenario: &'a Scenario, limits: &SearchLimits, started: Instant) -> Self {
        let queues = scenario.queues();
        let m = scenario.mappings();
        let mut chargers: Vec<QueueId> = queues.ids().filter(|&q| !queues.is_idle(q)).collect();
        chargers.sort_by(|&x, &y| queues.assign_cost(x).total_cmp(&queues.assign_cost(y)).then(x.cmp(&y)));
        let idle = queues.of_class(QueueClass::Idle)[0];
        let rmax = chargers.iter().map(|&q| queues.rate_kw(q)).fold(0.0, f64::max);
        let step = limits.grid_step_s;
        let max_gain = scenario
            .visit_ids()
            .map(|i| {
                let v = scenario.visit(i);
                let bus = scenario.bus_of(i);
                let room = v.departure_s - grid_ceil(v.arrival_s, step);
                let s = (room / step + TOL).floor().max(0.0) * step;
                (s * rmax / SECONDS_PER_HOUR).min(bus.capacity_kwh - bus.min_kwh())
            })
            .collect();
        let cost_per_kwh = chargers
            .iter()
            .map(|&q| queues.use_cost(q) * SECONDS_PER_HOUR / queues.rate_kw(q))
            .fold(f64::INFINITY, f64::min);
        let min_assign = chargers
            .iter()
            .map(|&q| queues.assign_cost(q))
            .fold(f64::INFINITY, f64::min);
        let budget = Duration::from_secs_f64(limits.time_limit_s.min(1e9));
        Self {
            scenario,
            limits: *limits,
            deadline: started + budget,
            order: scenario.visits_by_arrival(),
            chains: scenario.bus_ids().map(|b| m.chain(b).collect()).collect(),
            idle,
            chargers,
            max_gain,
            cost_per_kwh,
            min_assign,
            nodes: AtomicU64::new(0),
            aborted: AtomicBool::new(false),
            best_objective: AtomicU64::new(f64::INFINITY.to_bits()),
            best: Mutex::new(None),
        }
    }

    fn root(&self) -> Option<State> {
        for b in self.scenario.bus_ids() {
            let bus = self.scenario.bus(b);
            let eta = bus.initial_kwh();
            if eta < bus.min_kwh() - TOL || eta > bus.capacity_kwh + TOL {
                return None;
            }
        }
        Some(State {
            choice: vec![None; self.scenario.visit_count()],
            soc: self.scenario.buses().iter().map(|b| b.initial_kwh()).collect(),
            next: vec![0; self.scenario.bus_count()],
            members: vec![Vec::new(); self.scenario.queue_count()],
            cost: 0.0,
        })
    }

    fn best(&self) -> f64 {
        f64::from_bits(self.best_objective.load(AtomicOrdering::Relaxed))
    }

    fn out_of_budget(&self) -> bool {
        if self.aborted.load(AtomicOrdering::Relaxed) {
            return true;
        }
        let n = self.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        let over = n > self.limits.max_nodes || (n.is_multiple_of(1024) && Instant::now() >= self.deadline);
        if over {
            self.aborted.store(true, AtomicOrdering::Relaxed);
        }
        over
    }

    fn dfs(&self, k: usize, state: State) {
        if self.out_of_budget() {
            return;
        }
        if k == self.order.len() {
            self.leaf(&state);
            return;
        }
        for child in self.expand(k, &state) {
            self.dfs(k + 1, child);
        }
    }

    /// Lower bound on the cost still needed by bus `b` from its state, or
    /// `None` when its remaining visits cannot meet the charge floor and the
    /// final charge even on the fastest charger.
    fn bus_bound(&self, b: BusId, eta: f64, from: usize) -> Option<f64> {
        let bus = self.scenario.bus(b);
        let chain = &self.chains[b.get()];
        let rest = &chain[from..];
        if rest.is_empty() {
            return Some(0.0);
        }
        let mut need = 0.0f64;
        let mut routes = 0.0;
        let mut reach = 0.0;
        for (t, &j) in rest.iter().enumerate() {
            if t + 1 == rest.len() {
                // final charge is measured on arrival
                let required = bus.final_kwh() + routes - eta;
                if required > reach + TOL {
                    return None;
                }
                need = need.max(required);
            }
            let delta = self.scenario.visit(j).route_discharge_kwh;
            reach += self.max_gain[j.get()];
            routes += delta;
            let required = bus.min_kwh() + routes - eta;
            if required > reach + TOL {
                return None;
            }
            need = need.max(required);
        }
        if need > TOL {
            Some(need * self.cost_per_kwh + self.min_assign)
        } else {
            Some(0.0)
        }
    }

    fn expand(&self, k: usize, state: &State) -> Vec<State> {
        let queues = self.scenario.queues();
        let m = self.scenario.mappings();
        let step = self.limits.grid_step_s;
        let i = self.order[k];
        let v = self.scenario.visit(i);
        let b = m.bus_of(i);
        let bus = self.scenario.bus(b);
        let eta = state.soc[b.get()];
        let is_last = m.next(i).is_none();
        if is_last && eta < bus.final_kwh() - TOL {
            return Vec::new();
        }

        let other_bound: f64 = self
            .scenario
            .bus_ids()
            .filter(|&o| o != b)
            .map(|o| self.bus_bound(o, state.soc[o.get()], state.next[o.get()]).unwrap_or(f64::INFINITY))
            .sum();
        let best = self.best();
        let slack = 1e-9 * best.abs().max(1.0);

        let mut out = Vec::new();
        let consider = |q: QueueId, s: f64, out: &mut Vec<State>| -> bool {
            // returns false once longer sessions on q cannot help
            let gain = s * queues.rate_kw(q) / SECONDS_PER_HOUR;
            if eta + gain > bus.capacity_kwh + TOL {
                return false;
            }
            if eta + gain < bus.min_kwh() + v.route_discharge_kwh - TOL {
                return true;
            }
            let after = eta + gain - v.route_discharge_kwh;
            let pos = state.next[b.get()] + 1;
            let Some(own) = self.bus_bound(b, after, pos) else {
                return true;
            };
            let cost = state.cost + queues.assign_cost(q) + s * queues.use_cost(q);
            if cost + own + other_bound > best + slack {
                return true;
            }
            if !queues.is_idle(q) {
                let mut members = state.members[q.get()].clone();
                members.push(i);
                let sized: Vec<(VisitId, f64)> = members
                    .iter()
                    .map(|&j| (j, if j == i { s } else { state.choice[j.get()].unwrap().1 }))
                    .collect();
                if !self.packable(&sized) {
                    return true;
                }
            }
            let mut child = state.clone();
            child.choice[i.get()] = Some((q, s));
            child.soc[b.get()] = after;
            child.next[b.get()] = pos;
            child.members[q.get()].push(i);
            child.cost = cost;
            out.push(child);
            true
        };

        consider(self.idle, 0.0, &mut out);
        let room = v.departure_s - grid_ceil(v.arrival_s, step);
        let max_steps = (room / step + TOL).floor().max(0.0) as u64;
        for &q in &self.chargers {
            for n in 1..=max_steps {
                if !consider(q, n as f64 * step, &mut out) {
                    break;
                }
            }
        }
        out
    }

    /// Whether the visits can share one queue: a subset DP over the earliest
    /// finishing time of each set of visits placed first.
    fn packable(&self, sized: &[(VisitId, f64)]) -> bool {
        let n = sized.len();
        let step = self.limits.grid_step_s;
        let full = (1usize << n) - 1;
        let mut finish = vec![f64::INFINITY; 1 << n];
        finish[0] = f64::NEG_INFINITY;
        for mask in 0..full {
            let f = finish[mask];
            if f == f64::INFINITY {
                continue;
            }
            for (k, &(j, s)) in sized.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let v = self.scenario.visit(j);
                let start = grid_ceil(v.arrival_s.max(f), step);
                let end = start + s;
                if end <= v.departure_s + TOL {
                    let next = mask | (1 << k);
                    finish[next] = finish[next].min(end);
                }
            }
        }
        finish[full] < f64::INFINITY
    }

    /// Lexicographically smallest starts (by visit id) for one queue.
    fn earliest_starts(&self, sized: &[(VisitId, f64)]) -> Option<Vec<f64>> {
        fn go(
            search: &Search<'_>,
            sized: &[(VisitId, f64)],
            used: &mut Vec<bool>,
            starts: &mut Vec<f64>,
            end: f64,
            best: &mut Option<Vec<f64>>,
        ) {
            if used.iter().all(|&u| u) {
                let better = match best {
                    None => true,
                    Some(b) => starts.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
                        == Some(Ordering::Less),
                };
                if better {
                    *best = Some(starts.clone());
                }
                return;
            }
            for k in 0..sized.len() {
                if used[k] {
                    continue;
                }
                let (j, s) = sized[k];
                let v = search.scenario.visit(j);
                let start = grid_ceil(v.arrival_s.max(end), search.limits.grid_step_s);
                if start + s > v.departure_s + TOL {
                    continue;
                }
                used[k] = true;
                let saved = starts[k];
                starts[k] = start;
                go(search, sized, used, starts, start + s, best);
                starts[k] = saved;
                used[k] = false;
            }
        }
        let mut best = None;
        let mut used = vec![false; sized.len()];
        let mut starts = vec![0.0; sized.len()];
        go(self, sized, &mut used, &mut starts, f64::NEG_INFINITY, &mut best);
        best
    }

    fn leaf(&self, state: &State) {
        let best = self.best();
        if state.cost > best + 1e-9 * best.abs().max(1.0) {
            return;
        }
        let n = self.scenario.visit_count();
        let mut decisions: Vec<Decision> = (0..n)
            .map(|k| {
                let (queue, duration_s) = state.choice[k].expect("leaf is complete");
                Decision {
                    queue,
                    start_s: self.scenario.visit(VisitId::new(k)).arrival_s,
                    duration_s,
                }
            })
            .collect();
        for q in &self.chargers {
            let mut members = state.members[q.get()].clone();
            if members.is_empty() {
                continue;
            }
            members.sort();
            let sized: Vec<(VisitId, f64)> = members.iter().map(|&j| (j, decisions[j.get()].duration_s)).collect();
            let Some(starts) = self.earliest_starts(&sized) else {
                return;
            };
            for (&j, u) in members.iter().zip(starts) {
                decisions[j.get()].start_s = u;
            }
        }
        let schedule = Schedule::from_decisions(self.scenario, &decisions, ScheduleStatus::Optimal);
        let key = (
            decisions.iter().map(|d| d.queue.number()).collect(),
            decisions.iter().map(|d| d.start_s).collect(),
            decisions.iter().map(|d| d.duration_s).collect(),
        );
        let objective = schedule.objective;
        let mut guard = self.best.lock().expect("incumbent lock");
        let replace = match guard.as_ref() {
            None => true,
            Some(inc) => match objective.total_cmp(&inc.objective) {
                Ordering::Less => true,
                Ordering::Equal => key_cmp(&key, &inc.key) == Ordering::Less,
                Ordering::Greater => false,
            },
        };
        if replace {
            self.best_objective.store(objective.to_bits(), AtomicOrdering::Relaxed);
            *guard = Some(Incumbent {
                objective,
                key,
                schedule,
            });
        }
    }
}

fn grid_ceil(x: f64, step: f64) -> f64 {
    ((x - TOL) / step).ceil() * step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Bus, QueueBank, Visit};

    fn bus(k: usize, alpha: f64, beta: f64) -> Bus {
        Bus {
            id: BusId::new(k),
            capacity_kwh: 100.0,
            initial_frac: alpha,
            final_frac: beta,
            min_frac: 0.2,
            discharge_kw: 30.0,
        }
    }

    fn visit(k: usize, b: usize, a: f64, t: f64, delta: f64) -> Visit {
        Visit {
            id: VisitId::new(k),
            bus: BusId::new(b),
            arrival_s: a,
            departure_s: t,
            route_discharge_kwh: delta,
        }
    }

    #[test]
    fn no_charge_needed_stays_idle() {
        let q = QueueBank::with_fewest_charger_costs(1, &[100.0]).unwrap();
        let s = Scenario::new(7200.0, vec![bus(0, 0.9, 0.7)], vec![visit(0, 0, 0.0, 3600.0, 0.0)], q).unwrap();
        let out = solve_exact_small(&s, &SearchLimits::default()).unwrap();
        assert_eq!(out.status, ScheduleStatus::Optimal);
        assert_eq!(out.objective, 0.0);
        assert_eq!(out.visits[0].queue, QueueId::new(0));
        assert_eq!(out.visits[0].duration_s, 0.0);
    }

    #[test]
    fn charges_exactly_the_route() {
        let q = QueueBank::with_fewest_charger_costs(1, &[120.0]).unwrap();
        let s = Scenario::new(
            86400.0,
            vec![bus(0, 0.7, 0.7)],
            vec![visit(0, 0, 0.0, 3600.0, 20.0), visit(1, 0, 7200.0, 9000.0, 0.0)],
            q,
        )
        .unwrap();
        let out = solve_exact_small(&s, &SearchLimits::default()).unwrap();
        assert_eq!(out.status, ScheduleStatus::Optimal);
        // 20 kWh at 120 kW is 600 s, two grid steps
        let total: f64 = out.visits.iter().map(|p| p.energy_kwh(s.queues())).sum();
        assert!((total - 20.0).abs() < 1e-9);
        assert_eq!(out.objective, 2000.0 + 600.0 * 120.0);
    }

    #[test]
    fn impossible_final_charge_is_infeasible() {
        let q = QueueBank::with_fewest_charger_costs(1, &[100.0]).unwrap();
        let s = Scenario::new(
            86400.0,
            vec![bus(0, 0.5, 0.5)],
            vec![visit(0, 0, 0.0, 300.0, 20.0), visit(1, 0, 7200.0, 9000.0, 0.0)],
            q,
        )
        .unwrap();
        let out = solve_exact_small(&s, &SearchLimits::default()).unwrap();
        assert_eq!(out.status, ScheduleStatus::Infeasible);
        assert!(!out.has_plan());
    }

    #[test]
    fn parallel_search_agrees() {
        use crate::scenario::{generate_scenario, GeneratorParams};
        let params = GeneratorParams {
            buses: 2,
            visits_per_bus: 2,
            ..GeneratorParams::default()
        };
        let mut feasible = 0;
        for seed in 0..12 {
            let s = generate_scenario(&params, seed).unwrap();
            let seq = solve_exact_small(&s, &SearchLimits::default()).unwrap();
            let par = solve_exact_small(
                &s,
                &SearchLimits {
                    parallel: true,
                    ..SearchLimits::default()
                },
            )
            .unwrap();
            assert_eq!(seq.status, par.status, "seed {seed}");
            assert_eq!(seq.visits, par.visits, "seed {seed}");
            if seq.has_plan() {
                feasible += 1;
                assert_eq!(seq.objective, par.objective, "seed {seed}");
            }
        }
        assert!(feasible > 0);
    }

    #[test]
    fn node_budget_reports_time_limit() {
        use crate::scenario::{generate_scenario, GeneratorParams};
        let s = generate_scenario(&GeneratorParams::default(), 1).unwrap();
        let out = solve_exact_small(
            &s,
            &SearchLimits {
                max_nodes: 10,
                ..SearchLimits::default()
            },
        )
        .unwrap();
        assert_eq!(out.status, ScheduleStatus::TimeLimit);
    }
}
