#![allow(dead_code)]

use bebsched::scenario::{Bus, BusId, GeneratorParams, QueueBank, QueueId, Scenario, Visit, VisitId};

/// Brute-force optimum over the same grid as the exact solver: durations and
/// start times are whole multiples of `step` seconds. Written against the raw
/// scenario data only.
pub fn brute_force_optimum(s: &Scenario, step: f64) -> Option<f64> {
    let n = s.visit_count();
    let q = s.queues();
    let nq = q.len();
    let per_visit: Vec<Vec<(usize, f64)>> = s
        .visits()
        .iter()
        .map(|v| {
            let mut opts = Vec::new();
            for k in 0..nq {
                let mut d = 0.0;
                while d <= v.departure_s - v.arrival_s + 1e-9 {
                    opts.push((k, d));
                    d += step;
                }
            }
            opts
        })
        .collect();

    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    loop {
        let choice: Vec<(usize, f64)> = (0..n).map(|i| per_visit[i][pick[i]]).collect();
        let cost: f64 = choice
            .iter()
            .map(|&(k, d)| q.assign_cost(QueueId::new(k)) + d * q.use_cost(QueueId::new(k)))
            .sum();
        if best.is_none_or(|b| cost < b) && soc_ok(s, &choice) && starts_exist(s, &choice, step) {
            best = Some(cost);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            pick[k] += 1;
            if pick[k] < per_visit[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

fn soc_ok(s: &Scenario, choice: &[(usize, f64)]) -> bool {
    let tol = 1e-9;
    for bus in s.buses() {
        let mut visits: Vec<&Visit> = s.visits().iter().filter(|v| v.bus == bus.id).collect();
        visits.sort_by(|a, b| a.arrival_s.total_cmp(&b.arrival_s));
        let cap = bus.capacity_kwh;
        let floor = bus.min_frac * cap;
        let mut eta = bus.initial_frac * cap;
        for (pos, v) in visits.iter().enumerate() {
            let (k, d) = choice[v.id.get()];
            let gain = d * s.queues().rate_kw(QueueId::new(k)) / 3600.0;
            if eta < floor - tol || eta + gain > cap + tol || eta + gain < floor + v.route_discharge_kwh - tol {
                return false;
            }
            if pos + 1 == visits.len() && eta < bus.final_frac * cap - tol {
                return false;
            }
            eta = eta + gain - v.route_discharge_kwh;
        }
    }
    true
}

fn starts_exist(s: &Scenario, choice: &[(usize, f64)], step: f64) -> bool {
    let n = choice.len();
    let options: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let v = &s.visits()[i];
            let d = choice[i].1;
            let mut out = Vec::new();
            let mut u = (v.arrival_s / step).ceil() * step;
            while u + d <= v.departure_s + 1e-9 && u + d <= s.horizon_s() + 1e-9 {
                out.push(u);
                u += step;
            }
            out
        })
        .collect();
    let mut starts = vec![0.0; n];
    place(choice, &options, 0, &mut starts)
}

fn place(choice: &[(usize, f64)], options: &[Vec<f64>], i: usize, starts: &mut Vec<f64>) -> bool {
    if i == choice.len() {
        return true;
    }
    let (k, d) = choice[i];
    for &u in &options[i] {
        let clash = (0..i).any(|j| {
            let (kj, dj) = choice[j];
            // same queue needs one session to end before the other starts
            kj == k && !(starts[j] + dj <= u + 1e-9 || u + d <= starts[j] + 1e-9)
        });
        if clash {
            continue;
        }
        starts[i] = u;
        if place(choice, options, i + 1, starts) {
            return true;
        }
    }
    false
}

pub fn bus(k: usize, capacity: f64, alpha: f64, beta: f64, nu: f64) -> Bus {
    Bus {
        id: BusId::new(k),
        capacity_kwh: capacity,
        initial_frac: alpha,
        final_frac: beta,
        min_frac: nu,
        discharge_kw: 30.0,
    }
}

/// Times in hours.
pub fn visit(k: usize, b: usize, arrive_h: f64, depart_h: f64, delta_kwh: f64) -> Visit {
    Visit {
        id: VisitId::new(k),
        bus: BusId::new(b),
        arrival_s: arrive_h * 3600.0,
        departure_s: depart_h * 3600.0,
        route_discharge_kwh: delta_kwh,
    }
}

pub fn scenario(buses: Vec<Bus>, visits: Vec<Visit>, idle: usize, rates: &[f64]) -> Scenario {
    let q = QueueBank::with_fewest_charger_costs(idle, rates).unwrap();
    Scenario::new(86_400.0, buses, visits, q).unwrap()
}

/// Small random instances: at most 2 buses, 4 visits and 3 queues.
pub fn small_params(seed: u64) -> GeneratorParams {
    let buses = 1 + (seed % 2) as usize;
    let visits_per_bus = 1 + ((seed / 2) % 2) as usize;
    let rates = match seed % 3 {
        0 => vec![100.0, 400.0],
        1 => vec![100.0, 100.0],
        _ => vec![400.0],
    };
    GeneratorParams {
        buses,
        visits_per_bus,
        idle_count: Some(1),
        charger_rates_kw: rates,
        ..GeneratorParams::default()
    }
}
