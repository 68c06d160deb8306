// How small can the time big-M get before it cuts off good schedules?
//
// One bus visits the station at 1 h and again at 20 h. Whenever visit 2
// is not ordered before visit 1, its ordering row is switched off by M_time.
// That stays harmless only while M_time covers the gap between visit 2's
// end and visit 1's start.

use bebsched::milp::{big_m_values, build_beb_model, relaxed_time_row_min_slack, schedule_point, BigM, BuildOptions};
use bebsched::scenario::{Bus, BusId, QueueBank, Scenario, Visit, VisitId};
use bebsched::solver::{solve_exact_small, SearchLimits};

pub fn two_visit_day() -> anyhow::Result<Scenario> {
    let h = 3600.0;
    let bus = Bus {
        id: BusId::new(0),
        capacity_kwh: 400.0,
        initial_frac: 0.9,
        final_frac: 0.7,
        min_frac: 0.25,
        discharge_kw: 30.0,
    };
    let visit = |k: usize, a: f64, t: f64, delta: f64| Visit {
        id: VisitId::new(k),
        bus: BusId::new(0),
        arrival_s: a * h,
        departure_s: t * h,
        route_discharge_kwh: delta,
    };
    let queues = QueueBank::with_fewest_charger_costs(1, &[100.0, 400.0])?;
    Ok(Scenario::new(
        24.0 * h,
        vec![bus],
        vec![visit(0, 1.0, 2.0, 100.0), visit(1, 20.0, 21.0, 0.0)],
        queues,
    )?)
}

pub fn run_example() -> anyhow::Result<()> {
    let scenario = two_visit_day()?;
    let schedule = solve_exact_small(&scenario, &SearchLimits::default())?;
    anyhow::ensure!(schedule.has_plan());
    let arrivals: Vec<f64> = scenario.visits().iter().map(|v| v.arrival_s).collect();
    let full = big_m_values(&scenario);

    for frac in [1.0, 0.9, 0.5, 0.25] {
        let m = BigM {
            time: full.time * frac,
            ..full
        };
        let options = BuildOptions {
            big_m: Some(m),
            ..BuildOptions::default()
        };
        let model = build_beb_model(&scenario, &options)?;
        let slack = relaxed_time_row_min_slack(&model, VisitId::new(1), VisitId::new(0)).unwrap_or(f64::NAN);
        let point = schedule_point(&model, &schedule, &arrivals)?;
        println!(
            "M_time = {:>6.0} s: worst relaxed slack {:>8.0}, known schedule {}",
            m.time,
            slack,
            if model.is_feasible(&point, 1e-6) { "accepted" } else { "rejected" }
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
