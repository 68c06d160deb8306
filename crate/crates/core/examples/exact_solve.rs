// Solve a small instance exactly on a 5 minute grid.

use bebsched::scenario::{generate_scenario, GeneratorParams};
use bebsched::solver::{solve_exact, SearchLimits};
use bebsched::validator::{validate_schedule, DEFAULT_TOL};

pub fn run_example() -> anyhow::Result<()> {
    let params = GeneratorParams {
        buses: 2,
        visits_per_bus: 3,
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, 4)?;
    let out = solve_exact(&scenario, &SearchLimits::default())?;
    let schedule = out.schedule;
    println!("{} after {} nodes, objective {}", schedule.status, out.nodes, schedule.objective);

    let queues = scenario.queues();
    for (i, plan) in scenario.visit_ids().zip(&schedule.visits) {
        println!(
            "visit {i}: queue {} ({:?}) from {:.2} h for {:>5.0} s, arrives with {:.1} kWh, gains {:.1} kWh",
            plan.queue,
            queues.class(plan.queue),
            plan.start_s / 3600.0,
            plan.duration_s,
            plan.arrival_soc_kwh,
            plan.energy_kwh(queues),
        );
    }
    if schedule.has_plan() {
        anyhow::ensure!(validate_schedule(&scenario, &schedule, DEFAULT_TOL)?.is_clean());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
