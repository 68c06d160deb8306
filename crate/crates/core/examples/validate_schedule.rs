// Break a good schedule on purpose and read the violation report.

use bebsched::scenario::{generate_scenario, GeneratorParams};
use bebsched::schedule::{Decision, Schedule, ScheduleStatus};
use bebsched::solver::{solve_exact_small, SearchLimits};
use bebsched::validator::{validate_schedule, CheckFamily, DEFAULT_TOL};

pub fn run_example() -> anyhow::Result<()> {
    let params = GeneratorParams {
        buses: 2,
        visits_per_bus: 2,
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, 5)?;
    let good = solve_exact_small(&scenario, &SearchLimits::default())?;
    anyhow::ensure!(good.has_plan());
    println!("{}", validate_schedule(&scenario, &good, DEFAULT_TOL)?.to_table());

    // Start the first visit an hour before the bus arrives.
    let mut decisions = good.decisions();
    let first = decisions[0];
    decisions[0] = Decision {
        start_s: first.start_s - 3600.0,
        ..first
    };
    let bad = Schedule::from_decisions(&scenario, &decisions, ScheduleStatus::Feasible);
    let report = validate_schedule(&scenario, &bad, DEFAULT_TOL)?;
    print!("{}", report.to_table());
    anyhow::ensure!(report.families().contains(&CheckFamily::Window));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
