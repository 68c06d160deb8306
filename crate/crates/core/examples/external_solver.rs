// Drive an external solver through a command template.
//
// A real setup would call something like `highs --model_file {mps}
// --solution_file {sol}` and convert its output. Here the "solver" copies a
// solution file prepared in advance, which exercises the same export, import
// and validation path.

use bebsched::milp::{build_beb_model, write_solution, BuildOptions};
use bebsched::scenario::{generate_scenario, GeneratorParams};
use bebsched::solver::{solve_exact, solve_via_export, SearchLimits};

pub fn run_example() -> anyhow::Result<()> {
    let params = GeneratorParams {
        buses: 2,
        visits_per_bus: 2,
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, 2)?;
    let model = build_beb_model(&scenario, &BuildOptions::default())?;
    let reference = solve_exact(&scenario, &SearchLimits::default())?.schedule;
    let arrivals: Vec<f64> = scenario.visits().iter().map(|v| v.arrival_s).collect();

    let dir = tempfile::tempdir()?;
    let canned = dir.path().join("canned.sol");
    std::fs::write(&canned, write_solution(&model, &reference, &arrivals)?)?;

    let template = format!("test -s {{mps}} && cp '{}' {{sol}}", canned.display());
    let schedule = solve_via_export(&scenario, &template)?;
    println!("external: {} objective {}", schedule.status, schedule.objective);
    anyhow::ensure!(schedule.visits == reference.visits);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
