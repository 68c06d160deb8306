// Compare the exact schedule with the heuristic and write profile CSVs.

use bebsched::heuristic::{qin_modified, ThresholdPolicy};
use bebsched::metrics::{compare, write_profile_csvs, DEFAULT_DT};
use bebsched::scenario::{generate_scenario, GeneratorParams};
use bebsched::solver::{solve_exact_small, SearchLimits};

pub fn run_example() -> anyhow::Result<()> {
    let params = GeneratorParams {
        buses: 3,
        visits_per_bus: 2,
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, 6)?;
    let exact = solve_exact_small(&scenario, &SearchLimits::default())?;
    let qin = qin_modified(&scenario, &ThresholdPolicy::default())?.schedule;
    anyhow::ensure!(exact.has_plan());

    let report = compare(&scenario, &exact, &qin, DEFAULT_DT)?.with_labels("exact", "qin");
    print!("{}", report.to_table());

    let dir = tempfile::tempdir()?;
    let mut files = write_profile_csvs(&scenario, &exact, "exact", DEFAULT_DT, dir.path())?;
    files.extend(write_profile_csvs(&scenario, &qin, "qin", DEFAULT_DT, dir.path())?);
    for f in &files {
        println!("wrote {}", f.file_name().unwrap().to_string_lossy());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
