// Build the charging model, check its size and write it as MPS.

use bebsched::milp::{beb_row_count, build_beb_model, export_mps, parse_mps, BuildOptions, Domain, MpsFormat, MpsProblem};
use bebsched::scenario::{generate_scenario, GeneratorParams};

pub fn run_example() -> anyhow::Result<()> {
    let scenario = generate_scenario(&GeneratorParams::default(), 1)?;
    let model = build_beb_model(&scenario, &BuildOptions::default())?;

    let expected = beb_row_count(scenario.visit_count(), scenario.bus_count(), scenario.queue_count());
    anyhow::ensure!(model.constraints.len() == expected);
    println!(
        "{} rows, {} columns ({} binary, {} continuous)",
        model.constraints.len(),
        model.variables.len(),
        model.variables.count(Domain::Binary),
        model.variables.count(Domain::Continuous),
    );
    for (family, n) in model.family_counts() {
        println!("  {:<2} {n}", family.code());
    }

    let text = export_mps(&model)?;
    let parsed = parse_mps(&text)?;
    anyhow::ensure!(parsed == MpsProblem::from_model(&model, MpsFormat::Fixed)?);
    println!("MPS: {} lines, fingerprint {}", text.lines().count(), &model.fingerprint()[..16]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
