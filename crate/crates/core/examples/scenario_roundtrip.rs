// Generate a synthetic fleet, save it and load it back.

use bebsched::scenario::{generate_scenario, load_scenario, save_scenario, GeneratorParams};

pub fn run_example() -> anyhow::Result<()> {
    let params = GeneratorParams {
        buses: 3,
        visits_per_bus: 3,
        ..GeneratorParams::default()
    };
    let scenario = generate_scenario(&params, 7)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("fleet.json");
    save_scenario(&scenario, &path)?;
    let loaded = load_scenario(&path)?;
    anyhow::ensure!(loaded.content_hash() == scenario.content_hash(), "round trip changed the scenario");

    let m = loaded.mappings();
    for b in loaded.bus_ids() {
        let chain: Vec<String> = m.chain(b).map(|i| i.to_string()).collect();
        println!("bus {b}: visits {}", chain.join(" -> "));
    }
    for v in loaded.visits() {
        println!(
            "visit {}: {:.2} h to {:.2} h, route {:.1} kWh",
            v.id,
            v.arrival_s / 3600.0,
            v.departure_s / 3600.0,
            v.route_discharge_kwh
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
