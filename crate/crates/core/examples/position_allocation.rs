// The continuous-berth position allocation model on two vehicles.

use bebsched::milp::{build_pap_model, export_mps_with, MpsFormat, PapInstance, PapOptions, PapVehicle};

pub fn run_example() -> anyhow::Result<()> {
    let instance = PapInstance {
        horizon_s: 100.0,
        berth_length: 10.0,
        vehicles: vec![
            PapVehicle {
                arrival_s: 0.0,
                service_s: 10.0,
                length: 6.0,
            },
            PapVehicle {
                arrival_s: 0.0,
                service_s: 10.0,
                length: 6.0,
            },
        ],
    };
    for fit in [false, true] {
        let options = PapOptions {
            fit_within_berth: fit,
            ..PapOptions::default()
        };
        let model = build_pap_model(&instance, &options)?;
        println!(
            "fit_within_berth={fit}: {} rows, {} columns",
            model.constraints.len(),
            model.variables.len()
        );
        if fit {
            print!("{}", export_mps_with(&model, MpsFormat::Free)?);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
