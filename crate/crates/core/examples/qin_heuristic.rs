// Threshold heuristic: charger class by arrival charge band.

use bebsched::heuristic::{qin_modified, ThresholdPolicy};
use bebsched::scenario::{generate_scenario, GeneratorParams};

pub fn run_example() -> anyhow::Result<()> {
    let scenario = generate_scenario(&GeneratorParams::default(), 3)?;
    let out = qin_modified(&scenario, &ThresholdPolicy::default())?;
    let queues = scenario.queues();
    for i in scenario.visits_by_arrival() {
        let plan = out.schedule.plan(i);
        let cap = scenario.bus_of(i).capacity_kwh;
        println!(
            "visit {i}: arrives at {:>5.1}% -> {:?}, queue {} ({:?}) for {:.0} s",
            100.0 * plan.arrival_soc_kwh / cap,
            out.bands[i.get()],
            plan.queue,
            queues.class(plan.queue),
            plan.duration_s,
        );
    }
    println!("status {}, objective {}", out.schedule.status, out.schedule.objective);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
