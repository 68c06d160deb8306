mod scenario_roundtrip {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenario_roundtrip.rs"));
}

mod model_export {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/model_export.rs"));
}

mod exact_solve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exact_solve.rs"));
}

mod external_solver {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/external_solver.rs"));
}

mod qin_heuristic {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/qin_heuristic.rs"));
}

mod validate_schedule {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/validate_schedule.rs"));
}

mod compare_schedules {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/compare_schedules.rs"));
}

mod position_allocation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/position_allocation.rs"));
}

mod big_m_probe {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/big_m_probe.rs"));
}

#[test]
fn scenario_roundtrip_runs() {
    scenario_roundtrip::run_example().expect("scenario_roundtrip example should run");
}

#[test]
fn model_export_runs() {
    model_export::run_example().expect("model_export example should run");
}

#[test]
fn exact_solve_runs() {
    exact_solve::run_example().expect("exact_solve example should run");
}

#[test]
fn external_solver_runs() {
    external_solver::run_example().expect("external_solver example should run");
}

#[test]
fn qin_heuristic_runs() {
    qin_heuristic::run_example().expect("qin_heuristic example should run");
}

#[test]
fn validate_schedule_runs() {
    validate_schedule::run_example().expect("validate_schedule example should run");
}

#[test]
fn compare_schedules_runs() {
    compare_schedules::run_example().expect("compare_schedules example should run");
}

#[test]
fn position_allocation_runs() {
    position_allocation::run_example().expect("position_allocation example should run");
}

#[test]
fn big_m_probe_runs() {
    big_m_probe::run_example().expect("big_m_probe example should run");
}
