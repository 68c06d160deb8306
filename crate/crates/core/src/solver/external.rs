use std::path::PathBuf;
use std::process::Command;

use crate::milp::{build_beb_model, export_mps_with, import_solution, BuildOptions, MpsFormat};
use crate::scenario::Scenario;
use crate::schedule::Schedule;
use crate::validator::{validate_schedule_with, ValidationOptions, DEFAULT_TOL};

use super::SolverError;

#[derive(Debug, Clone, Default)]
pub struct ExternalOptions {
    pub build: BuildOptions,
    pub format: MpsFormat,
    /// Write the model and solution here instead of a temporary directory.
    pub work_dir: Option<PathBuf>,
}

/// Exports the model, runs `template` through `sh -c` with `{mps}` and `{sol}`
/// replaced by file paths, and imports and validates the solution file.
pub fn solve_via_export(scenario: &Scenario, template: &str) -> Result<Schedule, SolverError> {
    solve_via_export_with(scenario, template, &ExternalOptions::default())
}

pub fn solve_via_export_with(
    scenario: &Scenario,
    template: &str,
    options: &ExternalOptions,
) -> Result<Schedule, SolverError> {
    for placeholder in ["{mps}", "{sol}"] {
        if !template.contains(placeholder) {
            return Err(SolverError::Template(format!("missing {placeholder} placeholder")));
        }
    }
    let model = build_beb_model(scenario, &options.build)?;
    let text = export_mps_with(&model, options.format)?;

    let temp;
    let dir = match &options.work_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            d.clone()
        }
        None => {
            temp = tempfile::tempdir()?;
            temp.path().to_path_buf()
        }
    };
    let mps = dir.join("model.mps");
    let sol = dir.join("model.sol");
    std::fs::write(&mps, text)?;
    if sol.exists() {
        std::fs::remove_file(&sol)?;
    }

    let command = template
        .replace("{mps}", &shell_quote(&mps.display().to_string()))
        .replace("{sol}", &shell_quote(&sol.display().to_string()));
    log::debug!("running solver: {command}");
    let output = Command::new("sh").arg("-c").arg(&command).output()?;
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
    if !output.status.success() {
        return Err(SolverError::Adapter {
            command,
            status: output.status.to_string(),
            stderr,
        });
    }
    let imported = import_solution(&model, &sol).map_err(|error| SolverError::Solution { error, stderr })?;
    for w in &imported.warnings {
        log::warn!("{w}");
    }
    let schedule = imported.schedule;
    if schedule.has_plan() {
        let report = validate_schedule_with(
            scenario,
            &schedule,
            &ValidationOptions {
                tol: DEFAULT_TOL,
                final_charge: options.build.final_charge,
            },
        )?;
        if !report.is_clean() {
            return Err(SolverError::Inconsistent(Box::new(report)));
        }
    }
    Ok(schedule)
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}
