//! Station-level profiles and side-by-side schedule comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::scenario::{QueueClass, Scenario, SECONDS_PER_HOUR};
use crate::schedule::Schedule;
use crate::validator::{simulate_soc, validate_schedule, ValidationError, DEFAULT_TOL};

pub const DEFAULT_DT: f64 = 60.0;

/// Uniformly sampled series starting at time zero with `ceil(T/dt) + 1`
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub start_s: f64,
    pub step_s: f64,
    pub values: Vec<f64>,
    pub unit: String,
}

impl TimeSeries {
    pub fn sample(horizon_s: f64, dt: f64, unit: &str, f: impl Fn(f64) -> f64) -> Self {
        assert!(dt > 0.0, "sample step must be positive");
        let n = (horizon_s / dt).ceil() as usize + 1;
        Self {
            start_s: 0.0,
            step_s: dt,
            values: (0..n).map(|k| f(k as f64 * dt)).collect(),
            unit: unit.to_string(),
        }
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.start_s + k as f64 * self.step_s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `t_hours,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_hours,value\n");
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.time_at(k) / SECONDS_PER_HOUR, v).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

struct Session {
    start_s: f64,
    end_s: f64,
    rate_kw: f64,
    class: QueueClass,
}

fn sessions(scenario: &Scenario, schedule: &Schedule) -> Vec<Session> {
    let queues = scenario.queues();
    schedule
        .visits
        .iter()
        .filter(|p| p.duration_s > 0.0 && p.end_s > p.start_s)
        .map(|p| Session {
            start_s: p.start_s,
            end_s: p.end_s,
            rate_kw: queues.rate_kw(p.queue),
            class: queues.class(p.queue),
        })
        .collect()
}

/// Number of charging sessions of `class` active at each sample time, with
/// sessions covering `[u, d)`.
pub fn charger_count_profile(scenario: &Scenario, schedule: &Schedule, class: QueueClass, dt: f64) -> TimeSeries {
    let active: Vec<Session> = sessions(scenario, schedule)
        .into_iter()
        .filter(|s| s.class == class)
        .collect();
    TimeSeries::sample(scenario.horizon_s(), dt, "count", |t| {
        active.iter().filter(|s| s.start_s <= t && t < s.end_s).count() as f64
    })
}

/// Station power draw (kW) sampled every `dt`.
pub fn power_profile(scenario: &Scenario, schedule: &Schedule, dt: f64) -> TimeSeries {
    let active = sessions(scenario, schedule);
    TimeSeries::sample(scenario.horizon_s(), dt, "kW", |t| {
        active
            .iter()
            .filter(|s| s.start_s <= t && t < s.end_s)
            .map(|s| s.rate_kw)
            .fold(0.0, |a, r| a + r)
    })
}

/// The exact piecewise-constant power draw as `(t, kW)` steps, each holding
/// until the next step. The last step is always zero.
pub fn power_steps(scenario: &Scenario, schedule: &Schedule) -> Vec<(f64, f64)> {
    let active = sessions(scenario, schedule);
    let mut times: Vec<f64> = active.iter().flat_map(|s| [s.start_s, s.end_s]).collect();
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let p = active
                .iter()
                .filter(|s| s.start_s <= t && t < s.end_s)
                .map(|s| s.rate_kw)
                .fold(0.0, |a, r| a + r);
            (t, p)
        })
        .collect()
}

/// Integral of power steps over `[0, t]`, in kWh.
pub fn integrate_steps(steps: &[(f64, f64)], t: f64) -> f64 {
    let mut total = 0.0;
    for (k, &(t0, p)) in steps.iter().enumerate() {
        if t0 >= t {
            break;
        }
        let t1 = steps.get(k + 1).map_or(t, |s| s.0.min(t));
        total += p * (t1 - t0);
    }
    total / SECONDS_PER_HOUR
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyProfile {
    pub series: TimeSeries,
    pub total_kwh: f64,
}

/// Cumulative energy drawn, evaluated exactly at every sample time.
pub fn energy_accumulated(scenario: &Scenario, schedule: &Schedule, dt: f64) -> EnergyProfile {
    let active = sessions(scenario, schedule);
    let energy_to = |t: f64| -> f64 {
        active
            .iter()
            .map(|s| s.rate_kw * (s.end_s.min(t) - s.start_s).max(0.0))
            .fold(0.0, |a, e| a + e)
            / SECONDS_PER_HOUR
    };
    let total_kwh = active
        .iter()
        .map(|s| s.rate_kw * (s.end_s - s.start_s))
        .fold(0.0, |a, e| a + e)
        / SECONDS_PER_HOUR;
    EnergyProfile {
        series: TimeSeries::sample(scenario.horizon_s(), dt, "kWh", energy_to),
        total_kwh,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    pub label: String,
    pub status: String,
    pub objective: f64,
    pub peak_slow: usize,
    pub peak_fast: usize,
    pub total_energy_kwh: f64,
    pub min_soc_kwh: f64,
    pub final_soc_kwh: Vec<f64>,
    pub clean: bool,
    pub violations: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryDelta {
    pub objective: f64,
    pub peak_slow: i64,
    pub peak_fast: i64,
    pub total_energy_kwh: f64,
    pub min_soc_kwh: f64,
    pub final_soc_kwh: Vec<f64>,
}

/// Two schedules of one scenario side by side; deltas are `b - a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub dt_s: f64,
    pub a: ScheduleSummary,
    pub b: ScheduleSummary,
    pub delta: SummaryDelta,
}

pub fn summarize(
    scenario: &Scenario,
    schedule: &Schedule,
    label: &str,
    dt: f64,
) -> Result<ScheduleSummary, ValidationError> {
    let report = validate_schedule(scenario, schedule, DEFAULT_TOL)?;
    let sim = simulate_soc(scenario, schedule, dt)?;
    let peak = |class| charger_count_profile(scenario, schedule, class, dt).max() as usize;
    Ok(ScheduleSummary {
        label: label.to_string(),
        status: schedule.status.to_string(),
        objective: schedule.evaluate_objective(scenario.queues()),
        peak_slow: peak(QueueClass::Slow),
        peak_fast: peak(QueueClass::Fast),
        total_energy_kwh: energy_accumulated(scenario, schedule, dt).total_kwh,
        min_soc_kwh: sim.trajectories.iter().map(|t| t.min_kwh()).fold(f64::INFINITY, f64::min),
        final_soc_kwh: sim.trajectories.iter().map(|t| t.final_kwh()).collect(),
        clean: report.is_clean(),
        violations: report
            .counts()
            .into_iter()
            .map(|(f, n)| (f.to_string(), n))
            .collect(),
    })
}

pub fn compare(
    scenario: &Scenario,
    a: &Schedule,
    b: &Schedule,
    dt: f64,
) -> Result<ComparisonReport, ValidationError> {
    let a = summarize(scenario, a, "a", dt)?;
    let b = summarize(scenario, b, "b", dt)?;
    let delta = SummaryDelta {
        objective: b.objective - a.objective,
        peak_slow: b.peak_slow as i64 - a.peak_slow as i64,
        peak_fast: b.peak_fast as i64 - a.peak_fast as i64,
        total_energy_kwh: b.total_energy_kwh - a.total_energy_kwh,
        min_soc_kwh: b.min_soc_kwh - a.min_soc_kwh,
        final_soc_kwh: b
            .final_soc_kwh
            .iter()
            .zip(&a.final_soc_kwh)
            .map(|(y, x)| y - x)
            .collect(),
    };
    Ok(ComparisonReport { dt_s: dt, a, b, delta })
}

impl ComparisonReport {
    pub fn with_labels(mut self, a: &str, b: &str) -> Self {
        self.a.label = a.to_string();
        self.b.label = b.to_string();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let (a, b, d) = (&self.a, &self.b, &self.delta);
        writeln!(out, "{:<18} {:>16} {:>16} {:>16}", "", a.label, b.label, "delta").unwrap();
        let mut row = |name: &str, x: String, y: String, z: String| {
            writeln!(out, "{name:<18} {x:>16} {y:>16} {z:>16}").unwrap();
        };
        row("status", a.status.clone(), b.status.clone(), String::new());
        row("objective", format!("{:.3}", a.objective), format!("{:.3}", b.objective), format!("{:.3}", d.objective));
        row("peak slow", a.peak_slow.to_string(), b.peak_slow.to_string(), d.peak_slow.to_string());
        row("peak fast", a.peak_fast.to_string(), b.peak_fast.to_string(), d.peak_fast.to_string());
        row("energy kWh", format!("{:.3}", a.total_energy_kwh), format!("{:.3}", b.total_energy_kwh), format!("{:.3}", d.total_energy_kwh));
        row("min soc kWh", format!("{:.3}", a.min_soc_kwh), format!("{:.3}", b.min_soc_kwh), format!("{:.3}", d.min_soc_kwh));
        for (k, dz) in d.final_soc_kwh.iter().enumerate() {
            row(
                &format!("final soc bus {}", k + 1),
                format!("{:.3}", a.final_soc_kwh[k]),
                format!("{:.3}", b.final_soc_kwh[k]),
                format!("{dz:.3}"),
            );
        }
        let fam = |s: &ScheduleSummary| {
            if s.clean {
                "clean".to_string()
            } else {
                s.violations.iter().map(|(f, n)| format!("{f}:{n}")).collect::<Vec<_>>().join(" ")
            }
        };
        row("violations", fam(a), fam(b), String::new());
        out
    }
}

/// Writes the power, energy, fast-count and slow-count series of a schedule
/// as `<label>_<series>.csv` in `dir`.
pub fn write_profile_csvs(
    scenario: &Scenario,
    schedule: &Schedule,
    label: &str,
    dt: f64,
    dir: impl AsRef<Path>,
) -> io::Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let series = [
        ("power", power_profile(scenario, schedule, dt)),
        ("energy", energy_accumulated(scenario, schedule, dt).series),
        ("fast_count", charger_count_profile(scenario, schedule, QueueClass::Fast, dt)),
        ("slow_count", charger_count_profile(scenario, schedule, QueueClass::Slow, dt)),
    ];
    let mut out = Vec::new();
    for (name, s) in series {
        let path = dir.join(format!("{label}_{name}.csv"));
        s.write_csv(&path)?;
        out.push(path);
    }
    Ok(out)
}
