use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Bus, BusId, ChargerSpec, QueueBank, Scenario, ScenarioError, Visit, VisitId, SECONDS_PER_HOUR,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    horizon_hours: f64,
    buses: Vec<BusRecord>,
    visits: Vec<VisitRecord>,
    queues: QueuesRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRecord {
    id: usize,
    capacity_kwh: f64,
    initial_frac: f64,
    final_frac: f64,
    min_frac: f64,
    discharge_kw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisitRecord {
    id: usize,
    bus: usize,
    arrival_hours: f64,
    departure_hours: f64,
    route_discharge_kwh: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueuesRecord {
    idle_count: usize,
    chargers: Vec<ChargerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChargerRecord {
    rate_kw: f64,
    assign_cost: f64,
    use_cost: f64,
}

/// Hours to seconds, quantized to the millisecond so that a save/load cycle
/// reproduces the stored seconds exactly.
fn hours_to_seconds(h: f64) -> f64 {
    (h * SECONDS_PER_HOUR * 1000.0).round() / 1000.0
}

fn one_based(field: String, id: usize) -> Result<usize, ScenarioError> {
    id.checked_sub(1).ok_or_else(|| ScenarioError::InstanceInvalid {
        field,
        message: "ids are one-based".into(),
    })
}

impl ScenarioFile {
    fn from_scenario(s: &Scenario) -> Self {
        Self {
            horizon_hours: s.horizon_s() / SECONDS_PER_HOUR,
            buses: s
                .buses()
                .iter()
                .map(|b| BusRecord {
                    id: b.id.number(),
                    capacity_kwh: b.capacity_kwh,
                    initial_frac: b.initial_frac,
                    final_frac: b.final_frac,
                    min_frac: b.min_frac,
                    discharge_kw: b.discharge_kw,
                })
                .collect(),
            visits: s
                .visits()
                .iter()
                .map(|v| VisitRecord {
                    id: v.id.number(),
                    bus: v.bus.number(),
                    arrival_hours: v.arrival_s / SECONDS_PER_HOUR,
                    departure_hours: v.departure_s / SECONDS_PER_HOUR,
                    route_discharge_kwh: v.route_discharge_kwh,
                })
                .collect(),
            queues: QueuesRecord {
                idle_count: s.queues().idle_count(),
                chargers: s
                    .queues()
                    .chargers()
                    .iter()
                    .map(|c| ChargerRecord {
                        rate_kw: c.rate_kw,
                        assign_cost: c.assign_cost,
                        use_cost: c.use_cost,
                    })
                    .collect(),
            },
        }
    }

    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let mut buses = Vec::with_capacity(self.buses.len());
        for (k, b) in self.buses.into_iter().enumerate() {
            buses.push(Bus {
                id: BusId::new(one_based(format!("buses[{k}].id"), b.id)?),
                capacity_kwh: b.capacity_kwh,
                initial_frac: b.initial_frac,
                final_frac: b.final_frac,
                min_frac: b.min_frac,
                discharge_kw: b.discharge_kw,
            });
        }
        let mut visits = Vec::with_capacity(self.visits.len());
        for (k, v) in self.visits.into_iter().enumerate() {
            visits.push(Visit {
                id: VisitId::new(one_based(format!("visits[{k}].id"), v.id)?),
                bus: BusId::new(one_based(format!("visits[{k}].bus"), v.bus)?),
                arrival_s: hours_to_seconds(v.arrival_hours),
                departure_s: hours_to_seconds(v.departure_hours),
                route_discharge_kwh: v.route_discharge_kwh,
            });
        }
        let chargers: Vec<ChargerSpec> = self
            .queues
            .chargers
            .iter()
            .map(|c| ChargerSpec {
                rate_kw: c.rate_kw,
                assign_cost: c.assign_cost,
                use_cost: c.use_cost,
            })
            .collect();
        let queues = QueueBank::new(self.queues.idle_count, &chargers)?;
        Scenario::new(hours_to_seconds(self.horizon_hours), buses, visits, queues)
    }
}

/// Canonical pretty-printed JSON. Identical scenarios give identical text.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario))
        .expect("scenario serialization is infallible");
    text.push('\n');
    text
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    fs::write(path, scenario_to_string(scenario))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
      "horizon_hours": 24,
      "buses": [{"id": 1, "capacity_kwh": 400, "initial_frac": 0.9, "final_frac": 0.7,
                 "min_frac": 0.25, "discharge_kw": 30}],
      "visits": [{"id": 1, "bus": 1, "arrival_hours": 1.0, "departure_hours": 1.5,
                  "route_discharge_kwh": 0}],
      "queues": {"idle_count": 1, "chargers": [{"rate_kw": 100, "assign_cost": 2000, "use_cost": 100}]}
    }"#;

    #[test]
    fn minimal_file_loads_in_seconds() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.horizon_s(), 86400.0);
        assert_eq!(s.visits()[0].arrival_s, 3600.0);
        assert_eq!(s.visits()[0].departure_s, 5400.0);
        assert_eq!(s.queue_count(), 2);
    }

    #[test]
    fn min_frac_out_of_range_names_field() {
        let text = MINIMAL.replace("\"min_frac\": 0.25", "\"min_frac\": 1.2");
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::InstanceInvalid { field, .. } => assert_eq!(field, "buses[0].min_frac"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bus_without_visits_rejected() {
        let text = MINIMAL.replace(
            r#""buses": [{"id": 1,"#,
            r#""buses": [{"id": 2, "capacity_kwh": 400, "initial_frac": 0.9, "final_frac": 0.7,
                 "min_frac": 0.25, "discharge_kw": 30}, {"id": 1,"#,
        );
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::InstanceInvalid { message, .. } => {
                assert!(message.contains("no visits"), "{message}")
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let text = MINIMAL.replace("\"idle_count\": 1", "\"idle_count\": 1, \"spare\": 3");
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::Parse { path, message } => {
                assert_eq!(path, "queues.spare");
                assert!(message.contains("spare"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_type_reports_path() {
        let text = MINIMAL.replace("\"rate_kw\": 100", "\"rate_kw\": \"fast\"");
        match parse_scenario(&text).unwrap_err() {
            ScenarioError::Parse { path, .. } => assert_eq!(path, "queues.chargers[0].rate_kw"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let s = parse_scenario(MINIMAL).unwrap();
        let again = parse_scenario(&scenario_to_string(&s)).unwrap();
        assert_eq!(s, again);
    }
}
