use crate::scenario::{Scenario, VisitId};

use super::{
    BigM, Domain, Family, ModelError, ModelIR, ModelKind, ModelMetadata, RowBuilder, Sense, VarRef,
    VariableIndex,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PapVehicle {
    pub arrival_s: f64,
    /// Fixed service time (s).
    pub service_s: f64,
    /// Space taken on the berth.
    pub length: f64,
}

/// A position allocation instance: vehicles with fixed service times packed
/// on a continuous berth of length `berth_length` over `[0, horizon_s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PapInstance {
    pub horizon_s: f64,
    pub berth_length: f64,
    pub vehicles: Vec<PapVehicle>,
}

impl PapInstance {
    /// Takes arrivals and the horizon from a scenario; berth length, vehicle
    /// lengths and service times must be supplied for every visit.
    pub fn from_scenario(
        scenario: &Scenario,
        berth_length: Option<f64>,
        lengths: &[f64],
        service_s: &[f64],
    ) -> Result<Self, ModelError> {
        let berth_length =
            berth_length.ok_or_else(|| ModelError::MissingInput("berth length".into()))?;
        let n = scenario.visit_count();
        if lengths.len() != n {
            return Err(ModelError::MissingInput(format!(
                "{} vehicle lengths for {n} visits",
                lengths.len()
            )));
        }
        if service_s.len() != n {
            return Err(ModelError::MissingInput(format!(
                "{} service times for {n} visits",
                service_s.len()
            )));
        }
        let vehicles = scenario
            .visits()
            .iter()
            .zip(lengths.iter().zip(service_s))
            .map(|(v, (&length, &service_s))| PapVehicle {
                arrival_s: v.arrival_s,
                service_s,
                length,
            })
            .collect();
        Ok(Self {
            horizon_s: scenario.horizon_s(),
            berth_length,
            vehicles,
        })
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.horizon_s.is_finite() && self.horizon_s > 0.0) {
            return Err(ModelError::InvalidInput("horizon must be positive".into()));
        }
        if !(self.berth_length.is_finite() && self.berth_length > 0.0) {
            return Err(ModelError::InvalidInput("berth length must be positive".into()));
        }
        if self.vehicles.is_empty() {
            return Err(ModelError::MissingInput("no vehicles".into()));
        }
        for (k, v) in self.vehicles.iter().enumerate() {
            let ok = [v.arrival_s, v.service_s, v.length]
                .iter()
                .all(|x| x.is_finite() && *x >= 0.0);
            if !ok {
                return Err(ModelError::InvalidInput(format!(
                    "vehicle {} needs finite non-negative arrival, service and length",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PapOptions {
    /// Restrict positions to integers.
    pub integer_positions: bool,
    /// Bound each position by `L - l_i` so the vehicle fits on the berth.
    /// Off by default: positions range over `[0, L]`.
    pub fit_within_berth: bool,
}

/// Builds the continuous-berth position allocation model: minimize the total
/// time from arrival to detachment subject to rectangle non-overlap.
pub fn build_pap_model(instance: &PapInstance, options: &PapOptions) -> Result<ModelIR, ModelError> {
    instance.check()?;
    let t = instance.horizon_s;
    let l = instance.berth_length;
    let ids: Vec<VisitId> = (0..instance.vehicles.len()).map(VisitId::new).collect();
    let veh = |i: VisitId| &instance.vehicles[i.get()];

    let mut vars = VariableIndex::default();
    for &i in &ids {
        vars.add(VarRef::Start(i), Domain::Continuous, 0.0, t);
        vars.add(VarRef::End(i), Domain::Continuous, 0.0, t);
    }
    let position_domain = if options.integer_positions {
        Domain::Integer
    } else {
        Domain::Continuous
    };
    for &i in &ids {
        let upper = if options.fit_within_berth {
            l - veh(i).length
        } else {
            l
        };
        vars.add(VarRef::Queue(i), position_domain, 0.0, upper);
    }
    let ordered: Vec<(VisitId, VisitId)> = ids
        .iter()
        .flat_map(|&i| ids.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
        .collect();
    for &(i, j) in &ordered {
        vars.add(VarRef::Before(i, j), Domain::Binary, 0.0, 1.0);
    }
    for &(i, j) in &ordered {
        vars.add(VarRef::Below(i, j), Domain::Binary, 0.0, 1.0);
    }

    let mut rows = RowBuilder::new(&vars);
    for &(i, j) in &ordered {
        // u_j - u_i - s_i - (sigma_ij - 1) T >= 0 with s_i fixed
        rows.push(
            Family::TemporalOrder,
            format!("T{i}_{j}"),
            &[
                (VarRef::Start(j), 1.0),
                (VarRef::Start(i), -1.0),
                (VarRef::Before(i, j), -t),
            ],
            Sense::Ge,
            veh(i).service_s - t,
        );
    }
    for &(i, j) in &ordered {
        // v_j - v_i - l_i - (psi_ij - 1) L >= 0
        rows.push(
            Family::SpatialOrder,
            format!("S{i}_{j}"),
            &[
                (VarRef::Queue(j), 1.0),
                (VarRef::Queue(i), -1.0),
                (VarRef::Below(i, j), -l),
            ],
            Sense::Ge,
            veh(i).length - l,
        );
    }
    for &(i, j) in ordered.iter().filter(|(i, j)| i < j) {
        rows.push(
            Family::PairSeparation,
            format!("C{i}_{j}"),
            &[
                (VarRef::Before(i, j), 1.0),
                (VarRef::Before(j, i), 1.0),
                (VarRef::Below(i, j), 1.0),
                (VarRef::Below(j, i), 1.0),
            ],
            Sense::Ge,
            1.0,
        );
    }
    for &(i, j) in ordered.iter().filter(|(i, j)| i < j) {
        rows.push(
            Family::TemporalExclusive,
            format!("X{i}_{j}"),
            &[(VarRef::Before(i, j), 1.0), (VarRef::Before(j, i), 1.0)],
            Sense::Le,
            1.0,
        );
    }
    for &(i, j) in ordered.iter().filter(|(i, j)| i < j) {
        rows.push(
            Family::SpatialExclusive,
            format!("Y{i}_{j}"),
            &[(VarRef::Below(i, j), 1.0), (VarRef::Below(j, i), 1.0)],
            Sense::Le,
            1.0,
        );
    }
    for &i in &ids {
        // s_i + u_i = d_i
        rows.push(
            Family::Detach,
            format!("D{i}"),
            &[(VarRef::Start(i), 1.0), (VarRef::End(i), -1.0)],
            Sense::Eq,
            -veh(i).service_s,
        );
    }
    for &i in &ids {
        rows.push(
            Family::StartWindow,
            format!("A{i}"),
            &[(VarRef::Start(i), 1.0)],
            Sense::Ge,
            veh(i).arrival_s,
        );
        rows.push(
            Family::StartWindow,
            format!("Z{i}"),
            &[(VarRef::Start(i), 1.0)],
            Sense::Le,
            t - veh(i).service_s,
        );
    }
    let constraints = rows.rows;

    let objective = ids.iter().map(|&i| (vars.col(VarRef::End(i)), 1.0)).collect();
    let objective_offset = -ids.iter().map(|&i| veh(i).arrival_s).sum::<f64>();

    Ok(ModelIR {
        name: "pap".into(),
        variables: vars,
        constraints,
        objective,
        objective_offset,
        metadata: ModelMetadata {
            kind: ModelKind::Pap,
            scenario_hash: None,
            big_m: BigM {
                time: t,
                gain: 0.0,
                space: l,
            },
            visit_count: ids.len(),
            queue_count: 0,
        },
    })
}
