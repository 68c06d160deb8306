use crate::scenario::{QueueId, Scenario, VisitId, SECONDS_PER_HOUR};

use super::{
    big_m_values, BigM, Domain, Family, ModelError, ModelIR, ModelKind, ModelMetadata, RowBuilder,
    Sense, VarRef, VariableIndex,
};

/// Which charge the end-of-day requirement applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FinalChargeMode {
    /// Charge on arrival at the bus's last visit.
    #[default]
    OnArrival,
    /// Charge after the last visit's charging and its trailing route.
    AfterCharge,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildOptions {
    /// Replaces the scenario-derived big-M constants.
    pub big_m: Option<BigM>,
    /// Fix the temporal order of visit pairs of one bus from their arrival
    /// order instead of leaving it to the solver.
    pub presolve_same_bus_order: bool,
    pub final_charge: FinalChargeMode,
}

/// Closed-form row count of the bus charging model.
pub fn beb_row_count(visits: usize, buses: usize, queues: usize) -> usize {
    let ordered = visits * visits.saturating_sub(1);
    // 2 ordered-pair families, 3 unordered-pair families, 8 rows per visit,
    // one chain row per non-final visit, 2 per bus and 4 per visit-queue pair.
    2 * ordered + 3 * (ordered / 2) + 8 * visits + (visits - buses) + 2 * buses + 4 * visits * queues
}

fn pair_name(family: Family, i: VisitId, j: VisitId) -> String {
    format!("{}{}_{}", family.code(), i, j)
}

fn visit_name(family: Family, i: VisitId) -> String {
    format!("{}{}", family.code(), i)
}

/// Builds the bus charging MILP for a validated scenario.
pub fn build_beb_model(scenario: &Scenario, options: &BuildOptions) -> Result<ModelIR, ModelError> {
    let horizon = scenario.horizon_s();
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ModelError::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let big_m = options.big_m.unwrap_or_else(|| big_m_values(scenario));
    for (what, m) in [("time", big_m.time), ("gain", big_m.gain), ("space", big_m.space)] {
        if !(m.is_finite() && m > 0.0) {
            return Err(ModelError::InvalidInput(format!("big-M {what} must be positive, got {m}")));
        }
    }

    let queues = scenario.queues();
    let nq = queues.len();
    let visit_ids: Vec<VisitId> = scenario.visit_ids().collect();
    let queue_ids: Vec<QueueId> = queues.ids().collect();
    let mappings = scenario.mappings();

    let mut vars = VariableIndex::default();
    for &i in &visit_ids {
        let bus = scenario.bus_of(i);
        vars.add(VarRef::Start(i), Domain::Continuous, 0.0, horizon);
        vars.add(VarRef::End(i), Domain::Continuous, 0.0, horizon);
        vars.add(VarRef::Duration(i), Domain::Continuous, 0.0, horizon);
        vars.add(VarRef::Soc(i), Domain::Continuous, bus.min_kwh(), bus.capacity_kwh);
    }
    for &i in &visit_ids {
        for &q in &queue_ids {
            vars.add(VarRef::Gain(i, q), Domain::Continuous, 0.0, f64::INFINITY);
        }
    }
    for &i in &visit_ids {
        vars.add(VarRef::Queue(i), Domain::Integer, 1.0, nq as f64);
    }
    for &i in &visit_ids {
        for &q in &queue_ids {
            vars.add(VarRef::Assign(i, q), Domain::Binary, 0.0, 1.0);
        }
    }
    let ordered: Vec<(VisitId, VisitId)> = visit_ids
        .iter()
        .flat_map(|&i| visit_ids.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
        .collect();
    for &(i, j) in &ordered {
        vars.add(VarRef::Before(i, j), Domain::Binary, 0.0, 1.0);
    }
    for &(i, j) in &ordered {
        vars.add(VarRef::Below(i, j), Domain::Binary, 0.0, 1.0);
    }
    if options.presolve_same_bus_order {
        for b in scenario.bus_ids() {
            let chain: Vec<VisitId> = mappings.chain(b).collect();
            for (k, &i) in chain.iter().enumerate() {
                for &j in &chain[k + 1..] {
                    let before = vars.col(VarRef::Before(i, j));
                    let after = vars.col(VarRef::Before(j, i));
                    let v = vars.var_mut(before);
                    (v.lower, v.upper) = (1.0, 1.0);
                    let v = vars.var_mut(after);
                    (v.lower, v.upper) = (0.0, 0.0);
                }
            }
        }
    }

    let gain_terms = |i: VisitId| -> Vec<(VarRef, f64)> {
        queue_ids
            .iter()
            .map(|&q| (VarRef::Gain(i, q), queues.rate_kw(q) / SECONDS_PER_HOUR))
            .collect()
    };

    let mut rows = RowBuilder::new(&vars);

    for &(i, j) in &ordered {
        // u_j - u_i - s_i - (sigma_ij - 1) M >= 0
        rows.push(
            Family::TemporalOrder,
            pair_name(Family::TemporalOrder, i, j),
            &[
                (VarRef::Start(j), 1.0),
                (VarRef::Start(i), -1.0),
                (VarRef::Duration(i), -1.0),
                (VarRef::Before(i, j), -big_m.time),
            ],
            Sense::Ge,
            -big_m.time,
        );
    }
    for &(i, j) in &ordered {
        // psi_ij = 1 puts i on a lower queue than j
        rows.push(
            Family::SpatialOrder,
            pair_name(Family::SpatialOrder, i, j),
            &[
                (VarRef::Queue(j), 1.0),
                (VarRef::Queue(i), -1.0),
                (VarRef::Below(i, j), -big_m.space),
            ],
            Sense::Ge,
            1.0 - big_m.space,
        );
    }
    let unordered: Vec<(VisitId, VisitId)> = ordered.iter().copied().filter(|(i, j)| i < j).collect();
    for &(i, j) in &unordered {
        rows.push(
            Family::PairSeparation,
            pair_name(Family::PairSeparation, i, j),
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
    for &(i, j) in &unordered {
        rows.push(
            Family::TemporalExclusive,
            pair_name(Family::TemporalExclusive, i, j),
            &[(VarRef::Before(i, j), 1.0), (VarRef::Before(j, i), 1.0)],
            Sense::Le,
            1.0,
        );
    }
    for &(i, j) in &unordered {
        rows.push(
            Family::SpatialExclusive,
            pair_name(Family::SpatialExclusive, i, j),
            &[(VarRef::Below(i, j), 1.0), (VarRef::Below(j, i), 1.0)],
            Sense::Le,
            1.0,
        );
    }
    for &i in &visit_ids {
        rows.push(
            Family::Detach,
            visit_name(Family::Detach, i),
            &[(VarRef::Duration(i), 1.0), (VarRef::Start(i), 1.0), (VarRef::End(i), -1.0)],
            Sense::Eq,
            0.0,
        );
    }
    for b in scenario.bus_ids() {
        let first = mappings.first(b);
        rows.push(
            Family::InitialCharge,
            format!("{}{}", Family::InitialCharge.code(), b),
            &[(VarRef::Soc(first), 1.0)],
            Sense::Eq,
            scenario.bus(b).initial_kwh(),
        );
    }
    for &i in &visit_ids {
        rows.push(
            Family::StartWindow,
            visit_name(Family::StartWindow, i),
            &[(VarRef::Start(i), 1.0)],
            Sense::Ge,
            scenario.visit(i).arrival_s,
        );
        rows.push(
            Family::StartWindow,
            format!("Z{i}"),
            &[(VarRef::Start(i), 1.0), (VarRef::Duration(i), 1.0)],
            Sense::Le,
            horizon,
        );
    }
    for &i in &visit_ids {
        rows.push(
            Family::DepartWindow,
            visit_name(Family::DepartWindow, i),
            &[(VarRef::End(i), 1.0)],
            Sense::Le,
            scenario.visit(i).departure_s,
        );
    }
    for &i in &visit_ids {
        if let Some(next) = mappings.next(i) {
            let mut terms = vec![(VarRef::Soc(i), 1.0)];
            terms.extend(gain_terms(i));
            terms.push((VarRef::Soc(next), -1.0));
            rows.push(
                Family::SocChain,
                visit_name(Family::SocChain, i),
                &terms,
                Sense::Eq,
                scenario.visit(i).route_discharge_kwh,
            );
        }
    }
    for &i in &visit_ids {
        let mut terms = vec![(VarRef::Soc(i), 1.0)];
        terms.extend(gain_terms(i));
        rows.push(
            Family::MinCharge,
            visit_name(Family::MinCharge, i),
            &terms,
            Sense::Ge,
            scenario.bus_of(i).min_kwh() + scenario.visit(i).route_discharge_kwh,
        );
    }
    for &i in &visit_ids {
        let mut terms = vec![(VarRef::Soc(i), 1.0)];
        terms.extend(gain_terms(i));
        rows.push(
            Family::MaxCharge,
            visit_name(Family::MaxCharge, i),
            &terms,
            Sense::Le,
            scenario.bus_of(i).capacity_kwh,
        );
    }
    for b in scenario.bus_ids() {
        let last = mappings.last(b);
        let bus = scenario.bus(b);
        let name = format!("{}{}", Family::FinalCharge.code(), b);
        match options.final_charge {
            FinalChargeMode::OnArrival => rows.push(
                Family::FinalCharge,
                name,
                &[(VarRef::Soc(last), 1.0)],
                Sense::Ge,
                bus.final_kwh(),
            ),
            FinalChargeMode::AfterCharge => {
                let mut terms = vec![(VarRef::Soc(last), 1.0)];
                terms.extend(gain_terms(last));
                rows.push(
                    Family::FinalCharge,
                    name,
                    &terms,
                    Sense::Ge,
                    bus.final_kwh() + scenario.visit(last).route_discharge_kwh,
                );
            }
        }
    }
    for (family, sense) in [
        (Family::GainActive, Sense::Le),
        (Family::GainBelowDuration, Sense::Ge),
        (Family::GainBelowIndicator, Sense::Ge),
        (Family::GainNonnegative, Sense::Ge),
    ] {
        for &i in &visit_ids {
            for &q in &queue_ids {
                let name = format!("{}{}_{}", family.code(), i, q);
                let (s, g, w) = (VarRef::Duration(i), VarRef::Gain(i, q), VarRef::Assign(i, q));
                match family {
                    // s - (1 - w) M <= g
                    Family::GainActive => {
                        rows.push(family, name, &[(s, 1.0), (g, -1.0), (w, big_m.gain)], sense, big_m.gain)
                    }
                    Family::GainBelowDuration => rows.push(family, name, &[(s, 1.0), (g, -1.0)], sense, 0.0),
                    Family::GainBelowIndicator => {
                        rows.push(family, name, &[(w, big_m.gain), (g, -1.0)], sense, 0.0)
                    }
                    _ => rows.push(family, name, &[(g, 1.0)], sense, 0.0),
                }
            }
        }
    }
    for &i in &visit_ids {
        let mut terms = vec![(VarRef::Queue(i), 1.0)];
        terms.extend(queue_ids.iter().map(|&q| (VarRef::Assign(i, q), -(q.number() as f64))));
        rows.push(Family::QueueIndex, visit_name(Family::QueueIndex, i), &terms, Sense::Eq, 0.0);
    }
    for &i in &visit_ids {
        let terms: Vec<(VarRef, f64)> = queue_ids.iter().map(|&q| (VarRef::Assign(i, q), 1.0)).collect();
        rows.push(
            Family::SingleAssignment,
            visit_name(Family::SingleAssignment, i),
            &terms,
            Sense::Eq,
            1.0,
        );
    }
    let constraints = rows.rows;

    let mut objective = Vec::new();
    for &i in &visit_ids {
        for &q in &queue_ids {
            let m = queues.assign_cost(q);
            let eps = queues.use_cost(q);
            if m != 0.0 {
                objective.push((vars.col(VarRef::Assign(i, q)), m));
            }
            if eps != 0.0 {
                objective.push((vars.col(VarRef::Gain(i, q)), eps));
            }
        }
    }

    Ok(ModelIR {
        name: "bebsched".into(),
        variables: vars,
        constraints,
        objective,
        objective_offset: 0.0,
        metadata: ModelMetadata {
            kind: ModelKind::Beb,
            scenario_hash: Some(scenario.content_hash()),
            big_m,
            visit_count: scenario.visit_count(),
            queue_count: nq,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Bus, BusId, GeneratorParams, QueueBank, Visit};

    fn one_visit() -> Scenario {
        let bus = Bus {
            id: BusId::new(0),
            capacity_kwh: 400.0,
            initial_frac: 0.9,
            final_frac: 0.7,
            min_frac: 0.25,
            discharge_kw: 30.0,
        };
        let visit = Visit {
            id: VisitId::new(0),
            bus: BusId::new(0),
            arrival_s: 0.0,
            departure_s: 3600.0,
            route_discharge_kwh: 0.0,
        };
        let queues = QueueBank::with_fewest_charger_costs(1, &[100.0]).unwrap();
        Scenario::new(86400.0, vec![bus], vec![visit], queues).unwrap()
    }

    #[test]
    fn single_visit_variable_catalog() {
        let m = build_beb_model(&one_visit(), &BuildOptions::default()).unwrap();
        // u, d, s, eta + two gains continuous; one queue index; two indicators
        assert_eq!(m.variables.count(Domain::Continuous), 6);
        assert_eq!(m.variables.count(Domain::Integer), 1);
        assert_eq!(m.variables.count(Domain::Binary), 2);
        assert_eq!(m.variables.len(), 9);
        let counts = m.family_counts();
        assert_eq!(counts.get(&Family::TemporalOrder), None);
        assert_eq!(counts.get(&Family::PairSeparation), None);
        assert_eq!(counts.get(&Family::SocChain), None);
        assert_eq!(m.constraints.len(), beb_row_count(1, 1, 2));
    }

    #[test]
    fn desk_scale_family_counts_match_closed_form() {
        let s = generate_scenario(&GeneratorParams::default(), 3).unwrap();
        let m = build_beb_model(&s, &BuildOptions::default()).unwrap();
        let (nv, nb, nq) = (s.visit_count(), s.bus_count(), s.queue_count());
        let c = m.family_counts();
        assert_eq!(c[&Family::TemporalOrder], nv * (nv - 1));
        assert_eq!(c[&Family::SpatialOrder], nv * (nv - 1));
        for f in [Family::PairSeparation, Family::TemporalExclusive, Family::SpatialExclusive] {
            assert_eq!(c[&f], nv * (nv - 1) / 2);
        }
        assert_eq!(c[&Family::SocChain], nv - nb);
        assert_eq!(c[&Family::InitialCharge], nb);
        assert_eq!(c[&Family::FinalCharge], nb);
        assert_eq!(c[&Family::StartWindow], 2 * nv);
        assert_eq!(c[&Family::GainActive], nv * nq);
        assert_eq!(m.constraints.len(), beb_row_count(nv, nb, nq));
        for row in &m.constraints {
            assert!(row.coeffs.iter().all(|(_, a)| a.is_finite()));
            assert!(row.name.len() <= 8, "{}", row.name);
        }
    }

    #[test]
    fn rejects_non_positive_big_m() {
        let opts = BuildOptions {
            big_m: Some(BigM {
                time: 0.0,
                gain: 1.0,
                space: 2.0,
            }),
            ..BuildOptions::default()
        };
        assert!(matches!(
            build_beb_model(&one_visit(), &opts),
            Err(ModelError::InvalidInput(_))
        ));
    }

    #[test]
    fn presolve_fixes_same_bus_order() {
        let s = generate_scenario(&GeneratorParams::default(), 3).unwrap();
        let opts = BuildOptions {
            presolve_same_bus_order: true,
            ..BuildOptions::default()
        };
        let m = build_beb_model(&s, &opts).unwrap();
        let b = BusId::new(0);
        let chain: Vec<VisitId> = s.mappings().chain(b).collect();
        let fixed = m.variables.var(m.variables.col(VarRef::Before(chain[0], chain[1])));
        assert_eq!((fixed.lower, fixed.upper), (1.0, 1.0));
        let other = m.variables.var(m.variables.col(VarRef::Before(chain[1], chain[0])));
        assert_eq!((other.lower, other.upper), (0.0, 0.0));
    }
}
