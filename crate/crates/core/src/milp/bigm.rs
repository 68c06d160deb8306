use std::collections::BTreeMap;

use crate::scenario::{Scenario, VisitId};

use super::{ColId, Domain, Family, ModelIR, Sense, VarRef};

/// Constants that switch big-M rows off when their indicator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    /// Temporal ordering rows (seconds).
    pub time: f64,
    /// Gain linearization rows (seconds).
    pub gain: f64,
    /// Spatial ordering rows (queue numbers).
    pub space: f64,
}

/// The smallest constants that keep every relaxed row implied by the variable
/// bounds: starts, durations and gains all live in `[0, T]`, queue numbers in
/// `[1, n_Q]`.
pub fn big_m_values(scenario: &Scenario) -> BigM {
    BigM {
        time: scenario.horizon_s(),
        gain: scenario.horizon_s(),
        space: scenario.queue_count() as f64,
    }
}

/// Minimum slack of the temporal ordering row for `(first, second)` with its
/// indicator set to zero, taken over the model's variable bounds after the
/// detach identity `u + s = d` is substituted. A non-negative result means the
/// relaxed row can never cut off a point that satisfies the bounds.
pub fn relaxed_time_row_min_slack(model: &ModelIR, first: VisitId, second: VisitId) -> Option<f64> {
    let indicator = model.variables.get(VarRef::Before(first, second))?;
    let row = model
        .rows_of(Family::TemporalOrder)
        .find(|r| r.coeffs.iter().any(|&(c, _)| c == indicator))?;
    debug_assert_eq!(row.sense, Sense::Ge);

    let mut terms: BTreeMap<ColId, f64> = BTreeMap::new();
    for &(c, a) in &row.coeffs {
        let var = model.variables.var(c);
        if c == indicator {
            debug_assert_eq!(var.domain, Domain::Binary);
            continue;
        }
        *terms.entry(c).or_insert(0.0) += a;
    }
    let start = model.variables.get(VarRef::Start(first))?;
    let duration = model.variables.get(VarRef::Duration(first))?;
    let end = model.variables.get(VarRef::End(first))?;
    if let (Some(&a_start), Some(&a_dur)) = (terms.get(&start), terms.get(&duration)) {
        if a_start == a_dur {
            terms.remove(&start);
            terms.remove(&duration);
            *terms.entry(end).or_insert(0.0) += a_start;
        }
    }
    let min_activity: f64 = terms
        .iter()
        .map(|(&c, &a)| {
            let v = model.variables.var(c);
            if a >= 0.0 {
                a * v.lower
            } else {
                a * v.upper
            }
        })
        .sum();
    Some(min_activity - row.rhs)
}
