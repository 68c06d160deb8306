//! Solver-independent mixed-integer linear models.
//!
//! [`build_beb_model`] emits the full bus charging model; [`build_pap_model`]
//! emits the continuous-berth position allocation model it extends. Both
//! produce a [`ModelIR`] that can be evaluated at a point, exported as MPS and
//! paired with solution files.

mod beb;
mod bigm;
pub mod mps;
mod pap;
pub mod solution;

pub use beb::{beb_row_count, build_beb_model, BuildOptions, FinalChargeMode};
pub use bigm::{big_m_values, relaxed_time_row_min_slack, BigM};
pub use mps::{export_mps, export_mps_with, parse_mps, MpsError, MpsFormat, MpsProblem};
pub use pap::{build_pap_model, PapInstance, PapOptions, PapVehicle};
pub use solution::{
    import_solution, import_solution_text, order_witnesses, schedule_point, write_solution,
    ImportedSolution, SolutionError,
};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{QueueId, ScenarioError, VisitId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("missing model input: {0}")]
    MissingInput(String),
    #[error("invalid model input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Column index into [`VariableIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColId(pub usize);

/// A decision variable of either model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    /// Charging start `u`.
    Start(VisitId),
    /// Charging end `d`.
    End(VisitId),
    /// Time on the charger `s`.
    Duration(VisitId),
    /// Charge on arrival `eta`.
    Soc(VisitId),
    /// Assigned queue number `v` (continuous berth position in the PAP).
    Queue(VisitId),
    /// Assignment indicator `w`.
    Assign(VisitId, QueueId),
    /// Linearized product `g = s * w`.
    Gain(VisitId, QueueId),
    /// Temporal order `sigma`: the first visit ends before the second starts.
    Before(VisitId, VisitId),
    /// Spatial order `psi`: the first visit sits on a lower queue.
    Below(VisitId, VisitId),
}

impl VarRef {
    /// Names are at most eight characters for visit and queue numbers below
    /// 100, which keeps fixed-format MPS free of truncation.
    pub fn name(&self) -> String {
        match *self {
            VarRef::Start(i) => format!("u[{i}]"),
            VarRef::End(i) => format!("d[{i}]"),
            VarRef::Duration(i) => format!("s[{i}]"),
            VarRef::Soc(i) => format!("eta[{i}]"),
            VarRef::Queue(i) => format!("v[{i}]"),
            VarRef::Assign(i, q) => format!("w[{i},{q}]"),
            VarRef::Gain(i, q) => format!("g[{i},{q}]"),
            VarRef::Before(i, j) => format!("t[{i},{j}]"),
            VarRef::Below(i, j) => format!("p[{i},{j}]"),
        }
    }

    /// Inverse of [`VarRef::name`].
    pub fn parse(name: &str) -> Option<VarRef> {
        let open = name.find('[')?;
        let inner = name.get(open + 1..)?.strip_suffix(']')?;
        let nums: Vec<usize> = inner
            .split(',')
            .map(|t| t.parse::<usize>().ok().filter(|&n| n >= 1).map(|n| n - 1))
            .collect::<Option<_>>()?;
        let v = |k: usize| VisitId::new(nums[k]);
        match (&name[..open], nums.len()) {
            ("u", 1) => Some(VarRef::Start(v(0))),
            ("d", 1) => Some(VarRef::End(v(0))),
            ("s", 1) => Some(VarRef::Duration(v(0))),
            ("eta", 1) => Some(VarRef::Soc(v(0))),
            ("v", 1) => Some(VarRef::Queue(v(0))),
            ("w", 2) => Some(VarRef::Assign(v(0), QueueId::new(nums[1]))),
            ("g", 2) => Some(VarRef::Gain(v(0), QueueId::new(nums[1]))),
            ("t", 2) => Some(VarRef::Before(v(0), v(1))),
            ("p", 2) => Some(VarRef::Below(v(0), v(1))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub var: VarRef,
    pub name: String,
    pub domain: Domain,
    pub lower: f64,
    pub upper: f64,
}

/// Declared variables in column order, addressable by [`VarRef`] or name.
#[derive(Debug, Clone, Default)]
pub struct VariableIndex {
    vars: Vec<Variable>,
    by_ref: HashMap<VarRef, ColId>,
    by_name: HashMap<String, ColId>,
}

impl VariableIndex {
    pub fn add(&mut self, var: VarRef, domain: Domain, lower: f64, upper: f64) -> ColId {
        let id = ColId(self.vars.len());
        let name = var.name();
        let (lower, upper) = match domain {
            Domain::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        assert!(self.by_ref.insert(var, id).is_none(), "duplicate variable {name}");
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable {
            var,
            name,
            domain,
            lower,
            upper,
        });
        id
    }

    pub fn col(&self, var: VarRef) -> ColId {
        self.by_ref[&var]
    }

    pub fn get(&self, var: VarRef) -> Option<ColId> {
        self.by_ref.get(&var).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<ColId> {
        self.by_name.get(name).copied()
    }

    pub fn var(&self, col: ColId) -> &Variable {
        &self.vars[col.0]
    }

    pub fn var_mut(&mut self, col: ColId) -> &mut Variable {
        &mut self.vars[col.0]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ColId, &Variable)> {
        self.vars.iter().enumerate().map(|(k, v)| (ColId(k), v))
    }

    pub fn count(&self, domain: Domain) -> usize {
        self.vars.iter().filter(|v| v.domain == domain).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// Constraint families. Every row belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Big-M temporal ordering, one row per ordered pair.
    TemporalOrder,
    /// Big-M spatial ordering, one row per ordered pair.
    SpatialOrder,
    /// Each pair is separated in time or in space.
    PairSeparation,
    TemporalExclusive,
    SpatialExclusive,
    /// `d = u + s`.
    Detach,
    InitialCharge,
    /// `a <= u` and `u + s <= T`.
    StartWindow,
    /// `d <= tau`.
    DepartWindow,
    /// Arrival charge of the next visit.
    SocChain,
    /// Charge left after the following route stays above the floor.
    MinCharge,
    /// Charge after charging stays below capacity.
    MaxCharge,
    FinalCharge,
    /// `s - (1 - w) M <= g`.
    GainActive,
    /// `g <= s`.
    GainBelowDuration,
    /// `g <= M w`.
    GainBelowIndicator,
    /// `g >= 0`.
    GainNonnegative,
    /// `v = sum q w`.
    QueueIndex,
    /// `sum w = 1`.
    SingleAssignment,
}

impl Family {
    pub const ALL: [Family; 19] = [
        Family::TemporalOrder,
        Family::SpatialOrder,
        Family::PairSeparation,
        Family::TemporalExclusive,
        Family::SpatialExclusive,
        Family::Detach,
        Family::InitialCharge,
        Family::StartWindow,
        Family::DepartWindow,
        Family::SocChain,
        Family::MinCharge,
        Family::MaxCharge,
        Family::FinalCharge,
        Family::GainActive,
        Family::GainBelowDuration,
        Family::GainBelowIndicator,
        Family::GainNonnegative,
        Family::QueueIndex,
        Family::SingleAssignment,
    ];

    /// Prefix used in row names.
    pub fn code(self) -> &'static str {
        match self {
            Family::TemporalOrder => "T",
            Family::SpatialOrder => "S",
            Family::PairSeparation => "C",
            Family::TemporalExclusive => "X",
            Family::SpatialExclusive => "Y",
            Family::Detach => "D",
            Family::InitialCharge => "I",
            Family::StartWindow => "A",
            Family::DepartWindow => "E",
            Family::SocChain => "J",
            Family::MinCharge => "K",
            Family::MaxCharge => "L",
            Family::FinalCharge => "F",
            Family::GainActive => "N",
            Family::GainBelowDuration => "O",
            Family::GainBelowIndicator => "P",
            Family::GainNonnegative => "Q",
            Family::QueueIndex => "R",
            Family::SingleAssignment => "W",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("family serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub coeffs: Vec<(ColId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub family: Family,
}

impl LinearConstraint {
    pub fn activity(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(c, a)| a * point[c.0]).sum()
    }

    /// How far the row is from holding at `point` (zero when satisfied).
    pub fn residual(&self, point: &[f64]) -> f64 {
        let lhs = self.activity(point);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Beb,
    Pap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMetadata {
    pub kind: ModelKind,
    pub scenario_hash: Option<String>,
    pub big_m: BigM,
    pub visit_count: usize,
    pub queue_count: usize,
}

/// Something that does not hold at a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointViolation {
    Row { row: usize, residual: f64 },
    Bound { col: ColId, residual: f64 },
    Integrality { col: ColId, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelIR {
    pub name: String,
    pub variables: VariableIndex,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(ColId, f64)>,
    pub objective_offset: f64,
    pub metadata: ModelMetadata,
}

impl ModelIR {
    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(c, a)| a * point[c.0]).sum::<f64>()
    }

    /// Rows, bounds and integrality violated by more than `tol`.
    pub fn violations(&self, point: &[f64], tol: f64) -> Vec<PointViolation> {
        assert_eq!(point.len(), self.variables.len(), "point dimension");
        let mut out = Vec::new();
        for (col, var) in self.variables.iter() {
            let x = point[col.0];
            let residual = (var.lower - x).max(x - var.upper).max(0.0);
            if residual > tol {
                out.push(PointViolation::Bound { col, residual });
            }
            if var.domain != Domain::Continuous {
                let residual = (x - x.round()).abs();
                if residual > tol {
                    out.push(PointViolation::Integrality { col, residual });
                }
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            let residual = c.residual(point);
            if residual > tol {
                out.push(PointViolation::Row { row, residual });
            }
        }
        out
    }

    pub fn is_feasible(&self, point: &[f64], tol: f64) -> bool {
        self.violations(point, tol).is_empty()
    }

    pub fn family_counts(&self) -> BTreeMap<Family, usize> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            *out.entry(c.family).or_insert(0) += 1;
        }
        out
    }

    pub fn rows_of(&self, family: Family) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints.iter().filter(move |c| c.family == family)
    }

    pub fn row_by_name(&self, name: &str) -> Option<&LinearConstraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// SHA-256 over a canonical text rendering of bounds, rows and objective.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for (_, v) in self.variables.iter() {
            h.update(format!("{} {:?} {:?} {:?}\n", v.name, v.domain, v.lower, v.upper));
        }
        for c in &self.constraints {
            let mut coeffs: Vec<(String, f64)> = c
                .coeffs
                .iter()
                .map(|&(col, a)| (self.variables.var(col).name.clone(), a))
                .collect();
            coeffs.sort_by(|x, y| x.0.cmp(&y.0));
            h.update(format!("{} {:?} {} {:?} {:?}\n", c.name, c.family, c.sense, c.rhs, coeffs));
        }
        h.update(format!("{:?} {:?}", self.objective, self.objective_offset));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Accumulates rows, dropping zero coefficients.
pub(crate) struct RowBuilder<'a> {
    pub vars: &'a VariableIndex,
    pub rows: Vec<LinearConstraint>,
}

impl<'a> RowBuilder<'a> {
    pub fn new(vars: &'a VariableIndex) -> Self {
        Self {
            vars,
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        family: Family,
        name: String,
        terms: &[(VarRef, f64)],
        sense: Sense,
        rhs: f64,
    ) {
        let coeffs = terms
            .iter()
            .filter(|(_, a)| *a != 0.0)
            .map(|&(v, a)| (self.vars.col(v), a))
            .collect();
        self.rows.push(LinearConstraint {
            name,
            coeffs,
            sense,
            rhs,
            family,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        let v = VisitId::new(11);
        let w = VisitId::new(3);
        let q = QueueId::new(6);
        for r in [
            VarRef::Start(v),
            VarRef::End(v),
            VarRef::Duration(v),
            VarRef::Soc(v),
            VarRef::Queue(v),
            VarRef::Assign(v, q),
            VarRef::Gain(v, q),
            VarRef::Before(v, w),
            VarRef::Below(w, v),
        ] {
            assert_eq!(VarRef::parse(&r.name()), Some(r));
            assert!(r.name().len() <= 8);
        }
        assert_eq!(VarRef::parse("w[0,1]"), None);
        assert_eq!(VarRef::parse("zz[1]"), None);
        assert_eq!(VarRef::parse("u[1"), None);
    }

    #[test]
    fn residual_by_sense() {
        let row = |sense| LinearConstraint {
            name: "r".into(),
            coeffs: vec![(ColId(0), 2.0)],
            sense,
            rhs: 4.0,
            family: Family::Detach,
        };
        assert_eq!(row(Sense::Le).residual(&[3.0]), 2.0);
        assert_eq!(row(Sense::Ge).residual(&[3.0]), 0.0);
        assert_eq!(row(Sense::Eq).residual(&[1.0]), 2.0);
    }
}
