//! In-memory MILP representation.
//!
//! A [`MilpModel`] is a flat list of columns (bounds plus integrality), a list
//! of named linear rows, and a linear objective. Every column and row carries a
//! unique semantic name, and the model keeps a registry from names to indices
//! so downstream code never has to remember column positions.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::MilpError;

/// Column index into [`MilpModel::variables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Row index into [`MilpModel::constraints`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

impl Variable {
    /// Both bounds pinned to the same value.
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Grouping label used by violation reports (e.g. "soe", "endurance").
    pub family: Cow<'static, str>,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates this row; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    /// Dense coefficient vector, one entry per column.
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    var_index: HashMap<String, VarId>,
    row_index: HashMap<String, RowId>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>, sense: ObjSense) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective {
                sense,
                coeffs: Vec::new(),
                constant: 0.0,
            },
            var_index: HashMap::new(),
            row_index: HashMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integral(&self) -> usize {
        self.variables.iter().filter(|v| v.kind.is_integral()).count()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, MilpError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        if self.var_index.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        let id = VarId(self.variables.len());
        self.var_index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        self.objective.coeffs.push(0.0);
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    /// Adds a row. Repeated columns in `terms` are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        family: impl Into<Cow<'static, str>>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, MilpError> {
        let name = name.into();
        if self.row_index.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        if !rhs.is_finite() {
            return Err(MilpError::NonFinite(name));
        }
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, a) in terms {
            if v.0 >= self.variables.len() {
                return Err(MilpError::UnknownColumn { row: name, col: v.0 });
            }
            if !a.is_finite() {
                return Err(MilpError::NonFinite(name));
            }
            *merged.entry(v).or_insert(0.0) += a;
        }
        let terms = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
        let id = RowId(self.constraints.len());
        self.row_index.insert(name.clone(), id);
        self.constraints.push(Constraint {
            name,
            family: family.into(),
            terms,
            sense,
            rhs,
        });
        Ok(id)
    }

    pub fn add_objective_term(&mut self, v: VarId, coeff: f64) {
        self.objective.coeffs[v.0] += coeff;
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) -> Result<(), MilpError> {
        let var = &mut self.variables[v.0];
        if lower > upper || (var.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
            return Err(MilpError::InvalidBounds {
                name: var.name.clone(),
                lower,
                upper,
            });
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn row(&self, name: &str) -> Option<RowId> {
        self.row_index.get(name).copied()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v.0].name
    }

    /// Structural checks: bounds ordered, binaries inside [0,1], every row
    /// references registered columns, registry consistent with the lists.
    pub fn check(&self) -> Result<(), MilpError> {
        if self.objective.coeffs.len() != self.variables.len() {
            return Err(MilpError::Inconsistent("objective length".into()));
        }
        if self.var_index.len() != self.variables.len() || self.row_index.len() != self.constraints.len() {
            return Err(MilpError::Inconsistent("registry size".into()));
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.var_index.get(&v.name) != Some(&VarId(i)) {
                return Err(MilpError::Inconsistent(format!("registry entry for {}", v.name)));
            }
            if !(v.lower <= v.upper) || (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
                return Err(MilpError::InvalidBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if self.row_index.get(&c.name) != Some(&RowId(i)) {
                return Err(MilpError::Inconsistent(format!("registry entry for {}", c.name)));
            }
            if let Some(&(v, _)) = c.terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
                return Err(MilpError::UnknownColumn {
                    row: c.name.clone(),
                    col: v.0,
                });
            }
        }
        Ok(())
    }

    /// Re-evaluates every row, bound and integrality requirement at `x`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Result<ViolationReport, MilpError> {
        if x.len() != self.variables.len() {
            return Err(MilpError::LengthMismatch {
                expected: self.variables.len(),
                got: x.len(),
            });
        }
        let mut report = ViolationReport::new(tol);
        for (v, &val) in self.variables.iter().zip(x) {
            let below = (v.lower - val).max(0.0);
            let above = (val - v.upper).max(0.0);
            report.record("bounds", &v.name, below.max(above));
            if v.kind.is_integral() {
                report.record("integrality", &v.name, (val - val.round()).abs());
            }
        }
        for c in &self.constraints {
            report.record(&c.family, &c.name, c.violation(x));
        }
        Ok(report)
    }
}

/// Worst violation per constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyViolation {
    pub family: String,
    pub worst_row: String,
    pub magnitude: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub tolerance: f64,
    families: BTreeMap<String, FamilyViolation>,
}

impl ViolationReport {
    fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            families: BTreeMap::new(),
        }
    }

    fn record(&mut self, family: &str, row: &str, magnitude: f64) {
        if !(magnitude > self.tolerance) && !magnitude.is_nan() {
            return;
        }
        let entry = self
            .families
            .entry(family.to_string())
            .or_insert_with(|| FamilyViolation {
                family: family.to_string(),
                worst_row: row.to_string(),
                magnitude,
                count: 0,
            });
        entry.count += 1;
        if magnitude > entry.magnitude || magnitude.is_nan() {
            entry.magnitude = magnitude;
            entry.worst_row = row.to_string();
        }
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn families(&self) -> impl Iterator<Item = &FamilyViolation> {
        self.families.values()
    }

    pub fn family(&self, name: &str) -> Option<&FamilyViolation> {
        self.families.get(name)
    }

    pub fn worst(&self) -> f64 {
        self.families.values().map(|f| f.magnitude).fold(0.0, f64::max)
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "no violations above {:e}", self.tolerance);
        }
        for v in self.families.values() {
            writeln!(
                f,
                "{}: {} rows, worst {:e} at {}",
                v.family, v.count, v.magnitude, v.worst_row
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MilpModel {
        let mut m = MilpModel::new("t", ObjSense::Maximize);
        let x = m.add_continuous("x", 0.0, 4.0).unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_constraint("cap", "cap", [(x, 1.0), (y, 2.0)], Sense::Le, 5.0)
            .unwrap();
        m.add_objective_term(x, 1.0);
        m
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = small();
        assert!(matches!(m.add_binary("y"), Err(MilpError::DuplicateName(_))));
        let x = m.var("x").unwrap();
        assert!(m
            .add_constraint("cap", "cap", [(x, 1.0)], Sense::Le, 1.0)
            .is_err());
    }

    #[test]
    fn rows_merge_repeated_terms() {
        let mut m = small();
        let x = m.var("x").unwrap();
        let r = m
            .add_constraint("r", "f", [(x, 1.0), (x, 2.0)], Sense::Ge, 0.0)
            .unwrap();
        assert_eq!(m.constraints[r.0].terms, vec![(x, 3.0)]);
    }

    #[test]
    fn unknown_column_rejected() {
        let mut m = small();
        let err = m.add_constraint("bad", "f", [(VarId(9), 1.0)], Sense::Le, 0.0);
        assert!(matches!(err, Err(MilpError::UnknownColumn { .. })));
    }

    #[test]
    fn bad_bounds_rejected() {
        let mut m = small();
        assert!(m.add_continuous("z", 2.0, 1.0).is_err());
        assert!(m.add_var("b", 0.0, 2.0, VarKind::Binary).is_err());
    }

    #[test]
    fn violation_report_groups_by_family() {
        let m = small();
        m.check().unwrap();
        let ok = m.violations(&[3.0, 1.0], 1e-6).unwrap();
        assert!(ok.is_empty());
        let bad = m.violations(&[4.0, 1.0], 1e-6).unwrap();
        let cap = bad.family("cap").unwrap();
        assert!((cap.magnitude - 1.0).abs() < 1e-12);
        let frac = m.violations(&[0.0, 0.5], 1e-6).unwrap();
        assert!(frac.family("integrality").is_some());
    }
}
