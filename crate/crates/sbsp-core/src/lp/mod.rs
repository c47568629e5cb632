//! Sparse min-max LP models over start-indicator and running-sum variables,
//! the builders for the three formulations used by the toolkit, solution
//! extraction, and MPS import/export.

mod build;
mod fractional;
pub mod mps;

pub use build::{build_lp3s, build_lp3x, build_school_polytope, build_ssp_lp};
pub use fractional::{extract_fractional, s_from_x, x_from_s, FractionalSchedule};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on generated rows; above it the builder refuses.
pub const MAX_ROWS: u128 = 50_000_000;
/// Soft ceiling; above it the builder logs a warning with the tally.
pub const ROW_WARN: u128 = 5_000_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("model too large: {rows} rows estimated (limit {MAX_ROWS})")]
    TooLarge { rows: u128 },
    #[error("solution violates row {row} by {violation:.3e}")]
    SolutionInfeasible { row: String, violation: f64 },
    #[error("solution violates bounds of column {column} by {violation:.3e}")]
    BoundViolated { column: String, violation: f64 },
    #[error("numerical consistency failure: {0}")]
    NumericalDrift(String),
    #[error("model kind {0:?} does not describe a fractional schedule")]
    NotASchedule(ModelKind),
    #[error("malformed MPS input: {0}")]
    MalformedMps(String),
    #[error("solution file: {0}")]
    MalformedSolution(String),
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Identity of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKey {
    /// Start-indicator mass for a route at a slot (`x`-style variables; the
    /// shared-start model stores its per-school variable under route 0).
    Start { school: usize, route: usize, slot: u32 },
    /// Running-sum variable for a route at a slot.
    Prefix { school: usize, route: usize, slot: u32 },
    /// The min-max objective variable.
    MaxLoad,
    /// Column of an imported model, identified only by position.
    External(usize),
}

impl VarKey {
    pub fn name(&self) -> String {
        match *self {
            VarKey::Start { school, route, slot } => format!("x_{school}_{route}_{slot}"),
            VarKey::Prefix { school, route, slot } => format!("S_{school}_{route}_{slot}"),
            VarKey::MaxLoad => "z".to_string(),
            VarKey::External(i) => format!("c{i}"),
        }
    }
}

/// Which formulation a model instance encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Running-sum formulation of the windowed problem (the workhorse).
    PrefixSbsp,
    /// Shared-start relaxation of the zero-window problem.
    SharedStartSsp,
    /// Start-indicator formulation of the windowed problem (cross-checks).
    StartSbsp,
    /// Single-school running-sum polytope, no load rows or objective column.
    SchoolPolytope,
    /// Read back from an MPS document.
    Imported,
}

/// One sparse constraint row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    /// `(column, coefficient)` pairs in ascending column order.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Positive amount by which `values` violates this row.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A sparse LP: minimize `objective · v` subject to the rows and bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpModel {
    pub name: String,
    pub kind: ModelKind,
    pub num_vars: usize,
    /// Sparse objective, ascending column order.
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Row>,
    /// Per-column `[lo, hi]`; `f64::INFINITY` marks a free side.
    pub bounds: Vec<(f64, f64)>,
    /// Column identities, index-aligned with values vectors.
    pub keys: Vec<VarKey>,
    /// Routes per school of the originating instance (empty for imports).
    pub shape: Vec<usize>,
    /// Horizon length `M` of the originating instance (0 for imports).
    pub slots: u32,
    /// Columns the solver should park at their upper bound initially; the
    /// builders use it to start primal-feasible up to the load rows.
    #[serde(default)]
    pub start_at_upper: Vec<bool>,
    #[serde(skip)]
    index: HashMap<VarKey, usize>,
}

impl LpModel {
    pub(crate) fn new(name: String, kind: ModelKind, shape: Vec<usize>, slots: u32) -> Self {
        LpModel {
            name,
            kind,
            num_vars: 0,
            objective: Vec::new(),
            rows: Vec::new(),
            bounds: Vec::new(),
            keys: Vec::new(),
            shape,
            slots,
            start_at_upper: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub(crate) fn add_var(&mut self, key: VarKey, lo: f64, hi: f64) -> usize {
        let col = self.num_vars;
        self.num_vars += 1;
        self.bounds.push((lo, hi));
        self.keys.push(key);
        self.start_at_upper.push(false);
        self.index.insert(key, col);
        col
    }

    /// Column index of a structural key, if present.
    pub fn col(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn col_name(&self, col: usize) -> String {
        self.keys[col].name()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Rebuild the key lookup (needed after deserialization).
    pub fn reindex(&mut self) {
        self.index = self
            .keys
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, i))
            .collect();
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// First row violated beyond `tol`, with its violation.
    pub fn worst_violation(&self, values: &[f64], tol: f64) -> Option<(&Row, f64)> {
        self.rows.iter().find_map(|r| {
            let v = r.violation(values);
            (v > tol).then_some((r, v))
        })
    }

    /// Tally rows by name prefix (the part before the first `_`).
    pub fn row_tallies(&self) -> std::collections::BTreeMap<String, usize> {
        let mut tallies = std::collections::BTreeMap::new();
        for row in &self.rows {
            let tag = row.name.split('_').next().unwrap_or("").to_string();
            *tallies.entry(tag).or_insert(0) += 1;
        }
        tallies
    }

    /// Structural summary for experiment logs.
    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            name: self.name.clone(),
            vars: self.num_vars,
            rows: self.num_rows(),
            nonzeros: self.nonzeros(),
            rows_by_tag: self.row_tallies(),
        }
    }
}

/// Variable/row tallies of a built model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub vars: usize,
    pub rows: usize,
    pub nonzeros: usize,
    pub rows_by_tag: std::collections::BTreeMap<String, usize>,
}
