//! Mixed-integer linear programming layer.
//!
//! Formulation modules build a [`MilpModel`] and hand it to a [`MipBackend`].
//! The built-in [`BranchAndBound`] backend runs a dense bounded simplex with
//! depth-first branching on the binary closest to 0.5.

mod bnb;
mod lpfile;
mod model;
mod simplex;

pub use bnb::BranchAndBound;
pub use lpfile::write_lp;
pub use model::{
    ConstrId, Constraint, LinExpr, MilpModel, Relation, Sense, VarId, VarKind, Variable,
};

use thiserror::Error;

/// Integrality and feasibility tolerance on returned solutions.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    InvalidBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("unknown constraint index {0}")]
    UnknownConstraint(usize),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("simplex iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("branch-and-bound node limit {0} reached")]
    NodeLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Feasible, but nothing beats the model's cutoff.
    Cutoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective including the expression constant; 0 unless optimal.
    pub objective: f64,
    /// One value per declared variable; empty unless optimal.
    pub values: Vec<f64>,
    /// Binaries are exactly 0 or 1 in `values`.
    pub integral: bool,
    pub nodes: usize,
}

impl SolveResult {
    pub(crate) fn without_solution(status: SolveStatus, nodes: usize) -> Self {
        SolveResult {
            status,
            objective: 0.0,
            values: Vec::new(),
            integral: false,
            nodes,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Dual value per constraint, in declaration order. Sign convention:
    /// d(objective)/d(rhs).
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    names: Vec<String>,
}

impl LpResult {
    pub fn dual(&self, c: ConstrId) -> f64 {
        self.duals[c.index()]
    }

    pub fn dual_by_name(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.duals[i])
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }

    pub fn constraint_names(&self) -> &[String] {
        &self.names
    }
}

/// Seam for plugging in an external solver.
pub trait MipBackend {
    fn solve_mip(&self, model: &MilpModel) -> Result<SolveResult, MilpError>;
    fn solve_lp(&self, model: &MilpModel) -> Result<LpResult, MilpError>;
}

/// Solves `model` to global optimality with the built-in engine.
pub fn solve_mip(model: &MilpModel) -> Result<SolveResult, MilpError> {
    BranchAndBound::default().solve_mip(model)
}

/// Solves the LP relaxation (binaries relaxed to [0, 1]) with duals.
pub fn solve_lp_relaxation(model: &MilpModel) -> Result<LpResult, MilpError> {
    BranchAndBound::default().solve_lp(model)
}

pub(crate) fn lp_from_tableau(
    model: &MilpModel,
    status: simplex::LpStatus,
    t: &simplex::Tableau,
) -> LpResult {
    let names = model.constraints().iter().map(|c| c.name.clone()).collect();
    match status {
        simplex::LpStatus::Optimal => LpResult {
            status: SolveStatus::Optimal,
            objective: t.objective() + model.objective().constant,
            values: t.values().to_vec(),
            duals: t.duals(),
            reduced_costs: t.reduced_costs(),
            names,
        },
        other => LpResult {
            status: if other == simplex::LpStatus::Infeasible {
                SolveStatus::Infeasible
            } else {
                SolveStatus::Unbounded
            },
            objective: 0.0,
            values: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            names,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_is_optimal_zero() {
        let m = MilpModel::new();
        let r = solve_mip(&m).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn two_binaries_sharing_a_unit_row() {
        let mut m = MilpModel::new();
        let x1 = m.add_binary("x1").unwrap();
        let x2 = m.add_binary("x2").unwrap();
        m.add_constraint("c", LinExpr::sum([x1, x2]), Relation::Le, 1.0)
            .unwrap();
        m.set_objective(Sense::Maximize, LinExpr::sum([x1, x2]))
            .unwrap();
        let r = solve_mip(&m).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-9);
        assert!(r.integral);
    }

    #[test]
    fn bound_conflict_is_infeasible() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_constraint("lo", LinExpr::term(x, 1.0), Relation::Ge, 2.0)
            .unwrap();
        assert_eq!(solve_mip(&m).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(
            solve_lp_relaxation(&m).unwrap().status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn relaxed_binary_takes_fractional_value() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x").unwrap();
        m.add_constraint("half", LinExpr::term(x, 1.0), Relation::Le, 0.5)
            .unwrap();
        m.set_objective(Sense::Maximize, LinExpr::term(x, 1.0))
            .unwrap();
        let lp = solve_lp_relaxation(&m).unwrap();
        assert!((lp.objective - 0.5).abs() < 1e-9);
        assert!((lp.dual_by_name("half").unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(solve_mip(&m).unwrap().objective, 0.0);
    }

    #[test]
    fn unbounded_lp() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(Sense::Maximize, LinExpr::term(x, 1.0))
            .unwrap();
        assert_eq!(solve_mip(&m).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn minimization_with_equality_and_free_variable() {
        // min x + 2y  s.t.  x - y = 1, x + y >= 3, y free.
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let y = m
            .add_continuous("y", f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        m.add_constraint("eq", LinExpr::term(x, 1.0).with(y, -1.0), Relation::Eq, 1.0)
            .unwrap();
        m.add_constraint("ge", LinExpr::sum([x, y]), Relation::Ge, 3.0)
            .unwrap();
        m.set_objective(Sense::Minimize, LinExpr::term(x, 1.0).with(y, 2.0))
            .unwrap();
        let lp = solve_lp_relaxation(&m).unwrap();
        assert!((lp.objective - 4.0).abs() < 1e-9);
        let dual_obj = lp.duals[0] * 1.0 + lp.duals[1] * 3.0;
        assert!((dual_obj - 4.0).abs() < 1e-9);
    }
}
