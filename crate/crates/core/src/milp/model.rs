use std::collections::HashMap;
use std::fmt;

use super::MilpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstrId(pub(crate) usize);

impl ConstrId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Sparse linear expression `Σ coef·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        LinExpr {
            terms: vec![(var, coef)],
            constant: 0.0,
        }
    }

    pub fn add(&mut self, var: VarId, coef: f64) -> &mut Self {
        self.terms.push((var, coef));
        self
    }

    pub fn with(mut self, var: VarId, coef: f64) -> Self {
        self.terms.push((var, coef));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn extend(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        LinExpr {
            terms: vars.into_iter().map(|v| (v, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    /// Merges duplicate variables and drops zero coefficients, keeping first
    /// occurrence order.
    pub(crate) fn normalized(&self) -> LinExpr {
        let mut pos: HashMap<VarId, usize> = HashMap::new();
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &(v, c) in &self.terms {
            match pos.get(&v) {
                Some(&i) => terms[i].1 += c,
                None => {
                    pos.insert(v, terms.len());
                    terms.push((v, c));
                }
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        LinExpr {
            terms,
            constant: self.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Normalized terms; the expression constant is folded into `rhs`.
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Backend-neutral mixed-integer linear program.
#[derive(Debug, Clone)]
pub struct MilpModel {
    vars: Vec<Variable>,
    var_names: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    constr_names: HashMap<String, ConstrId>,
    objective: LinExpr,
    sense: Sense,
    granularity: Option<f64>,
    cutoff: Option<f64>,
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl MilpModel {
    pub fn new() -> Self {
        MilpModel {
            vars: Vec::new(),
            var_names: HashMap::new(),
            constraints: Vec::new(),
            constr_names: HashMap::new(),
            objective: LinExpr::new(),
            sense: Sense::Maximize,
            granularity: None,
            cutoff: None,
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        let name = name.into();
        if self.var_names.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        let id = VarId(self.vars.len());
        self.var_names.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    fn check_expr(&self, expr: &LinExpr) -> Result<(), MilpError> {
        for &(v, c) in &expr.terms {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(MilpError::NonFinite(self.vars[v.0].name.clone()));
            }
        }
        Ok(())
    }

    /// Adds `expr (rel) rhs`; any constant in `expr` moves to the right side.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConstrId, MilpError> {
        let name = name.into();
        if self.constr_names.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        self.check_expr(&expr)?;
        if !rhs.is_finite() || !expr.constant.is_finite() {
            return Err(MilpError::NonFinite(name));
        }
        let expr = expr.normalized();
        let id = ConstrId(self.constraints.len());
        self.constr_names.insert(name.clone(), id);
        self.constraints.push(Constraint {
            name,
            terms: expr.terms,
            relation,
            rhs: rhs - expr.constant,
        });
        Ok(id)
    }

    /// Adds a coefficient for `var` to an existing constraint (column
    /// generation).
    pub fn add_to_constraint(
        &mut self,
        constr: ConstrId,
        var: VarId,
        coef: f64,
    ) -> Result<(), MilpError> {
        if var.0 >= self.vars.len() {
            return Err(MilpError::UnknownVariable(var.0));
        }
        let c = self
            .constraints
            .get_mut(constr.0)
            .ok_or(MilpError::UnknownConstraint(constr.0))?;
        match c.terms.iter_mut().find(|(v, _)| *v == var) {
            Some(t) => t.1 += coef,
            None => c.terms.push((var, coef)),
        }
        Ok(())
    }

    /// Replaces the objective.
    pub fn set_objective(&mut self, sense: Sense, expr: LinExpr) -> Result<(), MilpError> {
        self.check_expr(&expr)?;
        self.sense = sense;
        self.objective = expr.normalized();
        Ok(())
    }

    pub fn add_objective_term(&mut self, var: VarId, coef: f64) -> Result<(), MilpError> {
        self.check_expr(&LinExpr::term(var, coef))?;
        self.objective.add(var, coef);
        self.objective = self.objective.normalized();
        Ok(())
    }

    /// Declares that, at every integral assignment of the binaries, the best
    /// completion's objective (without its constant) is a multiple of `step`.
    /// Branch and bound uses it to prune nodes that cannot reach the next
    /// multiple above the incumbent.
    pub fn set_objective_granularity(&mut self, step: Option<f64>) {
        self.granularity = step.filter(|s| *s > 0.0 && s.is_finite());
    }

    pub fn objective_granularity(&self) -> Option<f64> {
        self.granularity
    }

    /// Only solutions strictly better than `cutoff` are wanted; if there are
    /// none the solve ends with [`SolveStatus::Cutoff`](super::SolveStatus).
    pub fn set_cutoff(&mut self, cutoff: Option<f64>) {
        self.cutoff = cutoff;
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), MilpError> {
        let v = self
            .vars
            .get_mut(var.0)
            .ok_or(MilpError::UnknownVariable(var.0))?;
        if lower > upper {
            return Err(MilpError::InvalidBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_names.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConstrId) -> &Constraint {
        &self.constraints[c.0]
    }

    pub fn constr_by_name(&self, name: &str) -> Option<ConstrId> {
        self.constr_names.get(name).copied()
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    /// Largest constraint or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_and_unknown() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x").unwrap();
        assert!(matches!(
            m.add_binary("x"),
            Err(MilpError::DuplicateName(_))
        ));
        let ghost = VarId(7);
        let err = m
            .add_constraint("c", LinExpr::term(ghost, 1.0), Relation::Le, 1.0)
            .unwrap_err();
        assert!(matches!(err, MilpError::UnknownVariable(7)));
        m.add_constraint("c", LinExpr::term(x, 1.0), Relation::Le, 1.0)
            .unwrap();
        assert!(matches!(
            m.add_constraint("c", LinExpr::term(x, 1.0), Relation::Le, 1.0),
            Err(MilpError::DuplicateName(_))
        ));
        assert!(m.add_continuous("y", 2.0, 1.0).is_err());
    }

    #[test]
    fn constants_fold_into_rhs_and_terms_merge() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let mut e = LinExpr::term(x, 1.0);
        e.add(x, 2.0).add_constant(4.0);
        let c = m.add_constraint("c", e, Relation::Le, 10.0).unwrap();
        assert_eq!(m.constraint(c).terms, vec![(x, 3.0)]);
        assert_eq!(m.constraint(c).rhs, 6.0);
    }

    #[test]
    fn objective_is_replaced() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        m.set_objective(Sense::Maximize, LinExpr::term(x, 1.0))
            .unwrap();
        m.set_objective(Sense::Minimize, LinExpr::term(y, 2.0))
            .unwrap();
        assert_eq!(m.objective().terms, vec![(y, 2.0)]);
        assert_eq!(m.sense(), Sense::Minimize);
    }
}
