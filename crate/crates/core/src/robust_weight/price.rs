use std::collections::{HashMap, HashSet};

use crate::instance::{enumerate_cycles, CompatibilityGraph, Cycle};
use crate::matchopt::{cycle_var_name, decode_matching, MatchError, Matching};
use crate::milp::{solve_lp_relaxation, SolveResult, SolveStatus, VarKind, INT_TOL};

use super::model::build_with;
use super::{worst_case_weight, RobustError};

/// Discount threshold `d*`: the `⌈Γ⌉`-th highest discount in the graph
/// (`+∞` when `Γ = 0`, the smallest discount when `⌈Γ⌉ > |E|`).
pub(crate) fn discount_threshold(g: &CompatibilityGraph, gamma: f64) -> f64 {
    let k = gamma.ceil() as usize;
    if k == 0 {
        return f64::INFINITY;
    }
    let mut ds: Vec<f64> = g.edges().iter().map(|e| e.discount).collect();
    ds.sort_by(|a, b| b.total_cmp(a));
    ds.get(k - 1)
        .or(ds.last())
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// A candidate cycle with its two prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedCycle {
    pub cycle: Cycle,
    /// `Σ_{e∈c} (w*_e − δ_v)` with `w*_e = w_e − d_e` for `d_e ≥ d*`.
    pub modified_price: f64,
    /// Reduced cost of the cycle column in the current LP.
    pub reduced_cost: f64,
}

impl PricedCycle {
    pub fn price(&self) -> f64 {
        self.modified_price.max(self.reduced_cost)
    }
}

/// Prices `candidates` against the duals of an LP relaxation of the
/// weight-robust model. A cycle is returned when either its
/// modified-weight price or its exact reduced cost is positive, so no
/// cycle with a positive reduced cost is ever dropped.
pub fn cycle_price(
    g: &CompatibilityGraph,
    candidates: &[Cycle],
    lp: &crate::milp::LpResult,
    gamma: f64,
) -> Vec<PricedCycle> {
    let duals: HashMap<&str, f64> = lp
        .constraint_names()
        .iter()
        .map(String::as_str)
        .zip(lp.duals.iter().copied())
        .collect();
    let dual = |name: String| duals.get(name.as_str()).copied().unwrap_or(0.0);
    let d_star = discount_threshold(g, gamma);
    candidates
        .iter()
        .filter_map(|c| {
            let mut modified = 0.0;
            let mut reduced = c.weight;
            for &e in &c.edges {
                let edge = g.edge(e);
                let delta = dual(format!("cap_{}", edge.dst));
                let w_star = if edge.discount >= d_star {
                    edge.weight - edge.discount
                } else {
                    edge.weight
                };
                modified += w_star - delta;
                // z_c enters `ŷ_e − Σ … = 0` with coefficient −1.
                reduced += -delta + dual(format!("yhatdef_{e}"));
            }
            let pc = PricedCycle {
                cycle: c.clone(),
                modified_price: modified,
                reduced_cost: reduced,
            };
            (pc.price() > 1e-9).then_some(pc)
        })
        .collect()
}

/// Branch-and-price for the constant-budget model, starting from an empty
/// cycle set. Each node re-solves its LP relaxation with the node's
/// fixings, prices cycles until none has a positive price, and is pruned
/// against the incumbent.
pub(crate) fn branch_and_price(
    g: &CompatibilityGraph,
    cycle_cap: usize,
    chain_cap: usize,
    gamma: f64,
) -> Result<Matching, RobustError> {
    let all_cycles = enumerate_cycles(g, cycle_cap);
    let mut cycle_edges = vec![false; g.num_edges()];
    for c in &all_cycles {
        for &e in &c.edges {
            cycle_edges[e] = true;
        }
    }
    let mut pool: Vec<Cycle> = Vec::new();
    let mut in_pool: HashSet<String> = HashSet::new();
    let mut incumbent: Option<(f64, Matching)> = None;
    let mut stack: Vec<Vec<(String, f64)>> = vec![Vec::new()];

    while let Some(fixings) = stack.pop() {
        let (built, lp) = loop {
            let mut built = build_with(g, &pool, Some(&cycle_edges), chain_cap, gamma, None);
            for (name, v) in &fixings {
                let var = built
                    .model
                    .var_by_name(name)
                    .expect("fixed variable exists");
                built.model.set_bounds(var, *v, *v).expect("binary bounds");
            }
            let lp = solve_lp_relaxation(&built.model)?;
            if lp.status != SolveStatus::Optimal {
                break (built, lp);
            }
            let candidates: Vec<Cycle> = all_cycles
                .iter()
                .filter(|c| !in_pool.contains(&cycle_var_name(c)))
                .cloned()
                .collect();
            let priced = cycle_price(g, &candidates, &lp, gamma);
            if priced.is_empty() {
                break (built, lp);
            }
            for pc in priced {
                in_pool.insert(cycle_var_name(&pc.cycle));
                pool.push(pc.cycle);
            }
        };
        if lp.status != SolveStatus::Optimal {
            continue;
        }
        if let Some((best, _)) = &incumbent {
            if lp.objective <= best + 1e-7 {
                continue;
            }
        }
        let mut branch: Option<(usize, f64)> = None;
        for (j, v) in built.model.variables().iter().enumerate() {
            if v.kind != VarKind::Binary {
                continue;
            }
            let x = lp.values[j];
            if x.min(1.0 - x) <= INT_TOL {
                continue;
            }
            let dist = (x - 0.5).abs();
            if branch.map_or(true, |(_, d)| dist < d - 1e-12) {
                branch = Some((j, dist));
            }
        }
        match branch {
            None => {
                let mut values = lp.values.clone();
                for (x, v) in values.iter_mut().zip(built.model.variables()) {
                    if v.kind == VarKind::Binary {
                        *x = x.round();
                    }
                }
                let result = SolveResult {
                    status: SolveStatus::Optimal,
                    objective: built.model.objective().evaluate(&values),
                    values,
                    integral: true,
                    nodes: 0,
                };
                let m = decode_matching(&result, &built.map, g).map_err(RobustError::Match)?;
                let score = worst_case_weight(&m, g, gamma);
                if incumbent.as_ref().map_or(true, |(b, _)| score > *b + 1e-9) {
                    incumbent = Some((score, m));
                }
            }
            Some((j, _)) => {
                let name = built.model.variables()[j].name.clone();
                let mut down = fixings.clone();
                down.push((name.clone(), 0.0));
                let mut up = fixings;
                up.push((name, 1.0));
                stack.push(down);
                stack.push(up);
            }
        }
    }
    incumbent
        .map(|(_, m)| m)
        .ok_or(RobustError::Match(MatchError::NotOptimal(
            SolveStatus::Infeasible,
        )))
}
