//! Clearing under the Γ-failures model: up to `Γ` matched edges fail, and a
//! failed edge takes its whole cycle or chain with it.
//!
//! The adversary's best response removes the `Γ` heaviest cycles and chains,
//! so the robust objective is the nominal weight minus the `⌊Γ⌋` heaviest
//! objects and a `Γ−⌊Γ⌋` share of the next one.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde_json::{json, Value};

use crate::instance::{enumerate_cycles, CompatibilityGraph, Cycle};
use crate::matchopt::{
    self, build_picef_by_donor, decode_matching, BuiltModel, Formulation, FormulationConfig,
    Matching,
};
use crate::milp::{solve_mip, LinExpr, Relation, Sense, SolveStatus};
use crate::robust_weight::RobustError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Object {
    Cycle(usize),
    Chain(usize),
}

/// Weights of the selected cycles and non-empty chains, heaviest first;
/// ties put cycles before chains, then lower index.
fn object_weights(m: &Matching, g: &CompatibilityGraph) -> Vec<f64> {
    let mut objs: Vec<(f64, Object)> = m
        .cycles
        .iter()
        .enumerate()
        .map(|(i, c)| (c.weight, Object::Cycle(i)))
        .chain(
            m.chains
                .iter()
                .filter(|(_, es)| !es.is_empty())
                .map(|(&n, es)| (es.iter().map(|&e| g.edge(e).weight).sum(), Object::Chain(n))),
        )
        .collect();
    objs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| match (a.1, b.1) {
            (Object::Cycle(x), Object::Cycle(y)) | (Object::Chain(x), Object::Chain(y)) => {
                x.cmp(&y)
            }
            (Object::Cycle(_), Object::Chain(_)) => Ordering::Less,
            (Object::Chain(_), Object::Cycle(_)) => Ordering::Greater,
        })
    });
    objs.into_iter().map(|(w, _)| w).collect()
}

/// Worst-case weight of `m` when up to `Γ` of its edges fail.
pub fn worst_case_existence(m: &Matching, g: &CompatibilityGraph, gamma: f64) -> f64 {
    let ws = object_weights(m, g);
    let gp = gamma.max(0.0).min(ws.len() as f64);
    let full = gp.floor() as usize;
    let mut loss: f64 = ws[..full].iter().sum();
    if let Some(&w) = ws.get(full) {
        loss += (gp - full as f64) * w;
    }
    m.nominal_score - loss
}

/// Existence-robust model on top of the donor-indexed PICEF model.
///
/// The inner minimization `max {Σ α_o ŵ_o : 0 ≤ α ≤ 1, Σ α ≤ Γ}` over the
/// realized object weights is replaced by its dual
/// `min {Γθ + Σ π_o : θ + π_o ≥ ŵ_o, θ, π ≥ 0}`, with `ŵ_c = w_c z_c` for
/// cycles and `ŵ_n` the chain weight of donor `n`.
pub fn build_robust_existence_model(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    min_chain_len: usize,
    gamma: f64,
) -> BuiltModel {
    let mut built = build_picef_by_donor(g, cycles, chain_cap, min_chain_len);
    let m = &mut built.model;
    let map = &built.map;
    let theta = m
        .add_continuous("theta", 0.0, f64::INFINITY)
        .expect("fresh name");
    let mut obj = m.objective().clone();
    obj.add(theta, -gamma);

    let mut protect = |m: &mut crate::milp::MilpModel, tag: String, weight: LinExpr| {
        let pi = m
            .add_continuous(format!("pi_{tag}"), 0.0, f64::INFINITY)
            .expect("fresh name");
        let mut row = LinExpr::term(theta, 1.0).with(pi, 1.0);
        row.extend(&weight, -1.0);
        m.add_constraint(format!("dual_{tag}"), row, Relation::Ge, 0.0)
            .expect("declared variables");
        obj.add(pi, -1.0);
    };
    for (c, &z) in map.cycles.iter().zip(&map.cycle_vars) {
        if c.weight > 0.0 {
            protect(m, matchopt::cycle_var_name(c), LinExpr::term(z, c.weight));
        }
    }
    for (n, wn) in map.chain_weight_vars.iter().enumerate() {
        if let Some(wn) = *wn {
            protect(m, format!("chain_{n}"), LinExpr::term(wn, 1.0));
        }
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    if gamma.fract() != 0.0 {
        m.set_objective_granularity(None);
    }
    built
}

/// Nominal clear in which every cycle and chain weight is capped at `θ`.
///
/// For a fixed matching the robust value is `max_θ Σ_o min(ŵ_o, θ) − Γθ`
/// over its objects `o`, so the robust optimum is the best capped clear
/// minus `Γθ` over the candidate thresholds.
pub fn build_capped_model(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    min_chain_len: usize,
    theta: f64,
) -> BuiltModel {
    let capped: Vec<Cycle> = cycles
        .iter()
        .map(|c| Cycle {
            weight: c.weight.min(theta),
            ..c.clone()
        })
        .collect();
    let mut built = build_picef_by_donor(g, &capped, chain_cap, min_chain_len);
    built.map.cycles = cycles.to_vec();
    let m = &mut built.model;
    let chain_weights: Vec<_> = built
        .map
        .chain_weight_vars
        .iter()
        .flatten()
        .copied()
        .collect();
    let mut obj = LinExpr::new();
    for &(v, c) in &m.objective().terms {
        if !chain_weights.contains(&v) {
            obj.add(v, c);
        }
    }
    for (n, &wn) in chain_weights.iter().enumerate() {
        let v = m
            .add_continuous(format!("wcap_{n}"), 0.0, theta)
            .expect("fresh name");
        m.add_constraint(
            format!("wcapdef_{n}"),
            LinExpr::term(v, 1.0).with(wn, -1.0),
            Relation::Le,
            0.0,
        )
        .expect("declared variables");
        obj.add(v, 1.0);
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    if theta.fract() != 0.0 {
        m.set_objective_granularity(None);
    }
    built
}

const MAX_THRESHOLDS: usize = 64;
const MAX_CHAIN_PATHS: usize = 200_000;

/// Distinct positive cycle and chain weights (every possible chain prefix of
/// at most `chain_cap` edges), ascending. `None` if there are more than
/// [`MAX_THRESHOLDS`] of them.
fn threshold_candidates(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
) -> Option<Vec<f64>> {
    let mut seen: HashSet<u64> = HashSet::new();
    let push = |w: f64, seen: &mut HashSet<u64>| {
        if w > 0.0 {
            seen.insert(w.to_bits());
        }
        seen.len() <= MAX_THRESHOLDS
    };
    for c in cycles {
        if !push(c.weight, &mut seen) {
            return None;
        }
    }
    let mut visited = 0usize;
    let mut on_path = vec![false; g.num_pairs()];
    // (edge to follow, depth, weight before the edge)
    let mut stack: Vec<(usize, usize, f64)> = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    for n in 0..g.num_ndds() {
        if chain_cap == 0 {
            break;
        }
        stack.extend(g.ndd_out_edges(n).iter().map(|&e| (e, 1, 0.0)));
        while let Some((e, depth, before)) = stack.pop() {
            while path.len() >= depth {
                let v = path.pop().expect("non-empty path");
                on_path[v] = false;
            }
            let edge = g.edge(e);
            if on_path[edge.dst] {
                continue;
            }
            visited += 1;
            let w = before + edge.weight;
            if visited > MAX_CHAIN_PATHS || !push(w, &mut seen) {
                return None;
            }
            on_path[edge.dst] = true;
            path.push(edge.dst);
            if depth < chain_cap {
                stack.extend(g.out_edges(edge.dst).iter().map(|&f| (f, depth + 1, w)));
            }
        }
        for v in path.drain(..) {
            on_path[v] = false;
        }
    }
    let mut ts: Vec<f64> = seen.into_iter().map(f64::from_bits).collect();
    ts.sort_by(f64::total_cmp);
    Some(ts)
}

fn solve_built(built: &BuiltModel, g: &CompatibilityGraph) -> Result<(Matching, f64), RobustError> {
    let result = solve_mip(&built.model)?;
    Ok((decode_matching(&result, &built.map, g)?, result.objective))
}

/// Existence-robust clearing with failure budget `Γ`. The formulation choice
/// in `cfg` is ignored; `min_chain_len` is honoured. When every matching has
/// robust value 0, the nominal optimum is returned instead.
pub fn solve_robust_existence(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    gamma: f64,
) -> Result<Matching, RobustError> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(RobustError::Invalid(format!(
            "gamma {gamma} must be finite and non-negative"
        )));
    }
    let cfg = FormulationConfig {
        formulation: Formulation::Pitsp,
        ..cfg.clone()
    };
    cfg.validate()?;
    let cycles = enumerate_cycles(g, cfg.cycle_cap);
    let (nominal, nominal_opt) = solve_built(
        &build_picef_by_donor(g, &cycles, cfg.chain_cap, cfg.min_chain_len),
        g,
    )?;
    let best = match threshold_candidates(g, &cycles, cfg.chain_cap) {
        Some(thresholds) => {
            let mut best: Option<(Matching, f64)> = None;
            for &theta in thresholds.iter().rev() {
                let incumbent = best.as_ref().map_or(1e-9, |b| b.1);
                if nominal_opt - gamma * theta <= incumbent + 1e-9 {
                    continue;
                }
                let mut built =
                    build_capped_model(g, &cycles, cfg.chain_cap, cfg.min_chain_len, theta);
                built.model.set_cutoff(Some(incumbent + gamma * theta));
                let result = solve_mip(&built.model)?;
                if result.status == SolveStatus::Cutoff {
                    continue;
                }
                let m = decode_matching(&result, &built.map, g)?;
                best = Some((m, result.objective - gamma * theta));
            }
            best
        }
        None => {
            let built =
                build_robust_existence_model(g, &cycles, cfg.chain_cap, cfg.min_chain_len, gamma);
            Some(solve_built(&built, g)?).filter(|(_, v)| *v > 1e-9)
        }
    };
    let mut m = best.map_or(nominal, |(m, _)| m);
    m.robust_score = Some(worst_case_existence(&m, g, gamma));
    Ok(m)
}

/// JSON report for an existence-robust solve.
pub fn report_json(m: &Matching, gamma: f64) -> Value {
    json!({
        "model": "existence",
        "gamma": gamma,
        "nominal_score": m.nominal_score,
        "robust_score": m.robust_score.unwrap_or(m.nominal_score),
        "matching": m.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BloodType, Edge, PairVertex, VertexRef};

    fn three_cycles() -> (CompatibilityGraph, Matching) {
        let pairs = (0..6)
            .map(|id| PairVertex {
                id,
                cpra: 0.0,
                blood_type_patient: BloodType::O,
                blood_type_donor: BloodType::O,
            })
            .collect();
        let spec = [
            (0, 1, 2.0),
            (1, 0, 2.0),
            (2, 3, 0.75),
            (3, 2, 0.75),
            (4, 5, 0.75),
            (5, 4, 0.75),
        ];
        let edges = spec
            .iter()
            .enumerate()
            .map(|(id, &(s, d, w))| Edge {
                id,
                src: VertexRef::Pair(s),
                dst: d,
                weight: w,
                discount: 0.0,
            })
            .collect();
        let g = CompatibilityGraph::new(pairs, vec![], edges).unwrap();
        let m = Matching::new(&g, enumerate_cycles(&g, 2), Default::default());
        (g, m)
    }

    #[test]
    fn fractional_budget_example() {
        let (g, m) = three_cycles();
        assert_eq!(worst_case_existence(&m, &g, 0.0), 7.0);
        assert!((worst_case_existence(&m, &g, 1.5) - 2.25).abs() < 1e-12);
        assert_eq!(worst_case_existence(&m, &g, 3.0), 0.0);
        assert_eq!(worst_case_existence(&m, &g, 9.0), 0.0);
    }

    #[test]
    fn report_is_tagged() {
        let (g, m) = three_cycles();
        let v = report_json(&m, 1.0);
        assert_eq!(v["model"], "existence");
        assert_eq!(v["matching"]["cycles"].as_array().unwrap().len(), 3);
        let _ = g;
    }
}
