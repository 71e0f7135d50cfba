use crate::instance::{CompatibilityGraph, Cycle, VertexRef};
use crate::milp::{LinExpr, MilpModel, Relation, Sense};

use super::{chain_distances, cycle_var_name, unit_granularity, BuiltModel, ChainVar, DecodeMap};

/// Position-indexed chain-edge formulation.
///
/// NDD edges only occur at position 1; an edge leaving pair `u` can occur at
/// positions `dist(u)+1 ..= L`, where `dist(u)` is the shortest chain
/// reaching `u`. `L = 0` yields a cycle-only model.
pub fn build_picef(g: &CompatibilityGraph, cycles: &[Cycle], chain_cap: usize) -> BuiltModel {
    let mut m = MilpModel::new();
    let cycle_vars: Vec<_> = cycles
        .iter()
        .map(|c| m.add_binary(cycle_var_name(c)).expect("fresh name"))
        .collect();

    let mut chain_vars = Vec::new();
    if chain_cap > 0 {
        let all_ndds: Vec<usize> = (0..g.num_ndds()).collect();
        let dist = chain_distances(g, &all_ndds);
        for e in g.edges() {
            let positions = match e.src {
                VertexRef::Ndd(_) => 1..=1,
                VertexRef::Pair(u) if dist[u] < chain_cap => dist[u] + 1..=chain_cap,
                VertexRef::Pair(_) => continue,
            };
            for k in positions {
                let var = m.add_binary(format!("y_{}_{k}", e.id)).expect("fresh name");
                chain_vars.push(ChainVar {
                    ndd: None,
                    edge: e.id,
                    position: k,
                    var,
                });
            }
        }
    }

    let mut obj = LinExpr::new();
    for (c, &z) in cycles.iter().zip(&cycle_vars) {
        obj.add(z, c.weight);
    }
    for cv in &chain_vars {
        obj.add(cv.var, g.edge(cv.edge).weight);
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    m.set_objective_granularity(unit_granularity(g, cycles));

    // Vertex capacity.
    let mut cap: Vec<LinExpr> = vec![LinExpr::new(); g.num_pairs()];
    for cv in &chain_vars {
        cap[g.edge(cv.edge).dst].add(cv.var, 1.0);
    }
    for (c, &z) in cycles.iter().zip(&cycle_vars) {
        for &v in &c.vertices {
            cap[v].add(z, 1.0);
        }
    }
    for (v, expr) in cap.into_iter().enumerate() {
        if !expr.terms.is_empty() {
            m.add_constraint(format!("cap_{v}"), expr, Relation::Le, 1.0)
                .expect("declared variables");
        }
    }

    // One chain per NDD.
    let mut ndd_rows: Vec<LinExpr> = vec![LinExpr::new(); g.num_ndds()];
    for cv in &chain_vars {
        if let VertexRef::Ndd(n) = g.edge(cv.edge).src {
            ndd_rows[n].add(cv.var, 1.0);
        }
    }
    for (n, expr) in ndd_rows.into_iter().enumerate() {
        if !expr.terms.is_empty() {
            m.add_constraint(format!("ndd_{n}"), expr, Relation::Le, 1.0)
                .expect("declared variables");
        }
    }

    // Chain flow: leaving v at position k+1 requires entering v at k.
    let mut flow: std::collections::BTreeMap<(usize, usize), LinExpr> = Default::default();
    for cv in &chain_vars {
        let e = g.edge(cv.edge);
        if let VertexRef::Pair(u) = e.src {
            flow.entry((u, cv.position - 1))
                .or_default()
                .add(cv.var, 1.0);
        }
    }
    for cv in &chain_vars {
        let e = g.edge(cv.edge);
        if let Some(expr) = flow.get_mut(&(e.dst, cv.position)) {
            expr.add(cv.var, -1.0);
        }
    }
    for ((v, k), expr) in flow {
        m.add_constraint(format!("flow_{v}_{k}"), expr, Relation::Le, 0.0)
            .expect("declared variables");
    }

    BuiltModel {
        model: m,
        map: DecodeMap {
            cycles: cycles.to_vec(),
            cycle_vars,
            chain_weight_vars: vec![None; g.num_ndds()],
            chain_vars,
        },
    }
}

/// PICEF with chain edges indexed by donor as well as position, so that each
/// donor's chain weight `w^N_n` is available as a variable. Chains from `n`
/// that are shorter than `min_chain_len` are excluded.
pub fn build_picef_by_donor(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    min_chain_len: usize,
) -> BuiltModel {
    let mut m = MilpModel::new();
    let cycle_vars: Vec<_> = cycles
        .iter()
        .map(|c| m.add_binary(cycle_var_name(c)).expect("fresh name"))
        .collect();
    let mut obj = LinExpr::new();
    let mut cap: Vec<LinExpr> = vec![LinExpr::new(); g.num_pairs()];
    for (c, &z) in cycles.iter().zip(&cycle_vars) {
        obj.add(z, c.weight);
        for &v in &c.vertices {
            cap[v].add(z, 1.0);
        }
    }

    let mut chain_vars = Vec::new();
    let mut chain_weight_vars = vec![None; g.num_ndds()];
    if chain_cap > 0 {
        for n in 0..g.num_ndds() {
            let dist = chain_distances(g, &[n]);
            let first = chain_vars.len();
            for e in g.edges() {
                let positions = match e.src {
                    VertexRef::Ndd(s) if s == n => 1..=1,
                    VertexRef::Pair(u) if dist[u] < chain_cap => dist[u] + 1..=chain_cap,
                    _ => continue,
                };
                for k in positions {
                    let var = m
                        .add_binary(format!("yn_{n}_{}_{k}", e.id))
                        .expect("fresh name");
                    chain_vars.push(ChainVar {
                        ndd: Some(n),
                        edge: e.id,
                        position: k,
                        var,
                    });
                }
            }
            let vars = &chain_vars[first..];
            if vars.is_empty() {
                continue;
            }
            let wn = m
                .add_continuous(format!("wN_{n}"), 0.0, f64::INFINITY)
                .expect("fresh name");
            chain_weight_vars[n] = Some(wn);
            obj.add(wn, 1.0);

            let mut def = LinExpr::term(wn, 1.0);
            let mut starts = LinExpr::new();
            let mut at_min = LinExpr::new();
            let mut flow: std::collections::BTreeMap<(usize, usize), LinExpr> = Default::default();
            for cv in vars {
                let e = g.edge(cv.edge);
                def.add(cv.var, -e.weight);
                cap[e.dst].add(cv.var, 1.0);
                if cv.position == 1 {
                    starts.add(cv.var, 1.0);
                }
                if cv.position == min_chain_len {
                    at_min.add(cv.var, 1.0);
                }
                if let VertexRef::Pair(u) = e.src {
                    flow.entry((u, cv.position - 1))
                        .or_default()
                        .add(cv.var, 1.0);
                }
            }
            for cv in vars {
                if let Some(expr) = flow.get_mut(&(g.edge(cv.edge).dst, cv.position)) {
                    expr.add(cv.var, -1.0);
                }
            }
            let constr = |m: &mut MilpModel, name: String, e: LinExpr, rel: Relation, rhs: f64| {
                m.add_constraint(name, e, rel, rhs)
                    .expect("declared variables");
            };
            constr(&mut m, format!("wdef_{n}"), def, Relation::Eq, 0.0);
            if min_chain_len > 1 {
                at_min.extend(&starts, -1.0);
                constr(&mut m, format!("minlen_{n}"), at_min, Relation::Ge, 0.0);
            }
            constr(&mut m, format!("ndd_{n}"), starts, Relation::Le, 1.0);
            for ((v, k), expr) in flow {
                constr(&mut m, format!("flow_{n}_{v}_{k}"), expr, Relation::Le, 0.0);
            }
        }
    }

    for (v, expr) in cap.into_iter().enumerate() {
        if !expr.terms.is_empty() {
            m.add_constraint(format!("cap_{v}"), expr, Relation::Le, 1.0)
                .expect("declared variables");
        }
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    m.set_objective_granularity(unit_granularity(g, cycles));
    BuiltModel {
        model: m,
        map: DecodeMap {
            cycles: cycles.to_vec(),
            cycle_vars,
            chain_vars,
            chain_weight_vars,
        },
    }
}
