use crate::instance::{CompatibilityGraph, Cycle, VertexRef};
use crate::milp::{LinExpr, MilpModel, Relation, Sense, VarId};

use super::{chain_distances, cycle_var_name, unit_granularity, BuiltModel, ChainVar, DecodeMap};

/// Position-indexed TSP formulation with per-NDD chain variables `yⁿ_e`,
/// chain weights `w^N_n` and edge positions `p_e` that rule out subtours.
///
/// `yⁿ_e` exists only for edges out of `n` itself and for pair edges that a
/// chain from `n` can reach within the cap. Positions live in `[1, L+1]`
/// (an unused edge leaving the last vertex of a full-length chain sits at
/// `L+1`), so the big-M of the `p̂_e = p_e·y_e` linearization is `L+1`.
pub fn build_pitsp(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    min_chain_len: usize,
) -> BuiltModel {
    let mut m = MilpModel::new();
    let add = |m: &mut MilpModel, name: String, lo: f64, up: f64| {
        m.add_continuous(name, lo, up).expect("fresh name")
    };
    let constr = |m: &mut MilpModel, name: String, e: LinExpr, rel: Relation, rhs: f64| {
        m.add_constraint(name, e, rel, rhs)
            .expect("declared variables");
    };

    let cycle_vars: Vec<VarId> = cycles
        .iter()
        .map(|c| m.add_binary(cycle_var_name(c)).expect("fresh name"))
        .collect();
    let mut obj = LinExpr::new();
    for (c, &z) in cycles.iter().zip(&cycle_vars) {
        obj.add(z, c.weight);
    }

    let mut chain_vars = Vec::new();
    let mut edge_vars: Vec<Option<VarId>> = vec![None; g.num_edges()];
    let mut chain_weight_vars = vec![None; g.num_ndds()];
    let mut cycle_cover: Vec<LinExpr> = vec![LinExpr::new(); g.num_pairs()];
    for (c, &z) in cycles.iter().zip(&cycle_vars) {
        for &v in &c.vertices {
            cycle_cover[v].add(z, 1.0);
        }
    }

    if chain_cap > 0 && g.num_ndds() > 0 {
        // yⁿ_e.
        let mut per_ndd: Vec<Vec<(usize, VarId)>> = vec![Vec::new(); g.num_ndds()];
        for (n, vars) in per_ndd.iter_mut().enumerate() {
            let dist = chain_distances(g, &[n]);
            for e in g.edges() {
                let usable = match e.src {
                    VertexRef::Ndd(s) => s == n,
                    VertexRef::Pair(u) => dist[u] < chain_cap,
                };
                if usable {
                    let var = m
                        .add_binary(format!("yn_{n}_{}", e.id))
                        .expect("fresh name");
                    vars.push((e.id, var));
                    chain_vars.push(ChainVar {
                        ndd: Some(n),
                        edge: e.id,
                        position: 0,
                        var,
                    });
                }
            }
        }
        // y_e = Σ_n yⁿ_e.
        let mut link: Vec<LinExpr> = vec![LinExpr::new(); g.num_edges()];
        for vars in &per_ndd {
            for &(e, v) in vars {
                link[e].add(v, -1.0);
            }
        }
        for (e, mut expr) in link.into_iter().enumerate() {
            if expr.terms.is_empty() {
                continue;
            }
            let y = m.add_binary(format!("y_{e}")).expect("fresh name");
            edge_vars[e] = Some(y);
            expr.add(y, 1.0);
            constr(&mut m, format!("link_{e}"), expr, Relation::Eq, 0.0);
        }

        // Chain weights, one chain per NDD, chain cap, minimum length.
        for (n, vars) in per_ndd.iter().enumerate() {
            let wn = add(&mut m, format!("wN_{n}"), 0.0, f64::INFINITY);
            chain_weight_vars[n] = Some(wn);
            obj.add(wn, 1.0);
            let mut def = LinExpr::term(wn, 1.0);
            let mut len = LinExpr::new();
            let mut starts = LinExpr::new();
            for &(e, v) in vars {
                def.add(v, -g.edge(e).weight);
                len.add(v, 1.0);
                if g.edge(e).src == VertexRef::Ndd(n) {
                    starts.add(v, 1.0);
                }
            }
            constr(&mut m, format!("wdef_{n}"), def, Relation::Eq, 0.0);
            constr(
                &mut m,
                format!("fo_ndd_{n}"),
                starts.clone(),
                Relation::Le,
                1.0,
            );
            let mut cap = len.clone();
            cap.extend(&starts, -(chain_cap as f64));
            constr(&mut m, format!("chaincap_{n}"), cap, Relation::Le, 0.0);
            if min_chain_len > 0 {
                let mut minlen = len;
                minlen.extend(&starts, -(min_chain_len as f64));
                constr(&mut m, format!("minlen_{n}"), minlen, Relation::Ge, 0.0);
            }
            // Per-NDD flow: f^{o,n}_v ≤ f^{i,n}_v.
            let mut flow: Vec<LinExpr> = vec![LinExpr::new(); g.num_pairs()];
            let mut has_out = vec![false; g.num_pairs()];
            for &(e, v) in vars {
                let edge = g.edge(e);
                if let VertexRef::Pair(u) = edge.src {
                    flow[u].add(v, 1.0);
                    has_out[u] = true;
                }
                flow[edge.dst].add(v, -1.0);
            }
            for (v, expr) in flow.into_iter().enumerate() {
                if has_out[v] {
                    constr(&mut m, format!("flow_{n}_{v}"), expr, Relation::Le, 0.0);
                }
            }
        }
    }

    // Aggregate flows and vertex capacity.
    for v in 0..g.num_pairs() {
        let fi = add(&mut m, format!("fi_{v}"), 0.0, 1.0);
        let fo = add(&mut m, format!("fo_{v}"), 0.0, 1.0);
        let mut di = LinExpr::term(fi, 1.0);
        for &e in g.in_edges(v) {
            if let Some(y) = edge_vars[e] {
                di.add(y, -1.0);
            }
        }
        let mut dout = LinExpr::term(fo, 1.0);
        for &e in g.out_edges(v) {
            if let Some(y) = edge_vars[e] {
                dout.add(y, -1.0);
            }
        }
        constr(&mut m, format!("fidef_{v}"), di, Relation::Eq, 0.0);
        constr(&mut m, format!("fodef_{v}"), dout, Relation::Eq, 0.0);
        constr(
            &mut m,
            format!("fout_{v}"),
            LinExpr::term(fo, 1.0).with(fi, -1.0),
            Relation::Le,
            0.0,
        );
        let mut cap = LinExpr::term(fi, 1.0);
        cap.extend(&cycle_cover[v], 1.0);
        constr(&mut m, format!("cap_{v}"), cap, Relation::Le, 1.0);
    }

    // Positions.
    if edge_vars.iter().any(Option::is_some) {
        let big_m = chain_cap as f64 + 1.0;
        let mut pv_def: Vec<LinExpr> = Vec::with_capacity(g.num_pairs());
        let mut pv: Vec<VarId> = Vec::with_capacity(g.num_pairs());
        for v in 0..g.num_pairs() {
            let p = add(&mut m, format!("pv_{v}"), 0.0, chain_cap as f64);
            pv.push(p);
            pv_def.push(LinExpr::term(p, 1.0));
        }
        for e in g.edges() {
            let Some(y) = edge_vars[e.id] else { continue };
            let (lo, up) = match e.src {
                VertexRef::Ndd(_) => (1.0, 1.0),
                VertexRef::Pair(_) => (1.0, big_m),
            };
            let pe = add(&mut m, format!("pe_{}", e.id), lo, up);
            let ph = add(&mut m, format!("ph_{}", e.id), 0.0, big_m);
            if let VertexRef::Pair(u) = e.src {
                constr(
                    &mut m,
                    format!("pnext_{}", e.id),
                    LinExpr::term(pe, 1.0).with(pv[u], -1.0),
                    Relation::Eq,
                    1.0,
                );
            }
            constr(
                &mut m,
                format!("ph_y_{}", e.id),
                LinExpr::term(ph, 1.0).with(y, -big_m),
                Relation::Le,
                0.0,
            );
            constr(
                &mut m,
                format!("ph_p_{}", e.id),
                LinExpr::term(ph, 1.0).with(pe, -1.0),
                Relation::Le,
                0.0,
            );
            constr(
                &mut m,
                format!("ph_lb_{}", e.id),
                LinExpr::term(ph, 1.0).with(pe, -1.0).with(y, -big_m),
                Relation::Ge,
                -big_m,
            );
            pv_def[e.dst].add(ph, -1.0);
        }
        for (v, expr) in pv_def.into_iter().enumerate() {
            constr(&mut m, format!("pvdef_{v}"), expr, Relation::Eq, 0.0);
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
