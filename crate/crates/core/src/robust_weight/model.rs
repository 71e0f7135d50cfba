use crate::instance::{CompatibilityGraph, Cycle};
use crate::matchopt::{build_picef, BuiltModel};
use crate::milp::{LinExpr, Relation, Sense, VarId};

/// Edges ordered by discount descending, ties by ascending id.
pub(crate) fn discount_order(
    g: &CompatibilityGraph,
    edges: impl IntoIterator<Item = usize>,
) -> Vec<usize> {
    let mut es: Vec<usize> = edges.into_iter().collect();
    es.sort_by(|&a, &b| {
        g.edge(b)
            .discount
            .total_cmp(&g.edge(a).discount)
            .then(a.cmp(&b))
    });
    es
}

/// Budgeted weight-robust model on top of PICEF.
///
/// For every matched edge `ŷ_e = Σ_k y_ek + Σ_{c∋e} z_c`; threshold
/// indicators `g^f`, `g^p` follow the discount order, and their products
/// with `ŷ` count the fully (`⌊Γ'⌋`) and at-least-partially (`⌈Γ'⌉`)
/// discounted edges, where `Γ' = min(Γ, G)` and `G = Σ ŷ_e`. The objective
/// is the worst-case matching weight.
pub fn build_robust_weight_model(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    gamma: f64,
) -> BuiltModel {
    build_with(g, cycles, None, chain_cap, gamma, None)
}

/// `extra_edges` adds `ŷ_e` rows for edges not covered by `cycles` (used by
/// branch-and-price so every candidate cycle has a dual for each edge);
/// `max_edges` adds `G ≤ k`.
pub(crate) fn build_with(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    extra_edges: Option<&[bool]>,
    chain_cap: usize,
    gamma: f64,
    max_edges: Option<usize>,
) -> BuiltModel {
    let mut built = build_picef(g, cycles, chain_cap);
    let m = &mut built.model;
    let map = &built.map;

    let mut contrib: Vec<Vec<VarId>> = vec![Vec::new(); g.num_edges()];
    for cv in &map.chain_vars {
        contrib[cv.edge].push(cv.var);
    }
    for (c, &z) in map.cycles.iter().zip(&map.cycle_vars) {
        for &e in &c.edges {
            contrib[e].push(z);
        }
    }
    let used: Vec<usize> = (0..g.num_edges())
        .filter(|&e| !contrib[e].is_empty() || extra_edges.is_some_and(|x| x[e]))
        .collect();

    let add = |m: &mut crate::milp::MilpModel, name: String, lo: f64, up: f64| {
        m.add_continuous(name, lo, up).expect("fresh name")
    };
    let constr =
        |m: &mut crate::milp::MilpModel, name: String, e: LinExpr, rel: Relation, rhs: f64| {
            m.add_constraint(name, e, rel, rhs)
                .expect("declared variables");
        };

    let big_w = used.len() as f64 + gamma + 1.0;
    let floor = gamma.floor();
    let ceil = gamma.ceil();
    let frac = gamma - floor;

    let mut yhat = vec![None; g.num_edges()];
    let mut total = LinExpr::new();
    for &e in &used {
        let y = add(m, format!("yhat_{e}"), 0.0, 1.0);
        yhat[e] = Some(y);
        let mut def = LinExpr::term(y, 1.0);
        for &v in &contrib[e] {
            def.add(v, -1.0);
        }
        constr(m, format!("yhatdef_{e}"), def, Relation::Eq, 0.0);
        total.add(y, 1.0);
    }
    let gv = add(m, "G".into(), 0.0, used.len() as f64);
    let mut gdef = total;
    gdef.add(gv, -1.0);
    constr(m, "Gdef".into(), gdef, Relation::Eq, 0.0);
    if let Some(k) = max_edges {
        constr(
            m,
            "cardinality".into(),
            LinExpr::term(gv, 1.0),
            Relation::Le,
            k as f64,
        );
    }

    let h = m.add_binary("h").expect("fresh name");
    let gp = add(m, "gamma_prime".into(), 0.0, f64::INFINITY);
    // Γ − G ≤ W h ;  G − Γ ≤ W(1−h)
    constr(
        m,
        "h_lo".into(),
        LinExpr::term(gv, -1.0).with(h, -big_w),
        Relation::Le,
        -gamma,
    );
    constr(
        m,
        "h_hi".into(),
        LinExpr::term(gv, 1.0).with(h, big_w),
        Relation::Le,
        gamma + big_w,
    );
    // G − W h ≤ Γ' ;  Γ − W(1−h) ≤ Γ'
    constr(
        m,
        "gp_g".into(),
        LinExpr::term(gv, 1.0).with(h, -big_w).with(gp, -1.0),
        Relation::Le,
        0.0,
    );
    constr(
        m,
        "gp_gamma".into(),
        LinExpr::term(h, big_w).with(gp, -1.0),
        Relation::Le,
        big_w - gamma,
    );
    // ĥ = h·G
    let hh = add(m, "hhat".into(), 0.0, f64::INFINITY);
    constr(
        m,
        "hhat_h".into(),
        LinExpr::term(hh, 1.0).with(h, -big_w),
        Relation::Le,
        0.0,
    );
    constr(
        m,
        "hhat_g".into(),
        LinExpr::term(hh, 1.0).with(gv, -1.0),
        Relation::Le,
        0.0,
    );
    constr(
        m,
        "hhat_lb".into(),
        LinExpr::term(hh, 1.0).with(gv, -1.0).with(h, -big_w),
        Relation::Ge,
        -big_w,
    );

    let order = discount_order(g, used.iter().copied());
    let mut obj = m.objective().clone();
    let mut count_f = LinExpr::new();
    let mut count_p = LinExpr::new();
    for (tag, count, share) in [("f", &mut count_f, 1.0 - frac), ("p", &mut count_p, frac)] {
        let mut prev: Option<VarId> = None;
        for &e in &order {
            let ge = m.add_binary(format!("g{tag}_{e}")).expect("fresh name");
            let prod = add(m, format!("g{tag}hat_{e}"), 0.0, 1.0);
            let y = yhat[e].expect("used edge");
            constr(
                m,
                format!("g{tag}hat_g_{e}"),
                LinExpr::term(prod, 1.0).with(ge, -1.0),
                Relation::Le,
                0.0,
            );
            constr(
                m,
                format!("g{tag}hat_y_{e}"),
                LinExpr::term(prod, 1.0).with(y, -1.0),
                Relation::Le,
                0.0,
            );
            constr(
                m,
                format!("g{tag}hat_lb_{e}"),
                LinExpr::term(prod, 1.0).with(ge, -1.0).with(y, -1.0),
                Relation::Ge,
                -1.0,
            );
            if let Some(p) = prev {
                constr(
                    m,
                    format!("ord{tag}_{e}"),
                    LinExpr::term(p, 1.0).with(ge, -1.0),
                    Relation::Ge,
                    0.0,
                );
            }
            prev = Some(ge);
            count.add(prod, 1.0);
            let d = g.edge(e).discount;
            if share * d != 0.0 {
                obj.add(prod, -share * d);
            }
        }
    }
    // Σ ĝ^p = ĥ + (1−h)⌈Γ⌉ ;  Σ ĝ^f = ĥ + (1−h)⌊Γ⌋
    count_p.add(hh, -1.0).add(h, ceil);
    constr(m, "count_p".into(), count_p, Relation::Eq, ceil);
    count_f.add(hh, -1.0).add(h, floor);
    constr(m, "count_f".into(), count_f, Relation::Eq, floor);

    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    built
}

/// Compact equivalent of [`build_robust_weight_model`]: the adversary's
/// problem `max {Σ α_e d_e x_e : 0 ≤ α ≤ 1, Σ α ≤ Γ}` is replaced by its LP
/// dual `min {Γθ + Σ π_e : θ + π_e ≥ d_e x_e, θ, π ≥ 0}`, so no indicator
/// binaries are needed.
pub fn build_robust_weight_dual(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    gamma: f64,
) -> BuiltModel {
    build_dual_with(g, cycles, chain_cap, gamma, None)
}

pub(crate) fn build_dual_with(
    g: &CompatibilityGraph,
    cycles: &[Cycle],
    chain_cap: usize,
    gamma: f64,
    max_edges: Option<usize>,
) -> BuiltModel {
    let mut built = build_picef(g, cycles, chain_cap);
    let m = &mut built.model;
    let map = &built.map;

    let mut usage: Vec<LinExpr> = vec![LinExpr::new(); g.num_edges()];
    for cv in &map.chain_vars {
        usage[cv.edge].add(cv.var, 1.0);
    }
    for (c, &z) in map.cycles.iter().zip(&map.cycle_vars) {
        for &e in &c.edges {
            usage[e].add(z, 1.0);
        }
    }
    if let Some(k) = max_edges {
        let mut total = LinExpr::new();
        for u in &usage {
            total.extend(u, 1.0);
        }
        m.add_constraint("cardinality", total, Relation::Le, k as f64)
            .expect("declared variables");
    }

    let mut obj = m.objective().clone();
    let theta = m
        .add_continuous("theta", 0.0, f64::INFINITY)
        .expect("fresh name");
    obj.add(theta, -gamma);
    for (e, u) in usage.iter().enumerate() {
        let d = g.edge(e).discount;
        if d == 0.0 || u.terms.is_empty() {
            continue;
        }
        let pi = m
            .add_continuous(format!("pi_{e}"), 0.0, f64::INFINITY)
            .expect("fresh name");
        let mut row = LinExpr::term(theta, 1.0).with(pi, 1.0);
        row.extend(u, -d);
        m.add_constraint(format!("dual_{e}"), row, Relation::Ge, 0.0)
            .expect("declared variables");
        obj.add(pi, -1.0);
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    built
}
