mod common;

use kex_core::fairness::{
    classify_sensitized, deprioritize_low, evaluate_weighted_fair, max_high_utility, percent_fair,
    pof, prioritize_high, solve_variable_gamma, solve_weighted_fair, utilities, FairnessError,
};
use kex_core::instance::{BloodType, PairVertex};
use kex_core::matchopt::{for_each_matching, solve, Formulation};
use kex_core::{CompatibilityGraph, Edge, FormulationConfig, Matching, VertexRef};
use proptest::prelude::*;

fn cfg() -> FormulationConfig {
    FormulationConfig::default()
}

/// H-cycle 0↔1 (weight 1, pair 0 highly sensitized) and L-cycle 1↔2
/// (weight 1.5), sharing pair 1.
fn exclusive_cycles() -> CompatibilityGraph {
    let cpra = [0.9, 0.1, 0.1];
    let pairs = cpra
        .iter()
        .enumerate()
        .map(|(id, &cpra)| PairVertex {
            id,
            cpra,
            blood_type_patient: BloodType::O,
            blood_type_donor: BloodType::O,
        })
        .collect();
    let spec = [(0, 1, 0.0), (1, 0, 1.0), (1, 2, 0.75), (2, 1, 0.75)];
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
    CompatibilityGraph::new(pairs, vec![], edges).unwrap()
}

fn brute_weighted(g: &CompatibilityGraph, gamma: f64, tau: f64) -> f64 {
    let part = classify_sensitized(g, tau).unwrap();
    let mut best = 0.0f64;
    for_each_matching(g, 3, 4, |m| {
        let (h, l) = utilities(m, g, &part);
        best = best.max((1.0 + gamma) * h + l);
    });
    best
}

#[test]
fn classification_examples() {
    let g = exclusive_cycles();
    let part = classify_sensitized(&g, 0.8).unwrap();
    assert_eq!(part.high_pairs, vec![0]);
    assert_eq!(part.low_pairs, vec![1, 2]);
    assert_eq!(part.high_edges, vec![1]);
    assert_eq!(part.high_edges.len() + part.low_edges.len(), g.num_edges());
    let none = classify_sensitized(&common::toy(), 0.8).unwrap();
    assert!(none.high_pairs.is_empty());
    assert!(classify_sensitized(&g, 1.5).is_err());
}

#[test]
fn utilities_examples() {
    let g = exclusive_cycles();
    let part = classify_sensitized(&g, 0.8).unwrap();
    assert_eq!(utilities(&Matching::empty(), &g, &part), (0.0, 0.0));
    let m = solve_weighted_fair(&g, &cfg(), &part, 1.0).unwrap();
    assert_eq!(utilities(&m, &g, &part), (1.0, 0.0));
}

#[test]
fn weighted_fair_switches_at_half() {
    let g = exclusive_cycles();
    let part = classify_sensitized(&g, 0.8).unwrap();
    let opt = solve(&g, &cfg()).unwrap().nominal_score;
    assert_eq!(opt, 1.5);

    let fair = solve_weighted_fair(&g, &cfg(), &part, 1.0).unwrap();
    assert_eq!(fair.cycles[0].vertices, vec![0, 1]);
    assert_eq!(fair.nominal_score, 1.0);
    assert!((pof(&fair, opt).unwrap() - 1.0 / 3.0).abs() < 1e-12);

    let mild = solve_weighted_fair(&g, &cfg(), &part, 0.4).unwrap();
    assert_eq!(mild.cycles[0].vertices, vec![1, 2]);
    assert_eq!(pof(&mild, opt).unwrap(), 0.0);

    let max_uh = max_high_utility(&g, &cfg(), &part).unwrap();
    assert_eq!(percent_fair(&fair, &g, &part, max_uh), 1.0);
    assert_eq!(percent_fair(&mild, &g, &part, max_uh), 0.0);
    assert_eq!(percent_fair(&mild, &g, &part, 0.0), 1.0);
}

#[test]
fn report_flags_vacuous_fairness() {
    let r = evaluate_weighted_fair(&common::toy(), &cfg(), 0.8, 1.0).unwrap();
    assert!(r.vacuous);
    assert_eq!(r.percent_fair, 1.0);
    let v = r.to_json();
    assert_eq!(v["bounds"]["pof_max"], 0.5);
    assert!(v["bounds"]["pf_min"].is_null());
}

#[test]
fn variable_gamma_cases() {
    let g = exclusive_cycles();
    let part = classify_sensitized(&g, 0.8).unwrap();
    for gamma in [0.0, 0.4, 1.0] {
        let a = solve_variable_gamma(&g, &cfg(), &part, (gamma, gamma)).unwrap();
        let b = solve_weighted_fair(&g, &cfg(), &part, gamma).unwrap();
        assert_eq!(a.nominal_score, b.nominal_score);
    }
    assert!(matches!(
        solve_variable_gamma(&g, &cfg(), &part, (2.0, 1.0)),
        Err(FairnessError::EmptyInterval { .. })
    ));
    // No high edges: γ is irrelevant.
    let f = common::toy();
    let none = classify_sensitized(&f, 0.8).unwrap();
    let m = solve_variable_gamma(
        &f,
        &FormulationConfig {
            chain_cap: 5,
            ..cfg()
        },
        &none,
        (0.0, 3.0),
    )
    .unwrap();
    assert_eq!(m.nominal_score, 5.0);
}

#[test]
fn priority_transforms_respect_budget() {
    let g = exclusive_cycles();
    let part = classify_sensitized(&g, 0.8).unwrap();
    let total = g.total_weight();
    let up = prioritize_high(&g, &part, 0.5, 0.5 * total).unwrap();
    assert_eq!(up.edge(1).weight, 1.5);
    assert_eq!(up.edge(2).weight, 0.75);
    assert!(prioritize_high(&g, &part, 0.5, 0.4 * total).is_err());
    let down = deprioritize_low(&g, &part, 0.5, total).unwrap();
    assert_eq!(down.edge(1).weight, 1.0);
    assert_eq!(down.edge(2).weight, 0.375);
    assert!(deprioritize_low(&g, &part, 1.5, 10.0 * total).is_err());
}

fn fair_graph(seed: u64) -> CompatibilityGraph {
    common::randomize_weights(&common::random_graph(seed, 9, 2, 0.3), seed)
}

#[test]
fn gamma_zero_recovers_utilitarian_optimum() {
    for seed in 0..20 {
        let g = fair_graph(seed);
        let part = classify_sensitized(&g, 0.8).unwrap();
        let a = solve_weighted_fair(&g, &cfg(), &part, 0.0)
            .unwrap()
            .nominal_score;
        let b = solve(&g, &cfg()).unwrap().nominal_score;
        assert!((a - b).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weighted_fair_matches_oracle_and_bounds(seed in 0u64..1_000_000, gi in 0usize..3) {
        let gamma = [0.5, 1.0, 2.0][gi];
        let g = fair_graph(seed);
        let r = evaluate_weighted_fair(&g, &cfg(), 0.8, gamma).unwrap();
        let part = classify_sensitized(&g, 0.8).unwrap();
        let (h, l) = utilities(&r.matching, &g, &part);
        prop_assert!(((1.0 + gamma) * h + l - brute_weighted(&g, gamma, 0.8)).abs() < 1e-6);
        prop_assert!((h + l - r.matching.nominal_score).abs() < 1e-9);
        if let Some(p) = r.pof {
            prop_assert!(p <= gamma / (1.0 + gamma) + 1e-9);
            prop_assert!(p >= -1e-9);
        }
        if let Some(bound) = r.pf_min() {
            prop_assert!(r.percent_fair >= bound - 1e-9);
        }
    }

    #[test]
    fn scaling_weights_scales_the_objective(seed in 0u64..1_000_000, k in 1u32..8) {
        let g = fair_graph(seed);
        let part = classify_sensitized(&g, 0.8).unwrap();
        let scale = k as f64 * 0.5;
        let scaled = g.map_weights(|e| e.weight * scale);
        let a = solve_weighted_fair(&g, &cfg(), &part, 1.0).unwrap().nominal_score;
        let b = solve_weighted_fair(&scaled, &cfg(), &part, 1.0).unwrap().nominal_score;
        prop_assert!((b - scale * a).abs() < 1e-6);
    }

    #[test]
    fn variable_gamma_dominates_endpoints(seed in 0u64..1_000_000) {
        let g = fair_graph(seed);
        let part = classify_sensitized(&g, 0.8).unwrap();
        let (lo, hi) = (0.0, 1.5);
        let m = solve_variable_gamma(&g, &FormulationConfig { formulation: Formulation::Pitsp, ..cfg() }, &part, (lo, hi)).unwrap();
        let (h, l) = utilities(&m, &g, &part);
        // The solver's objective is maximized over γ too, so γ = hi when H > 0.
        let obj = l + (1.0 + if h > 0.0 { hi } else { lo }) * h;
        for gamma in [lo, hi] {
            prop_assert!(obj >= brute_weighted(&g, gamma, 0.8) - 1e-6);
        }
    }
}

#[test]
fn variable_gamma_report_bounds() {
    use kex_core::fairness::evaluate_variable_gamma;
    let g = exclusive_cycles();
    // U_L* = 1.5, U_H* = 1: f = 0 gives lo = 0.5; p = 0.5 gives hi = 1.
    let r = evaluate_variable_gamma(&g, &cfg(), 0.8, 0.0, 0.5).unwrap();
    assert_eq!(r.interval, Some((0.5, 1.0)));
    assert_eq!(r.gamma, 1.0);
    assert_eq!(r.matching.cycles[0].vertices, vec![0, 1]);
    assert!((r.pof.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!(r.pof.unwrap() <= r.pof_max() + 1e-9);
    assert!(r.percent_fair >= r.pf_min().unwrap() - 1e-9);
    assert!(matches!(
        evaluate_variable_gamma(&g, &cfg(), 0.8, 0.9, 0.1),
        Err(FairnessError::EmptyInterval { .. })
    ));
    // No high-sensitized pairs: U_H* = 0 has no interval.
    assert!(matches!(
        evaluate_variable_gamma(&common::toy(), &cfg(), 0.8, 0.0, 0.5),
        Err(FairnessError::Invalid(_))
    ));
}
