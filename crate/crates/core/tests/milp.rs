use kex_core::milp::{
    solve_lp_relaxation, solve_mip, LinExpr, MilpModel, Relation, Sense, SolveStatus,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// max c·x s.t. A x ≤ b, 0 ≤ x ≤ u, solved by enumerating all vertices.
fn vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64], u: &[f64]) -> f64 {
    let n = c.len();
    // Hyperplanes: rows of A, x_j = 0, x_j = u_j.
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, u[j]));
    }
    let feasible = |x: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(row, &bi)| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9)
            && x.iter()
                .zip(u)
                .all(|(&xj, &uj)| xj >= -1e-9 && xj <= uj + 1e-9)
    };
    let mut best = f64::NEG_INFINITY;
    let k = planes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // Solve the n×n system by Gauss-Jordan with partial pivoting.
        let mut m: Vec<Vec<f64>> = idx
            .iter()
            .map(|&p| {
                let mut r = planes[p].0.clone();
                r.push(planes[p].1);
                r
            })
            .collect();
        let mut ok = true;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            if m[piv][col].abs() < 1e-12 {
                ok = false;
                break;
            }
            m.swap(col, piv);
            let p = m[col][col];
            for v in m[col].iter_mut() {
                *v /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r][col];
                    for cc in 0..=n {
                        m[r][cc] -= f * m[col][cc];
                    }
                }
            }
        }
        if ok {
            let x: Vec<f64> = (0..n).map(|i| m[i][n]).collect();
            if feasible(&x) {
                best = best.max(c.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
        // Next combination.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=4);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect())
            .collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();

        let mut model = MilpModel::new();
        let xs: Vec<_> = (0..n)
            .map(|j| model.add_continuous(format!("x{j}"), 0.0, u[j]).unwrap())
            .collect();
        for (i, row) in a.iter().enumerate() {
            let mut e = LinExpr::new();
            for (j, &coef) in row.iter().enumerate() {
                e.add(xs[j], coef);
            }
            model
                .add_constraint(format!("r{i}"), e, Relation::Le, b[i])
                .unwrap();
        }
        let mut obj = LinExpr::new();
        for (j, &cj) in c.iter().enumerate() {
            obj.add(xs[j], cj);
        }
        model.set_objective(Sense::Maximize, obj).unwrap();

        let lp = solve_lp_relaxation(&model).unwrap();
        assert_eq!(lp.status, SolveStatus::Optimal);
        let oracle = vertex_enumeration(&c, &a, &b, &u);
        assert!(
            (lp.objective - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            lp.objective
        );
        assert!(model.max_violation(&lp.values) < 1e-6);

        // Strong duality with bounded columns: b·y plus the bound terms of
        // the reduced costs.
        let dual_obj: f64 = lp.duals.iter().zip(&b).map(|(y, bi)| y * bi).sum::<f64>()
            + lp.reduced_costs
                .iter()
                .zip(&lp.values)
                .map(|(d, x)| d * x)
                .sum::<f64>();
        assert!((dual_obj - lp.objective).abs() < 1e-6);
        assert!(lp.duals.iter().all(|&y| y >= -1e-9));
    }
}

fn knapsack(seed: u64) -> (MilpModel, Vec<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..10).map(|_| rng.gen_range(1..20) as f64).collect();
    let weights: Vec<f64> = (0..10).map(|_| rng.gen_range(1..15) as f64).collect();
    let cap = weights.iter().sum::<f64>() * rng.gen_range(0.2..0.7);
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..10)
        .map(|j| m.add_binary(format!("x{j}")).unwrap())
        .collect();
    let mut w = LinExpr::new();
    let mut v = LinExpr::new();
    for j in 0..10 {
        w.add(xs[j], weights[j]);
        v.add(xs[j], values[j]);
    }
    m.add_constraint("cap", w, Relation::Le, cap).unwrap();
    m.set_objective(Sense::Maximize, v).unwrap();
    (m, values, weights, cap)
}

#[test]
fn knapsack_matches_exhaustive_enumeration() {
    for seed in 0..30 {
        let (m, values, weights, cap) = knapsack(seed);
        let mut best = 0.0f64;
        for mask in 0u32..1 << 10 {
            let (mut wv, mut vv) = (0.0, 0.0);
            for j in 0..10 {
                if mask >> j & 1 == 1 {
                    wv += weights[j];
                    vv += values[j];
                }
            }
            if wv <= cap {
                best = best.max(vv);
            }
        }
        let r = solve_mip(&m).unwrap();
        assert!((r.objective - best).abs() < 1e-6, "seed {seed}");
        assert!(m.max_violation(&r.values) < 1e-6);
        let lp = solve_lp_relaxation(&m).unwrap();
        assert!(r.objective <= lp.objective + 1e-6);
        let again = solve_mip(&m).unwrap();
        assert_eq!(again, r);
    }
}

#[test]
fn integral_polytope_lp_equals_mip() {
    // Bipartite assignment: LP vertices are integral.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut m = MilpModel::new();
    let mut x = vec![];
    for i in 0..4 {
        for j in 0..4 {
            x.push((i, j, m.add_binary(format!("x{i}{j}")).unwrap()));
        }
    }
    let mut obj = LinExpr::new();
    for &(_, _, v) in &x {
        obj.add(v, rng.gen_range(0..10) as f64);
    }
    for k in 0..4 {
        let row = LinExpr::sum(x.iter().filter(|t| t.0 == k).map(|t| t.2));
        m.add_constraint(format!("r{k}"), row, Relation::Le, 1.0)
            .unwrap();
        let col = LinExpr::sum(x.iter().filter(|t| t.1 == k).map(|t| t.2));
        m.add_constraint(format!("c{k}"), col, Relation::Le, 1.0)
            .unwrap();
    }
    m.set_objective(Sense::Maximize, obj).unwrap();
    let lp = solve_lp_relaxation(&m).unwrap();
    let mip = solve_mip(&m).unwrap();
    assert!((lp.objective - mip.objective).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mip_never_exceeds_lp(seed in 0u64..10_000, rows in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = MilpModel::new();
        let xs: Vec<_> = (0..6).map(|j| m.add_binary(format!("x{j}")).unwrap()).collect();
        for i in 0..rows {
            let mut e = LinExpr::new();
            for &x in &xs {
                if rng.gen_bool(0.6) {
                    e.add(x, rng.gen_range(1..5) as f64);
                }
            }
            m.add_constraint(format!("r{i}"), e, Relation::Le, rng.gen_range(1..8) as f64).unwrap();
        }
        let mut obj = LinExpr::new();
        for &x in &xs {
            obj.add(x, rng.gen_range(-2.0..5.0));
        }
        m.set_objective(Sense::Maximize, obj).unwrap();
        let mip = solve_mip(&m).unwrap();
        let lp = solve_lp_relaxation(&m).unwrap();
        prop_assert!(mip.objective <= lp.objective + 1e-6);
        prop_assert!(m.max_violation(&mip.values) <= 1e-6);
        prop_assert!(mip.values.iter().all(|v| *v == 0.0 || *v == 1.0));
    }
}

/// Three items of weight 2 and a knapsack row that admits two of them.
fn two_of_three() -> MilpModel {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..3)
        .map(|i| m.add_binary(format!("x{i}")).unwrap())
        .collect();
    m.add_constraint("cap", LinExpr::sum(xs.iter().copied()), Relation::Le, 2.5)
        .unwrap();
    let mut obj = LinExpr::new();
    for &x in &xs {
        obj.add(x, 2.0);
    }
    m.set_objective(Sense::Maximize, obj).unwrap();
    m
}

#[test]
fn cutoff_reports_when_nothing_beats_it() {
    let mut m = two_of_three();
    m.set_cutoff(Some(4.0));
    assert_eq!(solve_mip(&m).unwrap().status, SolveStatus::Cutoff);
    m.set_cutoff(Some(3.5));
    let r = solve_mip(&m).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 4.0).abs() < 1e-9);
}

#[test]
fn granularity_keeps_the_optimum() {
    let mut m = two_of_three();
    m.set_objective_granularity(Some(2.0));
    let r = solve_mip(&m).unwrap();
    assert!((r.objective - 4.0).abs() < 1e-9);
    assert!(r.nodes <= solve_mip(&two_of_three()).unwrap().nodes);
}
