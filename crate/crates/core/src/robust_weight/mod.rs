//! Clearing under budgeted edge-weight uncertainty.
//!
//! Each edge weight may drop from `w_e` by up to its discount `d_e`; an
//! adversary with budget `Γ` fully discounts `⌊Γ⌋` matched edges and a
//! `Γ−⌊Γ⌋` share of one more. The protection-level variant picks the budget
//! from the matching size through [`budget_beta`].

mod model;
mod price;

pub use model::{build_robust_weight_dual, build_robust_weight_model};
pub use price::{cycle_price, PricedCycle};

use serde_json::{json, Value};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::instance::{enumerate_cycles, CompatibilityGraph};
use crate::matchopt::{
    self, decode_matching, Formulation, FormulationConfig, MatchError, Matching,
};
use crate::milp::{solve_mip, MilpError};

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

impl From<MilpError> for RobustError {
    fn from(e: MilpError) -> Self {
        RobustError::Match(MatchError::Solver(e))
    }
}

/// How the constant-budget problem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// All cycles up to the cap, with the adversary's problem dualized
    /// ([`build_robust_weight_dual`]).
    #[default]
    Enumerate,
    /// All cycles up to the cap, with the indicator linearization
    /// ([`build_robust_weight_model`]).
    Linearized,
    /// Indicator linearization starting with no cycles; cycles are
    /// generated by pricing at every node.
    BranchAndPrice,
}

/// `2^{-n} Σ_{l ≥ j} C(n, l)` and `2^{-n} C(n, j)`.
fn tail_and_term(n: usize, j: usize) -> (f64, f64) {
    if n <= 64 {
        let mut c: u128 = 1; // C(n, 0)
        let mut tail: u128 = 0;
        let mut term: u128 = 0;
        for l in 0..=n {
            if l >= j {
                tail += c;
            }
            if l == j {
                term = c;
            }
            c = c * (n - l) as u128 / (l + 1) as u128;
        }
        let scale = 2f64.powi(-(n as i32));
        (tail as f64 * scale, term as f64 * scale)
    } else {
        let ln2n = n as f64 * std::f64::consts::LN_2;
        let p = |l: usize| (ln_binomial(n as u64, l as u64) - ln2n).exp();
        ((j..=n).map(p).sum(), if j <= n { p(j) } else { 0.0 })
    }
}

/// Probability bound `B(n, Γ)` that realized weights leave the budgeted
/// uncertainty set when `n` edges are matched:
/// `2^{-n}((1−μ)C(n,⌊η⌋) + Σ_{l=⌊η⌋+1}^{n} C(n,l))` with `η = (Γ+n)/2`,
/// `μ = η − ⌊η⌋`.
pub fn bound_b(n: usize, gamma: f64) -> Result<f64, RobustError> {
    if n == 0 {
        return Err(RobustError::Invalid("edge count must be at least 1".into()));
    }
    if !(0.0..=n as f64).contains(&gamma) {
        return Err(RobustError::Invalid(format!(
            "gamma {gamma} outside [0, {n}]"
        )));
    }
    let eta = (gamma + n as f64) / 2.0;
    let j = eta.floor() as usize;
    let mu = eta - j as f64;
    let (tail_next, term) = if j >= n {
        (0.0, tail_and_term(n, n).1)
    } else {
        let (tail, term) = tail_and_term(n, j);
        (tail - term, term)
    };
    Ok((1.0 - mu) * term + tail_next)
}

/// Smallest budget `Γ ∈ [0, n]` with `B(n, Γ) ≤ ε`; `n` if none exists.
///
/// `B` is linear in `Γ` between consecutive integer values of `η`, so the
/// crossing is found exactly by inverting the segment that contains it.
pub fn budget_beta(n: usize, epsilon: f64) -> Result<f64, RobustError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(RobustError::Invalid(format!(
            "epsilon {epsilon} outside (0, 1]"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if bound_b(n, 0.0)? <= epsilon {
        return Ok(0.0);
    }
    if epsilon < bound_b(n, n as f64)? {
        return Ok(n as f64);
    }
    let half = n as f64 / 2.0;
    for j in (n / 2)..n {
        let (tail, term) = tail_and_term(n, j);
        let next = tail - term;
        if next <= epsilon {
            // B(η) = next + (j + 1 − η)·term on [j, j+1].
            let eta = (j as f64 + 1.0 - (epsilon - next) / term).max(half);
            return Ok((2.0 * eta - n as f64).clamp(0.0, n as f64));
        }
    }
    Ok(n as f64)
}

/// Worst-case weight of `m` when the adversary discounts the matched edges
/// with the largest `d_e` (ties by edge id) under budget `Γ`.
pub fn worst_case_weight(m: &Matching, g: &CompatibilityGraph, gamma: f64) -> f64 {
    let order = model::discount_order(g, m.edges());
    let gp = gamma.min(order.len() as f64).max(0.0);
    let full = gp.floor() as usize;
    let mut loss: f64 = order[..full].iter().map(|&e| g.edge(e).discount).sum();
    if let Some(&e) = order.get(full) {
        loss += (gp - full as f64) * g.edge(e).discount;
    }
    m.nominal_score - loss
}

fn check_config(cfg: &FormulationConfig) -> Result<(), RobustError> {
    FormulationConfig {
        formulation: Formulation::Picef,
        min_chain_len: 0,
        ..cfg.clone()
    }
    .validate()?;
    Ok(())
}

fn solve_constant(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    gamma: f64,
    max_edges: Option<usize>,
    linearized: bool,
) -> Result<Matching, RobustError> {
    let cycles = enumerate_cycles(g, cfg.cycle_cap);
    let built = if linearized {
        model::build_with(g, &cycles, None, cfg.chain_cap, gamma, max_edges)
    } else {
        model::build_dual_with(g, &cycles, cfg.chain_cap, gamma, max_edges)
    };
    let result = solve_mip(&built.model)?;
    let mut m = decode_matching(&result, &built.map, g)?;
    m.robust_score = Some(worst_case_weight(&m, g, gamma));
    Ok(m)
}

/// Robust clearing with constant budget `Γ` (always on the PICEF base).
pub fn solve_robust_weight_constant(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    gamma: f64,
    method: Method,
) -> Result<Matching, RobustError> {
    check_config(cfg)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(RobustError::Invalid(format!(
            "gamma {gamma} must be finite and non-negative"
        )));
    }
    match method {
        Method::Enumerate => solve_constant(g, cfg, gamma, None, false),
        Method::Linearized => solve_constant(g, cfg, gamma, None, true),
        Method::BranchAndPrice => {
            let mut m = price::branch_and_price(g, cfg.cycle_cap, cfg.chain_cap, gamma)?;
            m.robust_score = Some(worst_case_weight(&m, g, gamma));
            Ok(m)
        }
    }
}

/// Robust clearing with protection level `ε`: the budget depends on the
/// number of matched edges. Solves one cardinality-restricted
/// constant-budget problem per size `k` up to the maximum cardinality, and
/// keeps the candidate with the best worst-case weight at the budget of its
/// own size (ties to the smaller `k`).
pub fn solve_robust_weight_variable(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    epsilon: f64,
) -> Result<Matching, RobustError> {
    check_config(cfg)?;
    budget_beta(1, epsilon)?;
    let unit = g.map_weights(|_| 1.0);
    let picef = FormulationConfig {
        formulation: Formulation::Picef,
        min_chain_len: 0,
        ..cfg.clone()
    };
    let k_max = matchopt::solve(&unit, &picef)?.num_edges();
    let mut best = Matching::empty();
    best.robust_score = Some(0.0);
    for k in 1..=k_max {
        let gamma = budget_beta(k, epsilon)?;
        let mut cand = solve_constant(g, cfg, gamma, Some(k), false)?;
        let own = budget_beta(cand.num_edges(), epsilon)?;
        let score = worst_case_weight(&cand, g, own);
        if score > best.robust_score.unwrap_or(0.0) + 1e-9 {
            cand.robust_score = Some(score);
            best = cand;
        }
    }
    Ok(best)
}

/// JSON report for a weight-robust solve.
pub fn report_json(m: &Matching, gamma: f64, epsilon: Option<f64>) -> Value {
    json!({
        "gamma": gamma,
        "epsilon": epsilon,
        "nominal_score": m.nominal_score,
        "robust_score": m.robust_score.unwrap_or(m.nominal_score),
        "matching": m.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        assert!((bound_b(1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((bound_b(2, 0.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((bound_b(1, 0.0).unwrap() - 0.75).abs() < 1e-15);
        for n in 1..=10 {
            let expect = 2f64.powi(-(n as i32));
            assert!((bound_b(n, n as f64).unwrap() - expect).abs() < 1e-15);
        }
        assert!(bound_b(0, 0.0).is_err());
        assert!(bound_b(3, 3.5).is_err());
    }

    #[test]
    fn large_n_uses_log_space() {
        // Continuity across the exact/log-space switch.
        let a = bound_b(64, 10.0).unwrap();
        let b = bound_b(65, 10.0).unwrap();
        assert!(a > 0.0 && b > 0.0 && (a - b).abs() < 0.05);
    }

    #[test]
    fn beta_examples() {
        assert!((budget_beta(1, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(budget_beta(4, 0.01).unwrap(), 4.0);
        assert_eq!(budget_beta(7, 1.0).unwrap(), 0.0);
        assert!((budget_beta(4, 0.1).unwrap() - 3.7).abs() < 1e-12);
        assert!(budget_beta(3, 0.0).is_err());
        assert!(budget_beta(3, 1.5).is_err());
    }
}
