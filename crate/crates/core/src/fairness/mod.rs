//! Prioritizing highly-sensitized patients.
//!
//! Weighted fairness scales the weight of every edge into a
//! highly-sensitized pair by `1 + γ` and clears the transformed graph.
//! Scores are always reported in the original weights.

use serde_json::{json, Value};
use thiserror::Error;

use crate::instance::{enumerate_cycles, CompatibilityGraph};
use crate::matchopt::{
    self, build_picef, build_pitsp, decode_matching, Formulation, FormulationConfig, MatchError,
    Matching,
};
use crate::milp::{solve_mip, LinExpr, Relation, Sense};

#[derive(Debug, Error)]
pub enum FairnessError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("utilitarian optimum is zero; price of fairness is undefined")]
    ZeroOptimum,
    #[error("no weight factor satisfies both targets: lower bound {lo} exceeds upper bound {hi}")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error(transparent)]
    Match(#[from] MatchError),
}

impl From<crate::milp::MilpError> for FairnessError {
    fn from(e: crate::milp::MilpError) -> Self {
        FairnessError::Match(MatchError::Solver(e))
    }
}

/// Pair and edge split by patient sensitization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub high_pairs: Vec<usize>,
    pub low_pairs: Vec<usize>,
    pub high_edges: Vec<usize>,
    pub low_edges: Vec<usize>,
    is_high: Vec<bool>,
}

impl Partition {
    /// Whether edge `e` ends in a highly-sensitized pair.
    pub fn is_high_edge(&self, g: &CompatibilityGraph, e: usize) -> bool {
        self.is_high[g.edge(e).dst]
    }
}

/// Splits pairs by `cpra ≥ τ`; an edge is high when its recipient is.
pub fn classify_sensitized(g: &CompatibilityGraph, tau: f64) -> Result<Partition, FairnessError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(FairnessError::Invalid(format!("tau {tau} outside [0, 1]")));
    }
    let is_high: Vec<bool> = g.pairs().iter().map(|p| p.cpra >= tau).collect();
    let (high_pairs, low_pairs) = (0..g.num_pairs()).partition(|&v| is_high[v]);
    let (high_edges, low_edges) = g
        .edges()
        .iter()
        .map(|e| e.id)
        .partition(|&e| is_high[g.edge(e).dst]);
    Ok(Partition {
        high_pairs,
        low_pairs,
        high_edges,
        low_edges,
        is_high,
    })
}

/// `(U_H, U_L)`: matched weight into high and low pairs.
pub fn utilities(m: &Matching, g: &CompatibilityGraph, part: &Partition) -> (f64, f64) {
    m.edges().into_iter().fold((0.0, 0.0), |(h, l), e| {
        let w = g.edge(e).weight;
        if part.is_high_edge(g, e) {
            (h + w, l)
        } else {
            (h, l + w)
        }
    })
}

fn check_gamma(gamma: f64) -> Result<(), FairnessError> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(FairnessError::Invalid(format!(
            "gamma {gamma} must be finite and non-negative"
        )))
    }
}

/// Weights scaled by `1 + γ` on high edges.
pub fn weighted_graph(g: &CompatibilityGraph, part: &Partition, gamma: f64) -> CompatibilityGraph {
    g.map_weights(|e| {
        if part.is_high_edge(g, e.id) {
            e.weight * (1.0 + gamma)
        } else {
            e.weight
        }
    })
}

/// Priority transform raising high edges by a factor `1 + α`, admissible
/// when `α Σ_e w_e ≤ Γ`.
pub fn prioritize_high(
    g: &CompatibilityGraph,
    part: &Partition,
    alpha: f64,
    budget: f64,
) -> Result<CompatibilityGraph, FairnessError> {
    if !(alpha >= 0.0) || alpha * g.total_weight() > budget + 1e-12 {
        return Err(FairnessError::Invalid(format!(
            "alpha {alpha} exceeds the prioritization budget"
        )));
    }
    Ok(weighted_graph(g, part, alpha))
}

/// Priority transform lowering low edges by a factor `1 − α`, admissible
/// when `α ∈ [0, 1]` and `α Σ_e w_e ≤ Γ`.
pub fn deprioritize_low(
    g: &CompatibilityGraph,
    part: &Partition,
    alpha: f64,
    budget: f64,
) -> Result<CompatibilityGraph, FairnessError> {
    if !(0.0..=1.0).contains(&alpha) || alpha * g.total_weight() > budget + 1e-12 {
        return Err(FairnessError::Invalid(format!(
            "alpha {alpha} exceeds the prioritization budget"
        )));
    }
    Ok(g.map_weights(|e| {
        if part.is_high_edge(g, e.id) {
            e.weight
        } else {
            e.weight * (1.0 - alpha)
        }
    }))
}

fn rescore(m: Matching, g: &CompatibilityGraph) -> Matching {
    let cycles = m
        .cycles
        .into_iter()
        .map(|mut c| {
            c.weight = c.edges.iter().map(|&e| g.edge(e).weight).sum();
            c
        })
        .collect();
    Matching::new(g, cycles, m.chains)
}

/// Clears with high edges weighted by `1 + γ`.
pub fn solve_weighted_fair(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    part: &Partition,
    gamma: f64,
) -> Result<Matching, FairnessError> {
    check_gamma(gamma)?;
    let m = matchopt::solve(&weighted_graph(g, part, gamma), cfg)?;
    Ok(rescore(m, g))
}

/// Maximum attainable `U_H`.
pub fn max_high_utility(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    part: &Partition,
) -> Result<f64, FairnessError> {
    let only_high = g.map_weights(|e| {
        if part.is_high_edge(g, e.id) {
            e.weight
        } else {
            0.0
        }
    });
    Ok(matchopt::solve(&only_high, cfg)?.nominal_score)
}

/// Maximum attainable `U_L`.
pub fn max_low_utility(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    part: &Partition,
) -> Result<f64, FairnessError> {
    let only_low = g.map_weights(|e| {
        if part.is_high_edge(g, e.id) {
            0.0
        } else {
            e.weight
        }
    });
    Ok(matchopt::solve(&only_low, cfg)?.nominal_score)
}

/// Price of fairness `(u* − u(M)) / u*`.
pub fn pof(chosen: &Matching, utilitarian_opt: f64) -> Result<f64, FairnessError> {
    if utilitarian_opt <= 0.0 {
        return Err(FairnessError::ZeroOptimum);
    }
    Ok((utilitarian_opt - chosen.nominal_score) / utilitarian_opt)
}

/// `U_H(M) / max U_H`, or 1 when no high utility is attainable.
pub fn percent_fair(m: &Matching, g: &CompatibilityGraph, part: &Partition, max_uh: f64) -> f64 {
    if max_uh <= 0.0 {
        return 1.0;
    }
    utilities(m, g, part).0 / max_uh
}

/// Weight factors meeting a fair-score target `f` and a price target `p`:
/// `[U_L*/U_H* / (1−f) − 1, p / (1−p)]`, lower end clamped at 0.
pub fn gamma_interval(
    f: f64,
    p: f64,
    ul_star: f64,
    uh_star: f64,
) -> Result<(f64, f64), FairnessError> {
    if !(0.0..1.0).contains(&f) || !(0.0..1.0).contains(&p) {
        return Err(FairnessError::Invalid(format!(
            "targets f={f}, p={p} must lie in [0, 1)"
        )));
    }
    if !(uh_star > 0.0) || !(ul_star >= 0.0) {
        return Err(FairnessError::Invalid(
            "U_H* must be positive and U_L* non-negative".into(),
        ));
    }
    let lo = (ul_star / uh_star / (1.0 - f) - 1.0).max(0.0);
    let hi = p / (1.0 - p);
    if lo > hi {
        return Err(FairnessError::EmptyInterval { lo, hi });
    }
    Ok((lo, hi))
}

/// Clears with `γ ∈ [lo, hi]` as a decision variable, maximizing
/// `U_L + (1+γ) U_H`. Each product `γ·x` of `γ` with a binary column is
/// linearized with big-M `hi`.
pub fn solve_variable_gamma(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    part: &Partition,
    interval: (f64, f64),
) -> Result<Matching, FairnessError> {
    let (lo, hi) = interval;
    check_gamma(lo)?;
    check_gamma(hi)?;
    if lo > hi {
        return Err(FairnessError::EmptyInterval { lo, hi });
    }
    cfg.validate()?;
    let cycles = enumerate_cycles(g, cfg.cycle_cap);
    let mut built = match cfg.formulation {
        Formulation::Picef => build_picef(g, &cycles, cfg.chain_cap),
        Formulation::Pitsp => build_pitsp(g, &cycles, cfg.chain_cap, cfg.min_chain_len),
    };
    let m = &mut built.model;
    let map = &built.map;
    let gamma = m.add_continuous("gamma", lo, hi).expect("fresh name");
    let mut obj = m.objective().clone();
    let columns = map
        .cycles
        .iter()
        .zip(&map.cycle_vars)
        .map(|(c, &z)| {
            (
                z,
                c.edges
                    .iter()
                    .filter(|&&e| part.is_high_edge(g, e))
                    .map(|&e| g.edge(e).weight)
                    .sum::<f64>(),
            )
        })
        .chain(map.chain_vars.iter().map(|cv| {
            let w = if part.is_high_edge(g, cv.edge) {
                g.edge(cv.edge).weight
            } else {
                0.0
            };
            (cv.var, w)
        }))
        .collect::<Vec<_>>();
    for (x, high) in columns {
        if high == 0.0 {
            continue;
        }
        let name = m.variable(x).name.clone();
        let t = m
            .add_continuous(format!("t_{name}"), 0.0, hi)
            .expect("fresh name");
        let mut row = |suffix: &str, e: LinExpr, rel: Relation, rhs: f64| {
            m.add_constraint(format!("t{suffix}_{name}"), e, rel, rhs)
                .expect("declared variables");
        };
        row("x", LinExpr::term(t, 1.0).with(x, -hi), Relation::Le, 0.0);
        row(
            "g",
            LinExpr::term(t, 1.0).with(gamma, -1.0),
            Relation::Le,
            0.0,
        );
        row(
            "lb",
            LinExpr::term(t, 1.0).with(gamma, -1.0).with(x, -hi),
            Relation::Ge,
            -hi,
        );
        obj.add(t, high);
    }
    m.set_objective(Sense::Maximize, obj)
        .expect("declared variables");
    let result = solve_mip(&built.model)?;
    Ok(decode_matching(&result, &built.map, g)?)
}

/// Outcome of a weighted-fair clear with its baselines.
#[derive(Debug, Clone)]
pub struct FairnessReport {
    pub gamma: f64,
    /// Set when `γ` was a decision variable on this interval.
    pub interval: Option<(f64, f64)>,
    pub matching: Matching,
    pub utilitarian_opt: f64,
    pub max_high: f64,
    pub max_low: f64,
    pub pof: Option<f64>,
    pub percent_fair: f64,
    /// No high utility is attainable, so `percent_fair` is 1 by convention.
    pub vacuous: bool,
}

impl FairnessReport {
    /// Upper bound `γ/(1+γ)` on the price of fairness (at the top of the
    /// interval when `γ` was free).
    pub fn pof_max(&self) -> f64 {
        let g = self.interval.map_or(self.gamma, |(_, hi)| hi);
        g / (1.0 + g)
    }

    /// Lower bound `1 − (U_L*/U_H*)/(1+γ)` on the fair-score fraction (at
    /// the bottom of the interval when `γ` was free).
    pub fn pf_min(&self) -> Option<f64> {
        let g = self.interval.map_or(self.gamma, |(lo, _)| lo);
        (self.max_high > 0.0).then(|| 1.0 - self.max_low / self.max_high / (1.0 + g))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "gamma": self.gamma,
            "gamma_interval": self.interval.map(|(lo, hi)| [lo, hi]),
            "pof": self.pof,
            "percent_fair": self.percent_fair,
            "percent_fair_vacuous": self.vacuous,
            "utilitarian_opt": self.utilitarian_opt,
            "max_high_utility": self.max_high,
            "bounds": {"pof_max": self.pof_max(), "pf_min": self.pf_min()},
            "matching": self.matching.to_json(),
        })
    }
}

/// Weighted-fair clear plus the utilitarian and `U_H`/`U_L` baselines.
pub fn evaluate_weighted_fair(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    tau: f64,
    gamma: f64,
) -> Result<FairnessReport, FairnessError> {
    let part = classify_sensitized(g, tau)?;
    let matching = solve_weighted_fair(g, cfg, &part, gamma)?;
    let utilitarian_opt = matchopt::solve(g, cfg)?.nominal_score;
    let max_high = max_high_utility(g, cfg, &part)?;
    let max_low = max_low_utility(g, cfg, &part)?;
    Ok(FairnessReport {
        gamma,
        interval: None,
        pof: pof(&matching, utilitarian_opt).ok(),
        percent_fair: percent_fair(&matching, g, &part, max_high),
        vacuous: max_high <= 0.0,
        matching,
        utilitarian_opt,
        max_high,
        max_low,
    })
}

/// Variable-γ clear on the interval meeting fair-score target `f` and price
/// target `p`. The reported `gamma` is the interval's upper end when the
/// matching gives any high utility (the objective then pushes `γ` up), else
/// its lower end.
pub fn evaluate_variable_gamma(
    g: &CompatibilityGraph,
    cfg: &FormulationConfig,
    tau: f64,
    f: f64,
    p: f64,
) -> Result<FairnessReport, FairnessError> {
    let part = classify_sensitized(g, tau)?;
    let utilitarian_opt = matchopt::solve(g, cfg)?.nominal_score;
    let max_high = max_high_utility(g, cfg, &part)?;
    let max_low = max_low_utility(g, cfg, &part)?;
    let interval = gamma_interval(f, p, max_low, max_high)?;
    let matching = solve_variable_gamma(g, cfg, &part, interval)?;
    let gamma = if utilities(&matching, g, &part).0 > 0.0 {
        interval.1
    } else {
        interval.0
    };
    Ok(FairnessReport {
        gamma,
        interval: Some(interval),
        pof: pof(&matching, utilitarian_opt).ok(),
        percent_fair: percent_fair(&matching, g, &part, max_high),
        vacuous: false,
        matching,
        utilitarian_opt,
        max_high,
        max_low,
    })
}
