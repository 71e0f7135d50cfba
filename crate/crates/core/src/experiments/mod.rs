//! Monte-Carlo comparison of robust and non-robust matchings.
//!
//! Each trial draws one realization of the uncertainty, scores both
//! matchings on it and records the shortfall `ΔOPT = (|M_OPT| − |M|)/|M_OPT|`
//! relative to the nominal optimum. Trial `t` draws from its own ChaCha8
//! stream `(seed, t)`, shared by both policies, so reports do not depend on
//! the number of worker threads.

mod stats;

pub use stats::{histogram_difference, wilcoxon_signed_rank, HistogramDiff, Summary, Wilcoxon};

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::instance::CompatibilityGraph;
use crate::matchopt::{self, FormulationConfig, MatchError, Matching};
use crate::robust_exist::solve_robust_existence;
use crate::robust_weight::{
    solve_robust_weight_constant, solve_robust_weight_variable, Method, RobustError,
};

pub const DEFAULT_TRIALS: usize = 400;
pub const DEFAULT_BINS: usize = 40;
pub const DELTA_RANGE: (f64, f64) = (-1.0, 1.0);

/// Stream index reserved for edge labelling; trials use `0..N`.
const LABEL_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Random generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// What is uncertain in a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealizationMode {
    /// A fraction of edges is probabilistic with weight 0 or 1; the rest
    /// weigh 0.5.
    Weight { alpha_frac: f64 },
    /// Exactly `gamma_fail` matched edges fail.
    Existence { gamma_fail: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationConfig {
    pub mode: RealizationMode,
    pub trials: usize,
    pub seed: u64,
}

impl RealizationConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::Invalid(
                "at least one trial is required".into(),
            ));
        }
        if let RealizationMode::Weight { alpha_frac } = self.mode {
            if !(0.0..=1.0).contains(&alpha_frac) {
                return Err(ExperimentError::Invalid(format!(
                    "alpha_frac {alpha_frac} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// How the robust matching is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RobustPolicy {
    WeightBudget(f64),
    WeightProtection(f64),
    Existence(f64),
}

/// Edge labels with the induced nominal weights and discounts.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLabels {
    pub probabilistic: Vec<bool>,
    pub weights: Vec<f64>,
    pub discounts: Vec<f64>,
}

/// Marks each edge probabilistic with probability `alpha_frac`. Every
/// nominal weight is 0.5; probabilistic edges get discount 0.5.
pub fn label_and_weight_edges(
    g: &CompatibilityGraph,
    alpha_frac: f64,
    rng: &mut impl Rng,
) -> EdgeLabels {
    let probabilistic: Vec<bool> = (0..g.num_edges())
        .map(|_| rng.gen_bool(alpha_frac))
        .collect();
    let discounts = probabilistic
        .iter()
        .map(|&p| if p { 0.5 } else { 0.0 })
        .collect();
    EdgeLabels {
        weights: vec![0.5; g.num_edges()],
        discounts,
        probabilistic,
    }
}

/// Probabilistic edges weigh 0 or 1 with equal probability, others 0.5.
pub fn sample_weight_realization(labels: &EdgeLabels, rng: &mut impl Rng) -> Vec<f64> {
    labels
        .probabilistic
        .iter()
        .map(|&p| {
            if p {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.5
            }
        })
        .collect()
}

/// Uniform subset of exactly `gamma_fail` matched edges (all of them if
/// fewer), ascending.
pub fn sample_existence_realization(
    m: &Matching,
    gamma_fail: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let edges = m.edges();
    if gamma_fail >= edges.len() {
        return edges;
    }
    let mut failed: Vec<usize> = sample(rng, edges.len(), gamma_fail)
        .into_iter()
        .map(|i| edges[i])
        .collect();
    failed.sort_unstable();
    failed
}

/// One draw of the uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    /// Realized weight per edge.
    Weights(Vec<f64>),
    /// Failed edge ids.
    Failures(Vec<usize>),
}

/// Realized matched weight. A failed edge voids its cycle; a chain keeps
/// the prefix before its first failed edge.
pub fn realized_score(m: &Matching, g: &CompatibilityGraph, r: &Realization) -> f64 {
    match r {
        Realization::Weights(w) => m.edges().iter().map(|&e| w[e]).sum(),
        Realization::Failures(failed) => {
            let ok = |e: &usize| failed.binary_search(e).is_err();
            let cycles: f64 = m
                .cycles
                .iter()
                .filter(|c| c.edges.iter().all(ok))
                .map(|c| c.weight)
                .sum();
            let chains: f64 = m
                .chains
                .values()
                .map(|es| {
                    es.iter()
                        .take_while(|e| ok(e))
                        .map(|&e| g.edge(e).weight)
                        .sum::<f64>()
                })
                .sum();
            cycles + chains
        }
    }
}

/// `(opt − score) / opt`.
pub fn delta_opt(score: f64, opt_score: f64) -> f64 {
    assert!(opt_score > 0.0, "optimal score must be positive");
    (opt_score - score) / opt_score
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub formulation: FormulationConfig,
    pub policy: RobustPolicy,
    pub realization: RealizationConfig,
    pub bins: usize,
    /// Worker threads for the trials.
    pub jobs: usize,
}

/// Per-policy outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub matching: Matching,
    pub realized: Vec<f64>,
    pub delta_opt: Vec<f64>,
    pub summary: Summary,
}

impl PolicyResult {
    fn new(matching: Matching, realized: Vec<f64>, opt: f64) -> Self {
        let delta_opt: Vec<f64> = realized.iter().map(|&s| delta_opt(s, opt)).collect();
        PolicyResult {
            summary: Summary::of(&delta_opt),
            matching,
            realized,
            delta_opt,
        }
    }

    fn to_json(&self) -> Value {
        let s = &self.summary;
        json!({
            "nominal_score": self.matching.nominal_score,
            "matching": self.matching.to_json(),
            "summary": {"mean": s.mean, "std": s.std, "min": s.min, "max": s.max},
            "delta_opt": self.delta_opt,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub opt_score: f64,
    pub robust: PolicyResult,
    pub nonrobust: PolicyResult,
    /// Robust minus non-robust ΔOPT densities.
    pub histogram: HistogramDiff,
    /// Robust against non-robust ΔOPT.
    pub wilcoxon: Wilcoxon,
}

/// A completed report, or a skipped instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed(Box<TrialReport>),
    /// The nominal optimum is empty.
    Skipped {
        reason: String,
    },
}

impl Outcome {
    pub fn report(&self) -> Option<&TrialReport> {
        match self {
            Outcome::Completed(r) => Some(r),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn to_json(&self, cfg: &ExperimentConfig) -> Value {
        let (mode, param) = match cfg.realization.mode {
            RealizationMode::Weight { alpha_frac } => ("weight", json!({"alpha_frac": alpha_frac})),
            RealizationMode::Existence { gamma_fail } => {
                ("existence", json!({"gamma_fail": gamma_fail}))
            }
        };
        let policy = match cfg.policy {
            RobustPolicy::WeightBudget(g) => json!({"model": "weight", "gamma": g}),
            RobustPolicy::WeightProtection(e) => json!({"model": "weight", "epsilon": e}),
            RobustPolicy::Existence(g) => json!({"model": "existence", "gamma": g}),
        };
        let mut v = json!({
            "mode": mode,
            "realization": param,
            "policy": policy,
            "trials": cfg.realization.trials,
            "seed": cfg.realization.seed,
        });
        match self {
            Outcome::Skipped { reason } => {
                v["skipped"] = json!(true);
                v["reason"] = json!(reason);
            }
            Outcome::Completed(r) => {
                v["skipped"] = json!(false);
                v["opt_score"] = json!(r.opt_score);
                v["policies"] =
                    json!({"robust": r.robust.to_json(), "nonrobust": r.nonrobust.to_json()});
                v["histogram"] = json!({
                    "edges": r.histogram.edges,
                    "robust": r.histogram.density_a,
                    "nonrobust": r.histogram.density_b,
                    "difference": r.histogram.difference,
                });
                v["wilcoxon"] = json!({
                    "statistic": r.wilcoxon.statistic,
                    "p_value": r.wilcoxon.p_value,
                    "n": r.wilcoxon.n,
                });
            }
        }
        v
    }

    /// `trial,policy,realized_score,delta_opt` rows; header only when skipped.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,policy,realized_score,delta_opt\n");
        if let Outcome::Completed(r) = self {
            for t in 0..r.robust.realized.len() {
                for (name, p) in [("robust", &r.robust), ("nonrobust", &r.nonrobust)] {
                    writeln!(out, "{t},{name},{},{}", p.realized[t], p.delta_opt[t])
                        .expect("string write");
                }
            }
        }
        out
    }
}

fn realize(
    g: &CompatibilityGraph,
    mode: RealizationMode,
    labels: Option<&EdgeLabels>,
    m: &Matching,
    seed: u64,
    trial: usize,
) -> f64 {
    let mut rng = stream_rng(seed, trial as u64);
    let r = match mode {
        RealizationMode::Weight { .. } => Realization::Weights(sample_weight_realization(
            labels.expect("weight mode labels"),
            &mut rng,
        )),
        RealizationMode::Existence { gamma_fail } => {
            Realization::Failures(sample_existence_realization(m, gamma_fail, &mut rng))
        }
    };
    realized_score(m, g, &r)
}

fn run_trials(
    g: &CompatibilityGraph,
    cfg: &ExperimentConfig,
    labels: Option<&EdgeLabels>,
    m: &Matching,
) -> Vec<f64> {
    let n = cfg.realization.trials;
    let mode = cfg.realization.mode;
    let seed = cfg.realization.seed;
    let jobs = cfg.jobs.clamp(1, n);
    let mut out = vec![0.0; n];
    let chunk = n.div_ceil(jobs);
    std::thread::scope(|s| {
        for (k, slot) in out.chunks_mut(chunk).enumerate() {
            s.spawn(move || {
                for (i, x) in slot.iter_mut().enumerate() {
                    *x = realize(g, mode, labels, m, seed, k * chunk + i);
                }
            });
        }
    });
    out
}

/// Runs the robust-vs-non-robust comparison on `g`.
///
/// Weight mode relabels every edge first (weights 0.5, discount 0.5 on
/// probabilistic edges); existence mode keeps the graph's weights. The
/// non-robust matching is the nominal optimum.
pub fn run_experiment(
    g: &CompatibilityGraph,
    cfg: &ExperimentConfig,
) -> Result<Outcome, ExperimentError> {
    cfg.realization.validate()?;
    if cfg.bins == 0 {
        return Err(ExperimentError::Invalid(
            "at least one histogram bin is required".into(),
        ));
    }
    let (graph, labels) = match (cfg.realization.mode, cfg.policy) {
        (
            RealizationMode::Weight { alpha_frac },
            RobustPolicy::WeightBudget(_) | RobustPolicy::WeightProtection(_),
        ) => {
            let labels = label_and_weight_edges(
                g,
                alpha_frac,
                &mut stream_rng(cfg.realization.seed, LABEL_STREAM),
            );
            let graph = g
                .with_weights(&labels.weights, &labels.discounts)
                .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
            (graph, Some(labels))
        }
        (RealizationMode::Existence { .. }, RobustPolicy::Existence(_)) => (g.clone(), None),
        _ => {
            return Err(ExperimentError::Invalid(
                "robust policy does not match the realization mode".into(),
            ))
        }
    };
    let opt = matchopt::solve(&graph, &cfg.formulation)?;
    if opt.nominal_score <= 0.0 {
        return Ok(Outcome::Skipped {
            reason: "nominal optimum is empty".into(),
        });
    }
    let robust = match cfg.policy {
        RobustPolicy::WeightBudget(gamma) => {
            solve_robust_weight_constant(&graph, &cfg.formulation, gamma, Method::Enumerate)?
        }
        RobustPolicy::WeightProtection(eps) => {
            solve_robust_weight_variable(&graph, &cfg.formulation, eps)?
        }
        RobustPolicy::Existence(gamma) => solve_robust_existence(&graph, &cfg.formulation, gamma)?,
    };
    let r_scores = run_trials(&graph, cfg, labels.as_ref(), &robust);
    let nr_scores = run_trials(&graph, cfg, labels.as_ref(), &opt);
    let opt_score = opt.nominal_score;
    let robust = PolicyResult::new(robust, r_scores, opt_score);
    let nonrobust = PolicyResult::new(opt, nr_scores, opt_score);
    let histogram = histogram_difference(
        &robust.delta_opt,
        &nonrobust.delta_opt,
        cfg.bins,
        Some(DELTA_RANGE),
    );
    let wilcoxon = wilcoxon_signed_rank(&robust.delta_opt, &nonrobust.delta_opt);
    Ok(Outcome::Completed(Box::new(TrialReport {
        opt_score,
        robust,
        nonrobust,
        histogram,
        wilcoxon,
    })))
}
