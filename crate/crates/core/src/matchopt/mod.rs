//! Deterministic clearing: PICEF and PI-TSP formulations, decoding, and an
//! exhaustive oracle.

mod brute;
mod picef;
mod pitsp;

pub use brute::{brute_force_clear, for_each_matching};
pub use picef::{build_picef, build_picef_by_donor};
pub use pitsp::build_pitsp;

use std::collections::{BTreeMap, HashSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::instance::{enumerate_cycles, CompatibilityGraph, Cycle, VertexRef};
use crate::milp::{solve_mip, MilpError, MilpModel, SolveResult, SolveStatus, VarId};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] MilpError),
    #[error("model is {0:?}")]
    NotOptimal(SolveStatus),
    #[error("internal error decoding solution: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    #[default]
    Picef,
    Pitsp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormulationConfig {
    pub formulation: Formulation,
    pub cycle_cap: usize,
    pub chain_cap: usize,
    /// PI-TSP only.
    pub min_chain_len: usize,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        FormulationConfig {
            formulation: Formulation::Picef,
            cycle_cap: crate::instance::DEFAULT_CYCLE_CAP,
            chain_cap: 4,
            min_chain_len: 0,
        }
    }
}

impl FormulationConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if self.cycle_cap < 2 {
            return Err(MatchError::Config("cycle cap must be at least 2".into()));
        }
        // min_chain_len > chain_cap is accepted: it forbids every chain.
        if self.min_chain_len > 0 && self.formulation == Formulation::Picef {
            return Err(MatchError::Config(
                "minimum chain length requires the pitsp formulation".into(),
            ));
        }
        Ok(())
    }
}

/// A set of vertex-disjoint cycles and NDD-initiated chains.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Sorted by vertex sequence.
    pub cycles: Vec<Cycle>,
    /// NDD id → edge ids in chain order. Only non-empty chains are stored.
    pub chains: BTreeMap<usize, Vec<usize>>,
    pub nominal_score: f64,
    pub robust_score: Option<f64>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching {
            cycles: Vec::new(),
            chains: BTreeMap::new(),
            nominal_score: 0.0,
            robust_score: None,
        }
    }

    pub fn new(
        g: &CompatibilityGraph,
        mut cycles: Vec<Cycle>,
        chains: BTreeMap<usize, Vec<usize>>,
    ) -> Self {
        cycles.sort_by(|a, b| a.vertices.cmp(&b.vertices));
        let chains: BTreeMap<usize, Vec<usize>> =
            chains.into_iter().filter(|(_, c)| !c.is_empty()).collect();
        let nominal_score = 0.0
            + cycles.iter().map(|c| c.weight).sum::<f64>()
            + chains
                .values()
                .flatten()
                .map(|&e| g.edge(e).weight)
                .sum::<f64>();
        Matching {
            cycles,
            chains,
            nominal_score,
            robust_score: None,
        }
    }

    /// All matched edge ids, ascending.
    pub fn edges(&self) -> Vec<usize> {
        let mut es: Vec<usize> = self
            .cycles
            .iter()
            .flat_map(|c| c.edges.iter().copied())
            .chain(self.chains.values().flatten().copied())
            .collect();
        es.sort_unstable();
        es
    }

    pub fn num_edges(&self) -> usize {
        self.cycles.iter().map(|c| c.edges.len()).sum::<usize>()
            + self.chains.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty() && self.chains.is_empty()
    }

    /// Checks the structural invariants against `g` and the caps.
    pub fn validate(
        &self,
        g: &CompatibilityGraph,
        cycle_cap: usize,
        chain_cap: usize,
    ) -> Result<(), String> {
        let mut used = HashSet::new();
        for c in &self.cycles {
            if c.len() > cycle_cap {
                return Err(format!("cycle {:?} longer than {cycle_cap}", c.vertices));
            }
            for (k, &e) in c.edges.iter().enumerate() {
                let edge = g.edge(e);
                let next = c.vertices[(k + 1) % c.len()];
                if edge.src != VertexRef::Pair(c.vertices[k]) || edge.dst != next {
                    return Err(format!("cycle {:?} is not closed by its edges", c.vertices));
                }
            }
            for &v in &c.vertices {
                if !used.insert(v) {
                    return Err(format!("pair {v} used twice"));
                }
            }
        }
        for (&n, chain) in &self.chains {
            if chain.len() > chain_cap {
                return Err(format!("chain of ndd {n} longer than {chain_cap}"));
            }
            let mut at = VertexRef::Ndd(n);
            for &e in chain {
                let edge = g.edge(e);
                if edge.src != at {
                    return Err(format!("chain of ndd {n} is not a path"));
                }
                if !used.insert(edge.dst) {
                    return Err(format!("pair {} used twice", edge.dst));
                }
                at = VertexRef::Pair(edge.dst);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let cycles: Vec<&Vec<usize>> = self.cycles.iter().map(|c| &c.edges).collect();
        let chains: BTreeMap<String, &Vec<usize>> = self
            .chains
            .iter()
            .map(|(n, c)| (n.to_string(), c))
            .collect();
        json!({
            "score": self.nominal_score,
            "cycles": cycles,
            "chains": chains,
        })
    }
}

/// One chain-edge decision variable: edge `edge` at `position` (PICEF) or in
/// the chain of `ndd` (PI-TSP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChainVar {
    pub ndd: Option<usize>,
    pub edge: usize,
    pub position: usize,
    pub var: VarId,
}

/// Links model variables back to cycles and chain edges.
#[derive(Debug, Clone)]
pub struct DecodeMap {
    pub(crate) cycles: Vec<Cycle>,
    pub(crate) cycle_vars: Vec<VarId>,
    pub(crate) chain_vars: Vec<ChainVar>,
    /// PI-TSP: `w^N_n` per NDD.
    pub(crate) chain_weight_vars: Vec<Option<VarId>>,
}

impl DecodeMap {
    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: MilpModel,
    pub map: DecodeMap,
}

/// Edge-count distance from any of `sources` to each pair vertex along
/// pair-to-pair edges, the first hop being an NDD edge. `usize::MAX` when
/// unreachable.
pub(crate) fn chain_distances(g: &CompatibilityGraph, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.num_pairs()];
    let mut queue = std::collections::VecDeque::new();
    for &n in sources {
        for &e in g.ndd_out_edges(n) {
            let v = g.edge(e).dst;
            if dist[v] == usize::MAX {
                dist[v] = 1;
                queue.push_back(v);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        for &e in g.out_edges(u) {
            let v = g.edge(e).dst;
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// `Some(1.0)` when every edge and cycle weight is integral.
pub(crate) fn unit_granularity(g: &CompatibilityGraph, cycles: &[Cycle]) -> Option<f64> {
    let integral = |w: f64| w.fract() == 0.0;
    (g.edges().iter().all(|e| integral(e.weight)) && cycles.iter().all(|c| integral(c.weight)))
        .then_some(1.0)
}

/// Model variable name of a cycle, stable across cycle subsets.
pub(crate) fn cycle_var_name(c: &Cycle) -> String {
    let vs: Vec<String> = c.vertices.iter().map(usize::to_string).collect();
    format!("z_{}", vs.join("_"))
}

/// Reconstructs a matching from an optimal assignment.
pub fn decode_matching(
    result: &SolveResult,
    map: &DecodeMap,
    g: &CompatibilityGraph,
) -> Result<Matching, MatchError> {
    if result.status != SolveStatus::Optimal {
        return Err(MatchError::NotOptimal(result.status));
    }
    let on = |v: VarId| result.value(v) > 0.5;
    let cycles: Vec<Cycle> = map
        .cycles
        .iter()
        .zip(&map.cycle_vars)
        .filter(|(_, &v)| on(v))
        .map(|(c, _)| c.clone())
        .collect();
    let mut selected: Vec<ChainVar> = map
        .chain_vars
        .iter()
        .copied()
        .filter(|cv| on(cv.var))
        .collect();
    let mut chains = BTreeMap::new();
    for n in 0..g.num_ndds() {
        let mut at = VertexRef::Ndd(n);
        let mut chain = Vec::new();
        loop {
            let next = selected
                .iter()
                .position(|cv| g.edge(cv.edge).src == at && cv.ndd.map_or(true, |m| m == n));
            let Some(i) = next else { break };
            let cv = selected.swap_remove(i);
            chain.push(cv.edge);
            at = VertexRef::Pair(g.edge(cv.edge).dst);
            if chain.len() > g.num_pairs() {
                return Err(MatchError::Decode("chain does not terminate".into()));
            }
        }
        if !chain.is_empty() {
            chains.insert(n, chain);
        }
    }
    if let Some(cv) = selected.first() {
        return Err(MatchError::Decode(format!(
            "chain edge {} is not reachable from its donor",
            cv.edge
        )));
    }
    Ok(Matching::new(g, cycles, chains))
}

/// Builds the configured formulation over all cycles up to the cap.
pub fn build(g: &CompatibilityGraph, cfg: &FormulationConfig) -> Result<BuiltModel, MatchError> {
    cfg.validate()?;
    let cycles = enumerate_cycles(g, cfg.cycle_cap);
    Ok(match cfg.formulation {
        Formulation::Picef => build_picef(g, &cycles, cfg.chain_cap),
        Formulation::Pitsp => build_pitsp(g, &cycles, cfg.chain_cap, cfg.min_chain_len),
    })
}

/// Deterministic maximum-weight clearing.
pub fn solve(g: &CompatibilityGraph, cfg: &FormulationConfig) -> Result<Matching, MatchError> {
    let built = build(g, cfg)?;
    let result = solve_mip(&built.model)?;
    let m = decode_matching(&result, &built.map, g)?;
    debug_assert!((m.nominal_score - result.objective).abs() < 1e-6);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_matching_json() {
        let m = Matching::empty();
        assert_eq!(
            m.to_json().to_string(),
            r#"{"chains":{},"cycles":[],"score":0.0}"#
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = FormulationConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.cycle_cap = 1;
        assert!(cfg.validate().is_err());
        cfg.cycle_cap = 3;
        cfg.min_chain_len = 2;
        assert!(cfg.validate().is_err());
        cfg.formulation = Formulation::Pitsp;
        assert!(cfg.validate().is_ok());
    }
}
