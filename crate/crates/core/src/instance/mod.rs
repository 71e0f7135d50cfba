//! Compatibility graph model: patient-donor pairs, non-directed donors (NDDs)
//! and weighted transplant edges.

mod cycles;
mod generate;
mod io;

pub use cycles::{enumerate_cycles, Cycle};
pub use generate::{generate_instance, generate_with, GeneratorConfig};
pub use io::{parse_instance, serialize_instance};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default maximum cycle length used in fielded exchanges.
pub const DEFAULT_CYCLE_CAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BloodType {
    #[default]
    O,
    A,
    B,
    AB,
}

impl BloodType {
    /// ABO compatibility of a donor kidney with a patient.
    pub fn can_donate_to(self, patient: BloodType) -> bool {
        use BloodType::*;
        matches!(
            (self, patient),
            (O, _) | (A, A) | (A, AB) | (B, B) | (B, AB) | (AB, AB)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairVertex {
    pub id: usize,
    /// Patient sensitization in [0, 1].
    pub cpra: f64,
    pub blood_type_patient: BloodType,
    pub blood_type_donor: BloodType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NddVertex {
    pub id: usize,
    pub blood_type_donor: BloodType,
}

/// Tail of an edge. Pairs and NDDs have separate id spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexRef {
    Pair(usize),
    Ndd(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub src: VertexRef,
    /// Head pair vertex; edges never enter an NDD.
    pub dst: usize,
    pub weight: f64,
    /// Maximum downward deviation of the weight, `0 <= discount <= weight`.
    pub discount: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("malformed instance: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl InstanceError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Directed compatibility graph. Immutable once built; edge `i` has id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityGraph {
    pairs: Vec<PairVertex>,
    ndds: Vec<NddVertex>,
    edges: Vec<Edge>,
    pair_in: Vec<Vec<usize>>,
    pair_out: Vec<Vec<usize>>,
    ndd_out: Vec<Vec<usize>>,
    pair_edge: std::collections::HashMap<(usize, usize), usize>,
}

impl CompatibilityGraph {
    /// Validates and indexes a graph. Vertices and edges may be given in any
    /// order but their ids must be dense.
    pub fn new(
        mut pairs: Vec<PairVertex>,
        mut ndds: Vec<NddVertex>,
        mut edges: Vec<Edge>,
    ) -> Result<Self, InstanceError> {
        pairs.sort_by_key(|p| p.id);
        ndds.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| e.id);
        for (i, p) in pairs.iter().enumerate() {
            if p.id != i {
                return Err(InstanceError::invalid(
                    format!("pairs[id={}]", p.id),
                    "pair ids must be unique and dense from 0",
                ));
            }
            if !(0.0..=1.0).contains(&p.cpra) {
                return Err(InstanceError::invalid(
                    format!("pairs[id={}].cpra", p.id),
                    format!("cpra {} outside [0, 1]", p.cpra),
                ));
            }
        }
        for (i, n) in ndds.iter().enumerate() {
            if n.id != i {
                return Err(InstanceError::invalid(
                    format!("ndds[id={}]", n.id),
                    "ndd ids must be unique and dense from 0",
                ));
            }
        }
        let mut pair_in = vec![Vec::new(); pairs.len()];
        let mut pair_out = vec![Vec::new(); pairs.len()];
        let mut ndd_out = vec![Vec::new(); ndds.len()];
        let mut seen = std::collections::HashSet::new();
        let mut pair_edge = std::collections::HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            let field = format!("edges[id={}]", e.id);
            if e.id != i {
                return Err(InstanceError::invalid(
                    field,
                    "edge ids must be unique and dense from 0",
                ));
            }
            if e.dst >= pairs.len() {
                return Err(InstanceError::invalid(
                    format!("{field}.dst"),
                    format!("no pair vertex with id {}", e.dst),
                ));
            }
            match e.src {
                VertexRef::Pair(s) if s >= pairs.len() => {
                    return Err(InstanceError::invalid(
                        format!("{field}.src"),
                        format!("no pair vertex with id {s}"),
                    ))
                }
                VertexRef::Pair(s) if s == e.dst => {
                    return Err(InstanceError::invalid(field, "self-loop"));
                }
                VertexRef::Ndd(n) if n >= ndds.len() => {
                    return Err(InstanceError::invalid(
                        format!("{field}.src"),
                        format!("no ndd vertex with id {n}"),
                    ))
                }
                _ => {}
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(InstanceError::invalid(
                    format!("{field}.weight"),
                    format!("weight {} must be finite and non-negative", e.weight),
                ));
            }
            if !e.discount.is_finite() || e.discount < 0.0 || e.discount > e.weight {
                return Err(InstanceError::invalid(
                    format!("{field}.discount"),
                    format!("discount {} outside [0, weight={}]", e.discount, e.weight),
                ));
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(InstanceError::invalid(
                    field,
                    "duplicate edge between the same endpoints",
                ));
            }
            pair_in[e.dst].push(i);
            match e.src {
                VertexRef::Pair(s) => {
                    pair_out[s].push(i);
                    pair_edge.insert((s, e.dst), i);
                }
                VertexRef::Ndd(n) => ndd_out[n].push(i),
            }
        }
        Ok(CompatibilityGraph {
            pairs,
            ndds,
            edges,
            pair_in,
            pair_out,
            ndd_out,
            pair_edge,
        })
    }

    pub fn empty() -> Self {
        CompatibilityGraph::new(Vec::new(), Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    pub fn pairs(&self) -> &[PairVertex] {
        &self.pairs
    }

    pub fn ndds(&self) -> &[NddVertex] {
        &self.ndds
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_ndds(&self) -> usize {
        self.ndds.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges entering pair `v` (δ⁻(v)).
    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.pair_in[v]
    }

    /// Edges leaving pair `v` (δ⁺(v)).
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.pair_out[v]
    }

    /// Edges leaving NDD `n`.
    pub fn ndd_out_edges(&self, n: usize) -> &[usize] {
        &self.ndd_out[n]
    }

    pub fn out_edges_of(&self, v: VertexRef) -> &[usize] {
        match v {
            VertexRef::Pair(p) => self.out_edges(p),
            VertexRef::Ndd(n) => self.ndd_out_edges(n),
        }
    }

    /// Edge id from pair `u` to pair `v`, if present.
    pub fn pair_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.pair_edge.get(&(u, v)).copied()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same topology and vertex data with new per-edge weights and discounts.
    pub fn with_weights(&self, weights: &[f64], discounts: &[f64]) -> Result<Self, InstanceError> {
        assert_eq!(weights.len(), self.edges.len());
        assert_eq!(discounts.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(weights.iter().zip(discounts))
            .map(|(e, (&w, &d))| Edge {
                weight: w,
                discount: d,
                ..e.clone()
            })
            .collect();
        CompatibilityGraph::new(self.pairs.clone(), self.ndds.clone(), edges)
    }

    /// Same graph with every edge weight transformed by `f(edge)`; discounts are
    /// clamped into the new `[0, weight]` range.
    pub fn map_weights(&self, f: impl Fn(&Edge) -> f64) -> Self {
        let weights: Vec<f64> = self.edges.iter().map(&f).collect();
        let discounts: Vec<f64> = self
            .edges
            .iter()
            .zip(&weights)
            .map(|(e, &w)| e.discount.min(w))
            .collect();
        self.with_weights(&weights, &discounts)
            .expect("weight map preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: usize) -> PairVertex {
        PairVertex {
            id,
            cpra: 0.0,
            blood_type_patient: BloodType::O,
            blood_type_donor: BloodType::O,
        }
    }

    fn edge(id: usize, src: VertexRef, dst: usize) -> Edge {
        Edge {
            id,
            src,
            dst,
            weight: 1.0,
            discount: 0.0,
        }
    }

    #[test]
    fn adjacency_matches_edge_list() {
        let g = CompatibilityGraph::new(
            vec![pair(0), pair(1)],
            vec![NddVertex {
                id: 0,
                blood_type_donor: BloodType::A,
            }],
            vec![
                edge(0, VertexRef::Pair(0), 1),
                edge(1, VertexRef::Pair(1), 0),
                edge(2, VertexRef::Ndd(0), 0),
            ],
        )
        .unwrap();
        assert_eq!(g.in_edges(0), &[1, 2]);
        assert_eq!(g.out_edges(0), &[0]);
        assert_eq!(g.ndd_out_edges(0), &[2]);
        assert_eq!(g.pair_edge(1, 0), Some(1));
        assert_eq!(g.pair_edge(0, 0), None);
    }

    #[test]
    fn rejects_bad_edges() {
        let self_loop =
            CompatibilityGraph::new(vec![pair(0)], vec![], vec![edge(0, VertexRef::Pair(0), 0)]);
        assert!(self_loop.is_err());
        let dup = CompatibilityGraph::new(
            vec![pair(0), pair(1)],
            vec![],
            vec![
                edge(0, VertexRef::Pair(0), 1),
                edge(1, VertexRef::Pair(0), 1),
            ],
        );
        assert!(dup.is_err());
        let mut e = edge(0, VertexRef::Pair(0), 1);
        e.discount = 2.0;
        assert!(CompatibilityGraph::new(vec![pair(0), pair(1)], vec![], vec![e]).is_err());
    }

    #[test]
    fn abo_rules() {
        use BloodType::*;
        assert!(O.can_donate_to(AB));
        assert!(A.can_donate_to(AB));
        assert!(!A.can_donate_to(B));
        assert!(!AB.can_donate_to(O));
        assert!(AB.can_donate_to(AB));
    }
}
