#![allow(dead_code)]

use kex_core::instance::{parse_instance, BloodType, NddVertex, PairVertex};
use kex_core::{CompatibilityGraph, Edge, VertexRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn toy() -> CompatibilityGraph {
    parse_instance(include_str!("../data/toy.json")).unwrap()
}

/// Sparse random graph with random cpra, unit weights and zero discounts.
pub fn random_graph(
    seed: u64,
    max_pairs: usize,
    max_ndds: usize,
    p_edge: f64,
) -> CompatibilityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = rng.gen_range(1..=max_pairs);
    let nn = rng.gen_range(0..=max_ndds);
    let pairs = (0..np)
        .map(|id| PairVertex {
            id,
            cpra: if rng.gen_bool(0.3) { 0.9 } else { 0.1 },
            blood_type_patient: BloodType::O,
            blood_type_donor: BloodType::O,
        })
        .collect();
    let ndds = (0..nn)
        .map(|id| NddVertex {
            id,
            blood_type_donor: BloodType::O,
        })
        .collect();
    let mut edges = Vec::new();
    let srcs: Vec<VertexRef> = (0..nn)
        .map(VertexRef::Ndd)
        .chain((0..np).map(VertexRef::Pair))
        .collect();
    for src in srcs {
        for dst in 0..np {
            if src == VertexRef::Pair(dst) || !rng.gen_bool(p_edge) {
                continue;
            }
            edges.push(Edge {
                id: edges.len(),
                src,
                dst,
                weight: 1.0,
                discount: 0.0,
            });
        }
    }
    CompatibilityGraph::new(pairs, ndds, edges).unwrap()
}

/// Random weights in [0.5, 2] and discounts in [0, weight].
pub fn randomize_weights(g: &CompatibilityGraph, seed: u64) -> CompatibilityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w: Vec<f64> = (0..g.num_edges())
        .map(|_| (rng.gen_range(0.5..2.0f64) * 4.0).round() / 4.0)
        .collect();
    let d: Vec<f64> = w
        .iter()
        .map(|&w: &f64| ((rng.gen_range(0.0..=w) * 4.0).round() / 4.0).min(w))
        .collect();
    g.with_weights(&w, &d).unwrap()
}
