//! Synthetic pool generator in the style of the usual blood-type/CPRA
//! simulators. Constants live in [`GeneratorConfig`].

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BloodType, CompatibilityGraph, Edge, NddVertex, PairVertex, VertexRef};

const BLOOD_TYPES: [BloodType; 4] = [BloodType::O, BloodType::A, BloodType::B, BloodType::AB];

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Frequencies of O, A, B, AB (patients and donors alike).
    pub blood_type_freq: [f64; 4],
    /// CPRA levels and their probabilities.
    pub cpra_levels: Vec<(f64, f64)>,
    pub weight: f64,
    pub discount: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            blood_type_freq: [0.48, 0.34, 0.14, 0.04],
            cpra_levels: vec![(0.05, 0.7), (0.45, 0.2), (0.90, 0.1)],
            weight: 1.0,
            discount: 0.0,
        }
    }
}

/// Deterministic random pool with `n_pairs` pairs and `n_ndds` NDDs.
pub fn generate_instance(n_pairs: usize, n_ndds: usize, seed: u64) -> CompatibilityGraph {
    generate_with(&GeneratorConfig::default(), n_pairs, n_ndds, seed)
}

pub fn generate_with(
    cfg: &GeneratorConfig,
    n_pairs: usize,
    n_ndds: usize,
    seed: u64,
) -> CompatibilityGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bt = WeightedIndex::new(cfg.blood_type_freq).expect("valid blood-type table");
    let cpra =
        WeightedIndex::new(cfg.cpra_levels.iter().map(|&(_, p)| p)).expect("valid cpra table");

    let pairs: Vec<PairVertex> = (0..n_pairs)
        .map(|id| PairVertex {
            id,
            blood_type_patient: BLOOD_TYPES[bt.sample(&mut rng)],
            blood_type_donor: BLOOD_TYPES[bt.sample(&mut rng)],
            cpra: cfg.cpra_levels[cpra.sample(&mut rng)].0,
        })
        .collect();
    let ndds: Vec<NddVertex> = (0..n_ndds)
        .map(|id| NddVertex {
            id,
            blood_type_donor: BLOOD_TYPES[bt.sample(&mut rng)],
        })
        .collect();

    let mut edges = Vec::new();
    let push = |edges: &mut Vec<Edge>, src: VertexRef, dst: usize| {
        edges.push(Edge {
            id: edges.len(),
            src,
            dst,
            weight: cfg.weight,
            discount: cfg.discount.min(cfg.weight),
        })
    };
    let donors = ndds
        .iter()
        .map(|n| (VertexRef::Ndd(n.id), n.blood_type_donor))
        .chain(
            pairs
                .iter()
                .map(|p| (VertexRef::Pair(p.id), p.blood_type_donor)),
        );
    for (src, donor_bt) in donors {
        for patient in &pairs {
            if src == VertexRef::Pair(patient.id) {
                continue;
            }
            // One crossmatch draw per ordered pair, whether or not ABO passes,
            // so the stream layout does not depend on blood types.
            let crossmatch_ok = rng.gen::<f64>() >= patient.cpra;
            if donor_bt.can_donate_to(patient.blood_type_patient) && crossmatch_ok {
                push(&mut edges, src, patient.id);
            }
        }
    }
    CompatibilityGraph::new(pairs, ndds, edges).expect("generator output is valid")
}
