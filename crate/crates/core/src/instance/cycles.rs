use super::CompatibilityGraph;

/// A simple directed cycle through pair vertices, rotated so that the lowest
/// vertex id comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Pair vertices in cycle order.
    pub vertices: Vec<usize>,
    /// Edge ids; `edges[i]` runs from `vertices[i]` to `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub weight: f64,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.contains(&e)
    }
}

/// All simple cycles among pair vertices with at most `cap` edges, each
/// reported once. Output is ordered by vertex sequence.
pub fn enumerate_cycles(g: &CompatibilityGraph, cap: usize) -> Vec<Cycle> {
    assert!(cap >= 2, "cycle cap must be at least 2");
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(cap);
    let mut on_path = vec![false; g.num_pairs()];
    for start in 0..g.num_pairs() {
        path.clear();
        path.push(start);
        on_path[start] = true;
        extend(g, cap, start, &mut path, &mut on_path, &mut out);
        on_path[start] = false;
    }
    out
}

fn extend(
    g: &CompatibilityGraph,
    cap: usize,
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
) {
    let last = *path.last().expect("path is never empty");
    // Successors in ascending id order keep the output deterministic.
    let mut succ: Vec<usize> = g.out_edges(last).iter().map(|&e| g.edge(e).dst).collect();
    succ.sort_unstable();
    for next in succ {
        if next == start && path.len() >= 2 {
            out.push(close(g, path));
        } else if next > start && !on_path[next] && path.len() < cap {
            path.push(next);
            on_path[next] = true;
            extend(g, cap, start, path, on_path, out);
            on_path[next] = false;
            path.pop();
        }
    }
}

fn close(g: &CompatibilityGraph, path: &[usize]) -> Cycle {
    let edges: Vec<usize> = (0..path.len())
        .map(|i| {
            let (u, v) = (path[i], path[(i + 1) % path.len()]);
            g.pair_edge(u, v).expect("cycle edge exists")
        })
        .collect();
    let weight = edges.iter().map(|&e| g.edge(e).weight).sum();
    Cycle {
        vertices: path.to_vec(),
        edges,
        weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BloodType, Edge, PairVertex, VertexRef};

    fn graph(n: usize, arcs: &[(usize, usize)]) -> CompatibilityGraph {
        let pairs = (0..n)
            .map(|id| PairVertex {
                id,
                cpra: 0.0,
                blood_type_patient: BloodType::O,
                blood_type_donor: BloodType::O,
            })
            .collect();
        let edges = arcs
            .iter()
            .enumerate()
            .map(|(id, &(u, v))| Edge {
                id,
                src: VertexRef::Pair(u),
                dst: v,
                weight: 1.0 + id as f64,
                discount: 0.0,
            })
            .collect();
        CompatibilityGraph::new(pairs, vec![], edges).unwrap()
    }

    #[test]
    fn triangle() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let cycles = enumerate_cycles(&g, 3);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].vertices, vec![0, 1, 2]);
        assert_eq!(cycles[0].edges, vec![0, 1, 2]);
        assert_eq!(cycles[0].weight, 6.0);
        assert!(enumerate_cycles(&g, 2).is_empty());
    }

    #[test]
    fn rotation_is_canonical() {
        let g = graph(3, &[(2, 0), (0, 1), (1, 2), (1, 0)]);
        let cycles = enumerate_cycles(&g, 3);
        let seqs: Vec<_> = cycles.iter().map(|c| c.vertices.clone()).collect();
        assert_eq!(seqs, vec![vec![0, 1], vec![0, 1, 2]]);
    }
}
