use std::collections::{BTreeMap, HashMap};

use crate::instance::{enumerate_cycles, CompatibilityGraph, Cycle, VertexRef};

use super::Matching;

struct Chain {
    ndd: usize,
    edges: Vec<usize>,
    mask: u64,
    weight: f64,
}

fn vertex_mask(vs: impl IntoIterator<Item = usize>) -> u64 {
    vs.into_iter().fold(0, |m, v| m | 1 << v)
}

fn enumerate_chains(g: &CompatibilityGraph, chain_cap: usize) -> Vec<Chain> {
    fn extend(
        g: &CompatibilityGraph,
        n: usize,
        at: VertexRef,
        path: &mut Vec<usize>,
        mask: u64,
        weight: f64,
        cap: usize,
        out: &mut Vec<Chain>,
    ) {
        if path.len() == cap {
            return;
        }
        for &e in g.out_edges_of(at) {
            let edge = g.edge(e);
            if mask >> edge.dst & 1 == 1 {
                continue;
            }
            path.push(e);
            let m = mask | 1 << edge.dst;
            let w = weight + edge.weight;
            out.push(Chain {
                ndd: n,
                edges: path.clone(),
                mask: m,
                weight: w,
            });
            extend(g, n, VertexRef::Pair(edge.dst), path, m, w, cap, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    for n in 0..g.num_ndds() {
        extend(
            g,
            n,
            VertexRef::Ndd(n),
            &mut Vec::new(),
            0,
            0.0,
            chain_cap,
            &mut out,
        );
    }
    out
}

fn check_size(g: &CompatibilityGraph) {
    assert!(
        g.num_pairs() <= 64,
        "exhaustive search supports at most 64 pairs"
    );
}

/// Maximum-weight matching by exhaustive search: every combination of
/// per-NDD chains, completed by an exact cycle-packing recursion over the
/// remaining vertex set.
pub fn brute_force_clear(g: &CompatibilityGraph, cycle_cap: usize, chain_cap: usize) -> Matching {
    check_size(g);
    let cycles = enumerate_cycles(g, cycle_cap);
    let masks: Vec<u64> = cycles
        .iter()
        .map(|c| vertex_mask(c.vertices.iter().copied()))
        .collect();
    let mut by_min: Vec<Vec<usize>> = vec![Vec::new(); g.num_pairs()];
    for (i, c) in cycles.iter().enumerate() {
        by_min[c.vertices[0]].push(i);
    }
    let chains = enumerate_chains(g, chain_cap);
    let mut chains_of: Vec<Vec<usize>> = vec![Vec::new(); g.num_ndds()];
    for (i, c) in chains.iter().enumerate() {
        chains_of[c.ndd].push(i);
    }

    struct Packer<'a> {
        by_min: &'a [Vec<usize>],
        masks: &'a [u64],
        cycles: &'a [Cycle],
        memo: HashMap<u64, f64>,
    }
    impl Packer<'_> {
        fn best(&mut self, mask: u64) -> f64 {
            if mask == 0 {
                return 0.0;
            }
            if let Some(&v) = self.memo.get(&mask) {
                return v;
            }
            let v = mask.trailing_zeros() as usize;
            let mut best = self.best(mask & !(1 << v));
            for &c in &self.by_min[v] {
                let cm = self.masks[c];
                if cm & !mask == 0 {
                    best = best.max(self.cycles[c].weight + self.best(mask & !cm));
                }
            }
            self.memo.insert(mask, best);
            best
        }

        fn reconstruct(&mut self, mut mask: u64) -> Vec<usize> {
            let mut picked = Vec::new();
            while mask != 0 {
                let target = self.best(mask);
                let v = mask.trailing_zeros() as usize;
                let mut next = mask & !(1 << v);
                if self.best(next) < target {
                    for &c in &self.by_min[v] {
                        let cm = self.masks[c];
                        if cm & !mask == 0
                            && self.cycles[c].weight + self.best(mask & !cm) >= target
                        {
                            picked.push(c);
                            next = mask & !cm;
                            break;
                        }
                    }
                }
                mask = next;
            }
            picked
        }
    }

    let full = if g.num_pairs() == 64 {
        u64::MAX
    } else {
        (1u64 << g.num_pairs()) - 1
    };
    let mut packer = Packer {
        by_min: &by_min,
        masks: &masks,
        cycles: &cycles,
        memo: HashMap::new(),
    };

    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut stack: Vec<usize> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn search(
        n: usize,
        used: u64,
        weight: f64,
        chains: &[Chain],
        chains_of: &[Vec<usize>],
        full: u64,
        packer: &mut Packer,
        stack: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        if n == chains_of.len() {
            let total = weight + packer.best(full & !used);
            if total > best.0 + 1e-12 {
                *best = (total, stack.clone());
            }
            return;
        }
        search(
            n + 1,
            used,
            weight,
            chains,
            chains_of,
            full,
            packer,
            stack,
            best,
        );
        for &c in &chains_of[n] {
            if chains[c].mask & used == 0 {
                stack.push(c);
                search(
                    n + 1,
                    used | chains[c].mask,
                    weight + chains[c].weight,
                    chains,
                    chains_of,
                    full,
                    packer,
                    stack,
                    best,
                );
                stack.pop();
            }
        }
    }
    search(
        0,
        0,
        0.0,
        &chains,
        &chains_of,
        full,
        &mut packer,
        &mut stack,
        &mut best,
    );

    let used = best.1.iter().fold(0, |m, &c| m | chains[c].mask);
    let picked = packer.reconstruct(full & !used);
    let chain_map: BTreeMap<usize, Vec<usize>> = best
        .1
        .iter()
        .map(|&c| (chains[c].ndd, chains[c].edges.clone()))
        .collect();
    Matching::new(
        g,
        picked.into_iter().map(|c| cycles[c].clone()).collect(),
        chain_map,
    )
}

/// Calls `f` once for every feasible matching (including the empty one).
/// Intended for small graphs in tests and oracles.
pub fn for_each_matching(
    g: &CompatibilityGraph,
    cycle_cap: usize,
    chain_cap: usize,
    mut f: impl FnMut(&Matching),
) {
    check_size(g);
    let cycles = enumerate_cycles(g, cycle_cap);
    let chains = enumerate_chains(g, chain_cap);
    // Objects: cycles first, then chains.
    let objs: Vec<(u64, Option<usize>)> = cycles
        .iter()
        .map(|c| (vertex_mask(c.vertices.iter().copied()), None))
        .chain(chains.iter().map(|c| (c.mask, Some(c.ndd))))
        .collect();

    fn rec(
        start: usize,
        used: u64,
        ndd_used: u64,
        picked: &mut Vec<usize>,
        objs: &[(u64, Option<usize>)],
        emit: &mut dyn FnMut(&[usize]),
    ) {
        emit(picked);
        for i in start..objs.len() {
            let (mask, ndd) = objs[i];
            if mask & used != 0 {
                continue;
            }
            if let Some(n) = ndd {
                if ndd_used >> n & 1 == 1 {
                    continue;
                }
            }
            picked.push(i);
            let nu = ndd.map_or(ndd_used, |n| ndd_used | 1 << n);
            rec(i + 1, used | mask, nu, picked, objs, emit);
            picked.pop();
        }
    }
    assert!(g.num_ndds() <= 64);
    let mut emit = |picked: &[usize]| {
        let mut cs = Vec::new();
        let mut ch = BTreeMap::new();
        for &i in picked {
            if i < cycles.len() {
                cs.push(cycles[i].clone());
            } else {
                let c = &chains[i - cycles.len()];
                ch.insert(c.ndd, c.edges.clone());
            }
        }
        f(&Matching::new(g, cs, ch));
    };
    rec(0, 0, 0, &mut Vec::new(), &objs, &mut emit);
}
