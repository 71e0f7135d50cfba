use super::simplex::{LpStatus, Tableau};
use super::{
    lp_from_tableau, LpResult, MilpError, MilpModel, MipBackend, Sense, SolveResult, SolveStatus,
    VarKind, INT_TOL,
};

/// Nodes whose LP bound does not beat the incumbent by this much are pruned.
const PRUNE_TOL: f64 = 1e-7;

/// Depth-first LP-based branch and bound.
///
/// Branches on the fractional binary whose value is closest to 0.5 (ties go
/// to the earliest declared variable), exploring the up-branch first.
/// Children are re-optimized from their parent's basis with the dual simplex.
#[derive(Debug, Clone, Default)]
pub struct BranchAndBound {
    pub max_nodes: Option<usize>,
}

impl BranchAndBound {
    fn pick_branch(t: &Tableau, binaries: &[usize]) -> Option<usize> {
        let x = t.values();
        let mut best: Option<(usize, f64)> = None;
        for &j in binaries {
            let frac = x[j] - x[j].floor();
            if frac.min(1.0 - frac) <= INT_TOL {
                continue;
            }
            let dist = (x[j] - 0.5).abs();
            if best.map_or(true, |(_, d)| dist < d - 1e-12) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }
}

impl MipBackend for BranchAndBound {
    fn solve_mip(&self, model: &MilpModel) -> Result<SolveResult, MilpError> {
        let binaries: Vec<usize> = model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
            .collect();
        let mut root = Tableau::from_model(model);
        match root.solve()? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, 1))
            }
            LpStatus::Unbounded => {
                return Ok(SolveResult::without_solution(SolveStatus::Unbounded, 1))
            }
        }
        let sign = match model.sense() {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let cutoff = model
            .cutoff()
            .map(|c| sign * (c - model.objective().constant));
        let mut stack = vec![(root, false)];
        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let mut nodes = 0usize;
        while let Some((mut t, needs_solve)) = stack.pop() {
            nodes += 1;
            if let Some(limit) = self.max_nodes {
                if nodes > limit {
                    return Err(MilpError::NodeLimit(limit));
                }
            }
            if needs_solve {
                match t.reoptimize()? {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => continue,
                    // A bounded parent cannot have an unbounded child.
                    LpStatus::Unbounded => continue,
                }
            }
            let bound = t.internal_objective();
            if let Some(inc) = incumbent.as_ref().map(|i| i.0).or(cutoff) {
                let reachable = match model.objective_granularity() {
                    Some(step) => (bound / step + 1e-6).floor() * step,
                    None => bound,
                };
                if reachable <= inc + PRUNE_TOL {
                    continue;
                }
            }
            match Self::pick_branch(&t, &binaries) {
                None => incumbent = Some((bound, t.values().to_vec())),
                Some(j) => {
                    let mut down = t.clone();
                    down.set_bounds(j, 0.0, 0.0);
                    t.set_bounds(j, 1.0, 1.0);
                    stack.push((down, true));
                    stack.push((t, true));
                }
            }
        }
        let Some((_, mut values)) = incumbent else {
            let status = if cutoff.is_some() {
                SolveStatus::Cutoff
            } else {
                SolveStatus::Infeasible
            };
            return Ok(SolveResult::without_solution(status, nodes));
        };
        for &j in &binaries {
            values[j] = values[j].round();
        }
        for (x, v) in values.iter_mut().zip(model.variables()) {
            *x = x.clamp(v.lower, v.upper);
        }
        Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective: model.objective().evaluate(&values),
            values,
            integral: true,
            nodes,
        })
    }

    fn solve_lp(&self, model: &MilpModel) -> Result<LpResult, MilpError> {
        let mut t = Tableau::from_model(model);
        let status = t.solve()?;
        Ok(lp_from_tableau(model, status, &t))
    }
}
