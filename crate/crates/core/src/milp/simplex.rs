//! Dense bounded-variable simplex on a full tableau.
//!
//! Every row `i` of the model becomes `a_i·x + s_i = b_i` with a slack whose
//! bounds encode the relation. Rows whose initial slack would be out of
//! bounds get an artificial column; phase one drives those to zero. The
//! tableau keeps `B⁻¹[A | I | art]` and the reduced-cost row, so warm starts
//! after bound changes go through the dual simplex.

use super::model::{MilpModel, Relation, Sense};
use super::MilpError;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_STREAK: usize = 40;
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic with no finite bound, parked at zero.
    Free,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    rows: usize,
    cols: usize,
    n_struct: usize,
    a: Vec<f64>,
    rc: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
    /// Internal objective is always maximized; `sign` maps back.
    sign: f64,
}

impl Tableau {
    pub(crate) fn from_model(model: &MilpModel) -> Tableau {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut x = vec![0.0; n + m];
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut state = Vec::with_capacity(n + m);
        for (j, v) in model.variables().iter().enumerate() {
            lo.push(v.lower);
            up.push(v.upper);
            if v.lower.is_finite() {
                x[j] = v.lower;
                state.push(ColState::Lower);
            } else if v.upper.is_finite() {
                x[j] = v.upper;
                state.push(ColState::Upper);
            } else {
                state.push(ColState::Free);
            }
        }
        // Slack bounds and artificial requirements.
        let mut arts: Vec<(usize, f64, f64)> = Vec::new(); // (row, sign, value)
        let mut slack_basic = vec![true; m];
        for (i, c) in model.constraints().iter().enumerate() {
            let (slo, sup) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(slo);
            up.push(sup);
            let residual = c.rhs - c.activity(&x[..n]);
            if residual >= slo - FEAS_TOL && residual <= sup + FEAS_TOL {
                x[n + i] = residual;
                state.push(ColState::Basic);
            } else {
                let s = residual.clamp(slo, sup);
                x[n + i] = s;
                state.push(if s == slo {
                    ColState::Lower
                } else {
                    ColState::Upper
                });
                let diff = residual - s;
                arts.push((i, diff.signum(), diff.abs()));
                slack_basic[i] = false;
            }
        }
        let cols = n + m + arts.len();
        let mut a = vec![0.0; m * cols];
        for (i, c) in model.constraints().iter().enumerate() {
            let row = &mut a[i * cols..(i + 1) * cols];
            for &(v, coef) in &c.terms {
                row[v.index()] += coef;
            }
            row[n + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (k, &(i, sign, value)) in arts.iter().enumerate() {
            let col = n + m + k;
            let row = &mut a[i * cols..(i + 1) * cols];
            row[col] = sign;
            // Scale so the artificial has a unit basic coefficient.
            for v in row.iter_mut() {
                *v /= sign;
            }
            basis[i] = col;
            lo.push(0.0);
            up.push(f64::INFINITY);
            x.push(value);
            state.push(ColState::Basic);
        }
        debug_assert!(slack_basic
            .iter()
            .zip(&basis)
            .all(|(&sb, &b)| sb == (b < n + m)));

        let sign = match model.sense() {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        };
        let mut cost = vec![0.0; cols];
        for &(v, c) in &model.objective().terms {
            cost[v.index()] += sign * c;
        }
        Tableau {
            rows: m,
            cols,
            n_struct: n,
            a,
            rc: vec![0.0; cols],
            cost,
            lo,
            up,
            x,
            state,
            basis,
            iterations: 0,
            max_iterations: 20_000 + 50 * (m + cols),
            sign,
        }
    }

    fn art_range(&self) -> std::ops::Range<usize> {
        self.n_struct + self.rows..self.cols
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        self.rc.copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (r, &v) in self.rc.iter_mut().zip(row) {
                    *r -= cb * v;
                }
            }
        }
        for &b in &self.basis {
            self.rc[b] = 0.0;
        }
    }

    /// Two-phase primal solve from the initial slack/artificial basis.
    pub(crate) fn solve(&mut self) -> Result<LpStatus, MilpError> {
        if !self.art_range().is_empty() {
            let mut phase1 = vec![0.0; self.cols];
            for j in self.art_range() {
                phase1[j] = -1.0;
            }
            self.compute_reduced_costs(&phase1);
            match self.primal()? {
                LpStatus::Optimal => {}
                // Phase one is bounded above by zero.
                other => return Ok(other),
            }
            let infeas: f64 = self.art_range().map(|j| self.x[j]).sum();
            if infeas > FEAS_TOL {
                return Ok(LpStatus::Infeasible);
            }
            for j in self.art_range() {
                self.up[j] = 0.0;
                if self.state[j] != ColState::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = ColState::Lower;
                }
            }
        }
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        self.primal()
    }

    /// Re-solve after bound changes, starting from the current basis.
    pub(crate) fn reoptimize(&mut self) -> Result<LpStatus, MilpError> {
        self.iterations = 0;
        self.perturb_costs();
        let status = self.dual()?;
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        match status {
            LpStatus::Optimal => self.primal(),
            other => Ok(other),
        }
    }

    /// Pushes every nonbasic reduced cost a little further into the dual
    /// feasible side, by a column-dependent amount, so the dual ratio test
    /// rarely ties.
    fn perturb_costs(&mut self) {
        for j in 0..self.cols {
            let delta =
                PERTURBATION * (1.0 + (j.wrapping_mul(2_654_435_761) % 1024) as f64 / 1024.0);
            match self.state[j] {
                ColState::Lower => self.rc[j] -= delta,
                ColState::Upper => self.rc[j] += delta,
                ColState::Basic | ColState::Free => {}
            }
        }
    }

    /// Changes the bounds of structural column `j`, keeping the tableau
    /// consistent. Nonbasic columns move to the new bound.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        self.lo[j] = lo;
        self.up[j] = up;
        let target = match self.state[j] {
            ColState::Basic => return,
            ColState::Lower if lo.is_finite() => lo,
            ColState::Upper if up.is_finite() => up,
            _ if lo.is_finite() => {
                self.state[j] = ColState::Lower;
                lo
            }
            _ if up.is_finite() => {
                self.state[j] = ColState::Upper;
                up
            }
            _ => {
                self.state[j] = ColState::Free;
                0.0
            }
        };
        let delta = target - self.x[j];
        if delta != 0.0 {
            self.shift_nonbasic(j, delta);
        }
    }

    fn shift_nonbasic(&mut self, j: usize, delta: f64) {
        self.x[j] += delta;
        for i in 0..self.rows {
            let aij = self.a[i * self.cols + j];
            if aij != 0.0 {
                let b = self.basis[i];
                self.x[b] -= aij * delta;
            }
        }
    }

    fn bump(&mut self) -> Result<(), MilpError> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            Err(MilpError::IterationLimit(self.iterations))
        } else {
            Ok(())
        }
    }

    fn primal(&mut self) -> Result<LpStatus, MilpError> {
        let mut streak = 0usize;
        loop {
            self.bump()?;
            let bland = streak > DEGENERATE_STREAK;
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(LpStatus::Optimal);
            };
            let flip = if self.lo[j].is_finite() && self.up[j].is_finite() {
                self.up[j] - self.lo[j]
            } else {
                f64::INFINITY
            };
            let mut best_t = flip;
            let mut best_row: Option<usize> = None;
            let mut best_alpha = 0.0f64;
            for i in 0..self.rows {
                let alpha = self.a[i * self.cols + j] * dir;
                let b = self.basis[i];
                let lim = if alpha > PIVOT_TOL && self.lo[b].is_finite() {
                    ((self.x[b] - self.lo[b]) / alpha).max(0.0)
                } else if alpha < -PIVOT_TOL && self.up[b].is_finite() {
                    ((self.up[b] - self.x[b]) / -alpha).max(0.0)
                } else {
                    continue;
                };
                let better = if lim < best_t - 1e-12 {
                    true
                } else if lim <= best_t + 1e-12 {
                    match best_row {
                        None => false,
                        Some(r) if bland => b < self.basis[r],
                        Some(_) => alpha.abs() > best_alpha.abs(),
                    }
                } else {
                    false
                };
                if better {
                    best_t = lim;
                    best_row = Some(i);
                    best_alpha = alpha;
                }
            }
            if best_t.is_infinite() {
                return Ok(LpStatus::Unbounded);
            }
            if best_t < 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            let delta = dir * best_t;
            match best_row {
                None => {
                    self.shift_nonbasic(j, delta);
                    if dir > 0.0 {
                        self.x[j] = self.up[j];
                        self.state[j] = ColState::Upper;
                    } else {
                        self.x[j] = self.lo[j];
                        self.state[j] = ColState::Lower;
                    }
                }
                Some(r) => {
                    let leaving = self.basis[r];
                    self.shift_nonbasic(j, delta);
                    if best_alpha > 0.0 {
                        self.x[leaving] = self.lo[leaving];
                        self.state[leaving] = ColState::Lower;
                    } else {
                        self.x[leaving] = self.up[leaving];
                        self.state[leaving] = ColState::Upper;
                    }
                    self.pivot(r, j);
                }
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            let d = self.rc[j];
            let dir = match self.state[j] {
                ColState::Basic => continue,
                ColState::Lower if d > OPT_TOL && self.up[j] > self.lo[j] => 1.0,
                ColState::Upper if d < -OPT_TOL && self.up[j] > self.lo[j] => -1.0,
                ColState::Free if d.abs() > OPT_TOL => d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn dual(&mut self) -> Result<LpStatus, MilpError> {
        loop {
            self.bump()?;
            // Leaving row: largest bound violation.
            let mut leave: Option<(usize, bool)> = None;
            let mut worst = FEAS_TOL;
            for i in 0..self.rows {
                let b = self.basis[i];
                let below = self.lo[b] - self.x[b];
                let above = self.x[b] - self.up[b];
                if below > worst {
                    worst = below;
                    leave = Some((i, true));
                } else if above > worst {
                    worst = above;
                    leave = Some((i, false));
                }
            }
            let Some((r, below)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            let mut enter: Option<(usize, f64)> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0f64;
            for j in 0..self.cols {
                let alpha = row[j];
                if alpha.abs() <= PIVOT_TOL || self.up[j] <= self.lo[j] {
                    continue;
                }
                // x_leaving moves by -alpha·dir·t; it must move toward its bound.
                let want = if below { -1.0 } else { 1.0 };
                let dir = match self.state[j] {
                    ColState::Basic => continue,
                    ColState::Lower => 1.0,
                    ColState::Upper => -1.0,
                    ColState::Free => want * alpha.signum(),
                };
                if alpha * dir * want <= 0.0 {
                    continue;
                }
                let ratio = self.rc[j].abs() / alpha.abs();
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && alpha.abs() > best_alpha.abs())
                {
                    best_ratio = ratio;
                    best_alpha = alpha;
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                return Ok(LpStatus::Infeasible);
            };
            let leaving = self.basis[r];
            let target = if below {
                self.lo[leaving]
            } else {
                self.up[leaving]
            };
            let t = ((self.x[leaving] - target) / best_alpha).abs();
            self.shift_nonbasic(j, dir * t);
            self.x[leaving] = target;
            self.state[leaving] = if below {
                ColState::Lower
            } else {
                ColState::Upper
            };
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.a[r * cols + j];
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols]
            .iter()
            .map(|v| v / p)
            .collect();
        let nz: Vec<usize> = (0..cols).filter(|&k| pivot_row[k] != 0.0).collect();
        for i in 0..self.rows {
            let row = &mut self.a[i * cols..(i + 1) * cols];
            if i == r {
                row.copy_from_slice(&pivot_row);
                row[j] = 1.0;
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for &k in &nz {
                    row[k] -= f * pivot_row[k];
                }
                row[j] = 0.0;
            }
        }
        let f = self.rc[j];
        if f != 0.0 {
            for &k in &nz {
                self.rc[k] -= f * pivot_row[k];
            }
            self.rc[j] = 0.0;
        }
        self.state[self.basis[r]] = match self.state[self.basis[r]] {
            ColState::Basic => ColState::Lower,
            s => s,
        };
        self.basis[r] = j;
        self.state[j] = ColState::Basic;
    }

    /// Objective in the model's own sense (excluding its constant).
    pub(crate) fn objective(&self) -> f64 {
        self.sign
            * self.cost[..self.n_struct]
                .iter()
                .zip(&self.x)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }

    /// Internal (maximized) objective.
    pub(crate) fn internal_objective(&self) -> f64 {
        self.sign * self.objective()
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.x[..self.n_struct]
    }

    /// Row duals in the model's sense: the rate of change of the optimal
    /// objective per unit increase of each right-hand side.
    pub(crate) fn duals(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| -self.sign * self.rc[self.n_struct + i])
            .collect()
    }

    /// Reduced costs of the structural columns in the model's sense.
    pub(crate) fn reduced_costs(&self) -> Vec<f64> {
        self.rc[..self.n_struct]
            .iter()
            .map(|d| self.sign * d)
            .collect()
    }
}
