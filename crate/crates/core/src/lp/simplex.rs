//! Bounded primal simplex over `A x - s = 0`, `lo <= (x, s) <= hi`.
//!
//! The basis inverse is kept explicitly (row-major, dense storage) and
//! updated by sparse row operations after each pivot. It is rebuilt from the
//! slack basis every `max(256, rows)` pivots.

use alloc::vec;
use alloc::vec::Vec;

use super::{LinearProgram, MPSolution, Relation, Sense, Status, FEASIBILITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const MIN_REFACTOR_PERIOD: usize = 256;
const NONBASIC: usize = usize::MAX;

pub(crate) fn default_iteration_limit(lp: &LinearProgram) -> usize {
    50 * (lp.num_rows() + lp.num_vars()) + 10_000
}

#[derive(Clone, Debug)]
pub(crate) struct Simplex {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    /// Phase-two costs in minimization form; zero for slacks.
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    binv: Vec<f64>,
    /// Cost currently assigned to each basic position (phase dependent).
    basic_cost: Vec<f64>,
    y: Vec<f64>,
    pub(crate) iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Continue,
}

impl Simplex {
    pub(crate) fn new(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, c) in &row.coeffs {
                if c != 0.0 {
                    col_row[fill[j]] = i;
                    col_val[fill[j]] = c;
                    fill[j] += 1;
                }
            }
        }
        // zero coefficients leave gaps; compact them away
        let (col_start, col_row, col_val) = compact(n, &col_start, &fill, col_row, col_val);

        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| flip * c).collect();
        cost.resize(n + m, 0.0);
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        for row in &lp.rows {
            let (l, h) = match row.relation {
                Relation::Le => (f64::NEG_INFINITY, row.rhs),
                Relation::Ge => (row.rhs, f64::INFINITY),
                Relation::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            hi.push(h);
        }
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            x[j] = nonbasic_start(lo[j], hi[j]);
        }
        let mut s = Simplex {
            m,
            n,
            col_start,
            col_row,
            col_val,
            cost,
            lo,
            hi,
            x,
            basis: (n..n + m).collect(),
            pos: (0..n + m).map(|j| if j >= n { j - n } else { NONBASIC }).collect(),
            binv: Vec::new(),
            basic_cost: vec![0.0; m],
            y: vec![0.0; m],
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        };
        s.reset_inverse();
        s.recompute_basics();
        s
    }

    fn reset_inverse(&mut self) {
        let m = self.m;
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
    }

    fn is_basic(&self, j: usize) -> bool {
        self.pos[j] != NONBASIC
    }

    /// `x_B = -B^{-1} (N x_N)`.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut r = vec![0.0; m];
        for j in 0..self.n {
            if !self.is_basic(j) && self.x[j] != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    r[self.col_row[k]] += self.col_val[k] * self.x[j];
                }
            }
        }
        for i in 0..m {
            let j = self.n + i;
            if !self.is_basic(j) {
                r[i] -= self.x[j];
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(a, b)| a * b).sum();
            self.x[self.basis[p]] = -v;
        }
    }

    fn recompute_duals(&mut self) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..m {
            let c = self.basic_cost[p];
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yk, b) in self.y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
    }

    /// `alpha = B^{-1} a_j`.
    fn ftran(&self, j: usize, out: &mut [f64]) {
        let m = self.m;
        if j >= self.n {
            let i = j - self.n;
            for p in 0..m {
                out[p] = -self.binv[p * m + i];
            }
            return;
        }
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let mut v = 0.0;
            for k in s..e {
                v += row[self.col_row[k]] * self.col_val[k];
            }
            out[p] = v;
        }
    }

    fn column_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j >= self.n {
            -v[j - self.n]
        } else {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| v[self.col_row[k]] * self.col_val[k])
                .sum()
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        if self.x[j] < self.lo[j] - FEASIBILITY_TOL {
            -1.0
        } else if self.x[j] > self.hi[j] + FEASIBILITY_TOL {
            1.0
        } else {
            0.0
        }
    }

    /// Sets phase costs on basic positions and keeps `y` in sync. Returns
    /// true when the basis is primal infeasible (phase one).
    fn sync_costs(&mut self) -> bool {
        let m = self.m;
        let phase_one = (0..m).any(|p| self.infeasibility(self.basis[p]) != 0.0);
        for p in 0..m {
            let b = self.basis[p];
            let want = if phase_one {
                self.infeasibility(b)
            } else {
                self.cost[b]
            };
            let delta = want - self.basic_cost[p];
            if delta != 0.0 {
                self.basic_cost[p] = want;
                let row = &self.binv[p * m..(p + 1) * m];
                for (yk, b) in self.y.iter_mut().zip(row) {
                    *yk += delta * b;
                }
            }
        }
        phase_one
    }

    fn reduced_cost(&self, j: usize, phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[j] };
        c - self.column_dot(j, &self.y)
    }

    /// Direction in which moving `j` improves the objective, if any.
    fn improving_direction(&self, j: usize, d: f64) -> Option<f64> {
        if self.lo[j] == self.hi[j] {
            return None;
        }
        let at_lo = self.x[j] <= self.lo[j];
        let at_hi = self.x[j] >= self.hi[j];
        if d < -OPTIMALITY_TOL && !at_hi {
            Some(1.0)
        } else if d > OPTIMALITY_TOL && !at_lo {
            Some(-1.0)
        } else {
            None
        }
    }

    /// Entering variable, its direction and its reduced cost.
    fn choose_entering(&self, phase_one: bool) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            if self.is_basic(j) {
                continue;
            }
            let d = self.reduced_cost(j, phase_one);
            if let Some(dir) = self.improving_direction(j, d) {
                if self.bland {
                    return Some((j, dir, d));
                }
                if best.map(|(_, _, b)| d.abs() > b.abs()).unwrap_or(true) {
                    best = Some((j, dir, d));
                }
            }
        }
        best
    }

    fn step(&mut self, alpha: &mut [f64]) -> Step {
        let phase_one = self.sync_costs();
        let Some((q, dir, d_q)) = self.choose_entering(phase_one) else {
            return if phase_one { Step::Infeasible } else { Step::Optimal };
        };
        self.ftran(q, alpha);

        // Harris two-pass ratio test; basic x_b moves by rate * t.
        let m = self.m;
        let mut relaxed_max = f64::INFINITY;
        let bound_of = |s: &Simplex, b: usize, rate: f64| -> Option<f64> {
            let (x, lo, hi) = (s.x[b], s.lo[b], s.hi[b]);
            if rate < 0.0 {
                if x > hi + FEASIBILITY_TOL {
                    Some(hi)
                } else if x < lo - FEASIBILITY_TOL {
                    None
                } else if lo.is_finite() {
                    Some(lo)
                } else {
                    None
                }
            } else if x < lo - FEASIBILITY_TOL {
                Some(lo)
            } else if x > hi + FEASIBILITY_TOL {
                None
            } else if hi.is_finite() {
                Some(hi)
            } else {
                None
            }
        };
        for p in 0..m {
            if alpha[p].abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * alpha[p];
            let b = self.basis[p];
            if let Some(target) = bound_of(self, b, rate) {
                let t = ((target - self.x[b]) / rate).max(0.0) + FEASIBILITY_TOL / rate.abs();
                relaxed_max = relaxed_max.min(t);
            }
        }
        let flip = self.hi[q] - self.lo[q];
        let mut leave: Option<(usize, f64, f64)> = None;
        if relaxed_max.is_finite() {
            for p in 0..m {
                if alpha[p].abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * alpha[p];
                let b = self.basis[p];
                if let Some(target) = bound_of(self, b, rate) {
                    let t = ((target - self.x[b]) / rate).max(0.0);
                    if t <= relaxed_max {
                        let better = match leave {
                            None => true,
                            Some((bp, _, _)) => {
                                let (a, c) = (alpha[p].abs(), alpha[bp].abs());
                                if self.bland {
                                    self.basis[p] < self.basis[bp]
                                } else {
                                    a > c
                                }
                            }
                        };
                        if better {
                            leave = Some((p, t, target));
                        }
                    }
                }
            }
        }

        let use_flip = flip.is_finite() && leave.map(|(_, t, _)| flip <= t).unwrap_or(true);
        if use_flip {
            let t = flip;
            self.move_along(q, dir, t, alpha);
            self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            self.note_step(t);
            return Step::Continue;
        }
        let Some((r, t, target)) = leave else {
            return if phase_one {
                // cannot happen for a bounded phase-one objective; treat as
                // numerical trouble and rebuild
                self.refactor();
                Step::Continue
            } else {
                Step::Unbounded
            };
        };
        self.move_along(q, dir, t, alpha);
        let leaving = self.basis[r];
        self.x[leaving] = target;
        let c_q = if phase_one { 0.0 } else { self.cost[q] };
        self.pivot(r, q, alpha, d_q, c_q);
        self.note_step(t);
        Step::Continue
    }

    fn move_along(&mut self, q: usize, dir: f64, t: f64, alpha: &[f64]) {
        if t == 0.0 {
            return;
        }
        self.x[q] += dir * t;
        for p in 0..self.m {
            if alpha[p] != 0.0 {
                let b = self.basis[p];
                self.x[b] -= dir * alpha[p] * t;
            }
        }
    }

    fn note_step(&mut self, t: f64) {
        self.iterations += 1;
        if t <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > 10 * (self.m + self.n) {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Replaces the basic variable at position `r` with `q`, whose reduced
    /// cost under the active phase costs is `d_q` and whose cost is `c_q`.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], d_q: f64, c_q: f64) {
        let m = self.m;
        let theta = d_q / alpha[r];
        if theta != 0.0 {
            let row = &self.binv[r * m..(r + 1) * m];
            for (yk, b) in self.y.iter_mut().zip(row) {
                *yk += theta * b;
            }
        }
        self.basic_cost[r] = c_q;
        self.raw_pivot(r, q, alpha);
        self.since_refactor += 1;
        if self.since_refactor >= MIN_REFACTOR_PERIOD.max(self.m) {
            self.refactor();
        }
    }

    /// Rebuilds `B^{-1}` from the slack basis by pivoting the structural
    /// basic columns back in; columns that turn out dependent are dropped
    /// to a bound.
    pub(crate) fn refactor(&mut self) {
        let m = self.m;
        let n = self.n;
        let target: Vec<usize> = self.basis.clone();
        let in_target: Vec<bool> = {
            let mut v = vec![false; n + m];
            for &j in &target {
                v[j] = true;
            }
            v
        };
        self.reset_inverse();
        for j in 0..n + m {
            self.pos[j] = NONBASIC;
        }
        for i in 0..m {
            self.basis[i] = n + i;
            self.pos[n + i] = i;
        }
        let mut alpha = vec![0.0; m];
        let mut structurals: Vec<usize> = target.iter().copied().filter(|&j| j < n).collect();
        // sparse columns first keeps the rebuilt inverse sparse
        structurals.sort_unstable_by_key(|&j| (self.col_start[j + 1] - self.col_start[j], j));
        for q in structurals {
            self.ftran(q, &mut alpha);
            let mut best: Option<(usize, f64)> = None;
            for p in 0..m {
                let b = self.basis[p];
                if b >= n && !in_target[b] && alpha[p].abs() > PIVOT_TOL {
                    if best.map(|(_, a)| alpha[p].abs() > a).unwrap_or(true) {
                        best = Some((p, alpha[p].abs()));
                    }
                }
            }
            match best {
                Some((r, _)) => {
                    self.raw_pivot(r, q, &alpha);
                }
                None => {
                    self.x[q] = nonbasic_start_near(self.lo[q], self.hi[q], self.x[q]);
                }
            }
        }
        // slacks that stayed basic without being in the target leave x as is
        for j in 0..n + m {
            if !self.is_basic(j) && j >= n {
                // nonbasic slack must sit at a bound
                self.x[j] = nonbasic_start_near(self.lo[j], self.hi[j], self.x[j]);
            }
        }
        self.since_refactor = 0;
        self.refresh();
    }

    /// Recomputes basic values and duals from the current inverse.
    fn refresh(&mut self) {
        self.recompute_basics();
        self.basic_cost.iter_mut().for_each(|c| *c = 0.0);
        self.y.iter_mut().for_each(|v| *v = 0.0);
        self.sync_costs();
    }

    fn raw_pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let leaving = self.basis[r];
        let piv = alpha[r];
        let mut nz = Vec::new();
        {
            let row = &mut self.binv[r * m..(r + 1) * m];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    nz.push(k);
                }
            }
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for p in 0..m {
            if p == r || alpha[p] == 0.0 {
                continue;
            }
            let f = alpha[p];
            let row = if p < r {
                &mut before[p * m..(p + 1) * m]
            } else {
                let o = (p - r - 1) * m;
                &mut after[o..o + m]
            };
            for &k in &nz {
                let v = row[k] - f * pivot_row[k];
                row[k] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
        }
        self.basis[r] = q;
        self.pos[q] = r;
        self.pos[leaving] = NONBASIC;
    }

    pub(crate) fn solve(&mut self, limit: usize) -> Status {
        let mut alpha = vec![0.0; self.m];
        let start = self.iterations;
        // bounds may have changed since the last call
        self.refresh();
        loop {
            if self.iterations - start >= limit {
                return Status::IterationLimit;
            }
            match self.step(&mut alpha) {
                Step::Continue => {}
                Step::Optimal => {
                    // verify on a fresh factorization before declaring success
                    if self.since_refactor > 0 {
                        self.refactor();
                        if self.needs_more_work() {
                            continue;
                        }
                    }
                    self.pivot_in_free_variables(&mut alpha);
                    return Status::Optimal;
                }
                Step::Infeasible => {
                    if self.since_refactor > 0 {
                        self.refactor();
                        if self.needs_more_work() {
                            continue;
                        }
                    }
                    return Status::Infeasible;
                }
                Step::Unbounded => return Status::Unbounded,
            }
        }
    }

    fn needs_more_work(&mut self) -> bool {
        let phase_one = self.sync_costs();
        self.choose_entering(phase_one).is_some()
    }

    /// Free structural variables left nonbasic at optimality have zero
    /// reduced cost; pivot them into the basis with degenerate steps so a
    /// vertex solution is reported with them basic.
    fn pivot_in_free_variables(&mut self, alpha: &mut [f64]) {
        let n = self.n;
        let mut pivoted = false;
        for q in 0..n {
            if self.is_basic(q) || self.lo[q].is_finite() || self.hi[q].is_finite() {
                continue;
            }
            self.ftran(q, alpha);
            let mut best: Option<(usize, f64)> = None;
            for p in 0..self.m {
                let b = self.basis[p];
                let bounded = self.lo[b].is_finite() || self.hi[b].is_finite();
                let at_bound = (self.x[b] - self.lo[b]).abs() <= FEASIBILITY_TOL
                    || (self.x[b] - self.hi[b]).abs() <= FEASIBILITY_TOL;
                if bounded && at_bound && alpha[p].abs() > 1e-7 {
                    if best.map(|(_, a)| alpha[p].abs() > a).unwrap_or(true) {
                        best = Some((p, alpha[p].abs()));
                    }
                }
            }
            if let Some((r, _)) = best {
                let leaving = self.basis[r];
                let target = if (self.x[leaving] - self.lo[leaving]).abs() <= FEASIBILITY_TOL {
                    self.lo[leaving]
                } else {
                    self.hi[leaving]
                };
                // degenerate step: the leaving variable is already at its
                // bound, so only the labels change
                self.x[leaving] = target;
                let d_q = self.reduced_cost(q, false);
                let alpha_copy: Vec<f64> = alpha.to_vec();
                self.pivot(r, q, &alpha_copy, d_q, self.cost[q]);
                pivoted = true;
            }
        }
        if pivoted {
            self.refactor();
        }
    }

    /// Changes the bounds of a structural variable, keeping nonbasic
    /// variables on a bound so the next `solve` can warm start.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if !self.is_basic(j) {
            self.x[j] = nonbasic_start_near(lo, hi, self.x[j]);
        }
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Phase-two objective in minimization form.
    pub(crate) fn min_objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub(crate) fn solution(&mut self, lp: &LinearProgram, status: Status) -> MPSolution {
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let values = self.values().to_vec();
        let objective = lp.evaluate(&values);
        let (duals, reduced_costs) = if status == Status::Optimal {
            for p in 0..self.m {
                self.basic_cost[p] = self.cost[self.basis[p]];
            }
            self.recompute_duals();
            let duals = self.y.iter().map(|v| flip * v).collect();
            let rc = (0..self.n)
                .map(|j| flip * (self.cost[j] - self.column_dot(j, &self.y)))
                .collect();
            (duals, rc)
        } else {
            (Vec::new(), Vec::new())
        };
        MPSolution {
            status,
            objective,
            values,
            duals,
            reduced_costs,
            iterations: self.iterations,
            nodes: 0,
            bound: objective,
        }
    }
}

fn nonbasic_start(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

fn nonbasic_start_near(lo: f64, hi: f64, x: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if (x - lo).abs() <= (x - hi).abs() {
                lo
            } else {
                hi
            }
        }
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => x,
    }
}

fn compact(
    n: usize,
    start: &[usize],
    fill: &[usize],
    rows: Vec<usize>,
    vals: Vec<f64>,
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut new_start = Vec::with_capacity(n + 1);
    let mut new_rows = Vec::with_capacity(rows.len());
    let mut new_vals = Vec::with_capacity(vals.len());
    new_start.push(0);
    for j in 0..n {
        for k in start[j]..fill[j] {
            new_rows.push(rows[k]);
            new_vals.push(vals[k]);
        }
        new_start.push(new_rows.len());
    }
    (new_start, new_rows, new_vals)
}
