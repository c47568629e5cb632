//! Bounded-variable two-phase primal simplex on the sparse standard form
//! `A x + s = rhs`, one slack per row. Phase 1 runs with piecewise costs on
//! out-of-bounds basic variables and no artificial columns; the phases share
//! one loop that switches cost vectors on the fly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::lp::{LpModel, Sense};

use super::lu::{Lu, Replacement, Scratch};
use super::{LpSolution, SimplexLimits, SolveStatus};

/// Reduced costs below this magnitude do not qualify a column for entry;
/// pivot elements below it trigger a refactor or a column ban.
const PIVOT_TOL: f64 = 1e-9;
/// Bound tolerance for structural variables.
const BOUND_TOL: f64 = 1e-9;
/// Row (slack bound) tolerance.
const ROW_TOL: f64 = 1e-7;
/// Step lengths at or below this count as degenerate.
const DEGEN_EPS: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to lowest-index pricing.
const BLAND_TRIGGER: usize = 50;
/// Product-form updates kept before a fresh factorization.
const REFACTOR_EVERY: usize = 100;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic(u32),
    AtLo,
    AtHi,
    /// Nonbasic free column parked at zero.
    Free,
    /// Equal bounds; never enters.
    Fixed,
}

struct Eta {
    pos: u32,
    pivot_val: f64,
    entries: Vec<(u32, f64)>,
}

#[derive(Default)]
struct PhaseStats {
    t_factor_inner: std::time::Duration,
    t_recompute: std::time::Duration,
    t_y: std::time::Duration,
    t_price: std::time::Duration,
    t_ftran: std::time::Duration,
    t_ratio: std::time::Duration,
    t_apply: std::time::Duration,
    t_refactor: std::time::Duration,
    refactors: usize,
    w_nnz: u64,
    y_nnz: u64,
}

enum RatioOutcome {
    Flip(f64),
    Pivot { t: f64, pos: usize, to_upper: bool },
    Unbounded,
    BadPivot,
}

pub(super) struct Solver {
    n_struct: usize,
    n_rows: usize,
    n_total: usize,
    // Structural columns, CSC.
    col_ptr: Vec<u32>,
    col_rows: Vec<u32>,
    col_vals: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    // -1 below bound, +1 above, 0 in range; per basis position.
    viol: Vec<i8>,
    viol_count: usize,
    lu: Lu,
    etas: Vec<Eta>,
    eta_mass: usize,
    pivots_since_refactor: usize,
    ws_rows: Scratch,
    ws_steps: Scratch,
    ws_y: Scratch,
    heap: BinaryHeap<Reverse<u32>>,
    queued: Vec<bool>,
    banned: Vec<bool>,
    any_banned: bool,
    ban_retries: usize,
    iterations: usize,
    stats: PhaseStats,
    degen_run: usize,
    bland: bool,
    ftran_dense_run: bool,
    btran_dense_run: bool,
}

impl Solver {
    pub(super) fn new(model: &LpModel, objective: Option<&[f64]>) -> Self {
        let n_struct = model.num_vars;
        let n_rows = model.rows.len();
        let n_total = n_struct + n_rows;

        let mut col_ptr = vec![0u32; n_struct + 1];
        for row in &model.rows {
            for &(c, _) in &row.coeffs {
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..n_struct {
            col_ptr[c + 1] += col_ptr[c];
        }
        let nnz = col_ptr[n_struct] as usize;
        let mut col_rows = vec![0u32; nnz];
        let mut col_vals = vec![0.0; nnz];
        let mut cursor = col_ptr.clone();
        for (r, row) in model.rows.iter().enumerate() {
            for &(c, a) in &row.coeffs {
                let slot = cursor[c] as usize;
                col_rows[slot] = r as u32;
                col_vals[slot] = a;
                cursor[c] += 1;
            }
        }

        let mut cost = vec![0.0; n_total];
        match objective {
            Some(c) => {
                assert_eq!(c.len(), n_struct, "objective override length mismatch");
                cost[..n_struct].copy_from_slice(c);
            }
            None => {
                for &(c, a) in &model.objective {
                    cost[c] = a;
                }
            }
        }

        let mut lo = vec![0.0; n_total];
        let mut hi = vec![0.0; n_total];
        for (j, &(l, h)) in model.bounds.iter().enumerate() {
            lo[j] = l;
            hi[j] = h;
        }
        for (r, row) in model.rows.iter().enumerate() {
            let j = n_struct + r;
            (lo[j], hi[j]) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
        }

        let mut state = vec![VarState::AtLo; n_total];
        let mut x = vec![0.0; n_total];
        for j in 0..n_struct {
            let prefer_hi = model.start_at_upper.get(j).copied().unwrap_or(false);
            state[j] = if lo[j] == hi[j] {
                VarState::Fixed
            } else if prefer_hi && hi[j].is_finite() {
                VarState::AtHi
            } else if lo[j].is_finite() && (cost[j] >= 0.0 || hi[j].is_infinite()) {
                VarState::AtLo
            } else if hi[j].is_finite() {
                VarState::AtHi
            } else if lo[j].is_finite() {
                VarState::AtLo
            } else {
                VarState::Free
            };
            x[j] = match state[j] {
                VarState::AtLo | VarState::Fixed => lo[j],
                VarState::AtHi => hi[j],
                _ => 0.0,
            };
        }
        let basis: Vec<usize> = (0..n_rows).map(|r| n_struct + r).collect();
        for (pos, &col) in basis.iter().enumerate() {
            state[col] = VarState::Basic(pos as u32);
        }

        Solver {
            n_struct,
            n_rows,
            n_total,
            col_ptr,
            col_rows,
            col_vals,
            cost,
            lo,
            hi,
            rhs: model.rows.iter().map(|r| r.rhs).collect(),
            state,
            basis,
            x,
            viol: vec![0; n_rows],
            viol_count: 0,
            lu: Lu::identity(n_rows),
            etas: Vec::new(),
            eta_mass: 0,
            pivots_since_refactor: 0,
            ws_rows: Scratch::new(n_rows),
            ws_steps: Scratch::new(n_rows),
            ws_y: Scratch::new(n_rows),
            heap: BinaryHeap::new(),
            queued: vec![false; n_rows],
            banned: vec![false; n_total],
            any_banned: false,
            ban_retries: 0,
            iterations: 0,
            stats: PhaseStats::default(),
            degen_run: 0,
            bland: false,
            ftran_dense_run: false,
            btran_dense_run: false,
        }
    }

    #[inline]
    fn col_tol(&self, col: usize) -> f64 {
        if col < self.n_struct {
            BOUND_TOL
        } else {
            ROW_TOL
        }
    }

    fn refactorize(&mut self) {
        self.basis.sort_unstable_by_key(|&col| {
            if col >= self.n_struct {
                (0, col)
            } else {
                (1, col)
            }
        });
        for (pos, &col) in self.basis.iter().enumerate() {
            self.state[col] = VarState::Basic(pos as u32);
        }
        let n_struct = self.n_struct;
        let col_ptr = &self.col_ptr;
        let col_rows = &self.col_rows;
        let col_vals = &self.col_vals;
        let t_f = Instant::now();
        let (lu, replacements) = Lu::factorize(
            &mut self.basis,
            |col, buf| {
                if col < n_struct {
                    for e in col_ptr[col] as usize..col_ptr[col + 1] as usize {
                        buf.push((col_rows[e], col_vals[e]));
                    }
                } else {
                    buf.push(((col - n_struct) as u32, 1.0));
                }
            },
            n_struct,
            &mut self.ws_rows,
        );
        self.stats.t_factor_inner += t_f.elapsed();
        self.lu = lu;
        self.etas.clear();
        self.eta_mass = 0;
        self.pivots_since_refactor = 0;
        for rep in replacements {
            self.apply_replacement(rep);
        }
        let t_r = Instant::now();
        self.recompute_basics();
        self.stats.t_recompute += t_r.elapsed();
    }

    fn apply_replacement(&mut self, rep: Replacement) {
        log::warn!(
            "basis repair: column {} replaced by slack {}",
            rep.old_col,
            rep.new_col
        );
        let j = rep.old_col;
        self.state[j] = if self.lo[j] == self.hi[j] {
            VarState::Fixed
        } else if self.lo[j].is_finite()
            && (!self.hi[j].is_finite() || (self.x[j] - self.lo[j]).abs() <= (self.x[j] - self.hi[j]).abs())
        {
            VarState::AtLo
        } else if self.hi[j].is_finite() {
            VarState::AtHi
        } else {
            VarState::Free
        };
        self.x[j] = match self.state[j] {
            VarState::AtLo | VarState::Fixed => self.lo[j],
            VarState::AtHi => self.hi[j],
            _ => 0.0,
        };
        self.state[rep.new_col] = VarState::Basic(rep.position as u32);
    }

    /// Recompute basic values from scratch and refresh the violation flags.
    fn recompute_basics(&mut self) {
        self.ws_rows.clear();
        self.ws_steps.clear();
        for (r, &b) in self.rhs.iter().enumerate() {
            if b != 0.0 {
                self.ws_rows.set(r as u32, b);
            }
        }
        for j in 0..self.n_struct {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let v = self.x[j];
            for e in self.col_ptr[j] as usize..self.col_ptr[j + 1] as usize {
                self.ws_rows.add(self.col_rows[e], -self.col_vals[e] * v);
            }
        }
        // Nonbasic slacks always sit at zero; nothing to subtract for them.
        self.lu
            .ftran(&mut self.ws_rows, &mut self.ws_steps, &mut self.heap, &mut self.queued, true);
        for eta in &self.etas {
            apply_eta_ftran(&mut self.ws_steps, eta);
        }
        for pos in 0..self.n_rows {
            self.x[self.basis[pos]] = self.ws_steps.vals[pos];
        }
        self.ws_steps.clear();
        self.viol_count = 0;
        for pos in 0..self.n_rows {
            self.viol[pos] = 0;
            self.refresh_violation(pos);
        }
    }

    fn refresh_violation(&mut self, pos: usize) {
        let col = self.basis[pos];
        let v = self.x[col];
        let tol = self.col_tol(col);
        let new = if v < self.lo[col] - tol {
            -1
        } else if v > self.hi[col] + tol {
            1
        } else {
            0
        };
        if new != self.viol[pos] {
            if self.viol[pos] == 0 {
                self.viol_count += 1;
            } else if new == 0 {
                self.viol_count -= 1;
            }
            self.viol[pos] = new;
        }
    }

    /// Dual solve for the active cost vector: violation directions while any
    /// basic is out of bounds, the real objective afterwards.
    fn compute_y(&mut self) {
        self.ws_steps.clear();
        if self.viol_count > 0 {
            for pos in 0..self.n_rows {
                let v = self.viol[pos];
                if v != 0 {
                    self.ws_steps.set(pos as u32, f64::from(v));
                }
            }
        } else {
            for pos in 0..self.n_rows {
                let c = self.cost[self.basis[pos]];
                if c != 0.0 {
                    self.ws_steps.set(pos as u32, c);
                }
            }
        }
        for eta in self.etas.iter().rev() {
            apply_eta_btran(&mut self.ws_steps, eta);
        }
        let expect_dense = self.btran_dense_run;
        self.lu
            .btran(&mut self.ws_steps, &mut self.ws_y, &mut self.heap, &mut self.queued, expect_dense);
        self.btran_dense_run = self.ws_y.list.len() >= self.n_rows / 32;
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let c = if self.viol_count > 0 { 0.0 } else { self.cost[j] };
        if j < self.n_struct {
            let mut dot = 0.0;
            for e in self.col_ptr[j] as usize..self.col_ptr[j + 1] as usize {
                dot += self.col_vals[e] * self.ws_y.vals[self.col_rows[e] as usize];
            }
            c - dot
        } else {
            c - self.ws_y.vals[j - self.n_struct]
        }
    }

    /// `(direction, |d|)` if column `j` qualifies for entry.
    fn entry_candidate(&self, j: usize) -> Option<(f64, f64)> {
        if self.banned[j] {
            return None;
        }
        let d = self.reduced_cost(j);
        match self.state[j] {
            VarState::AtLo if d < -PIVOT_TOL => Some((1.0, -d)),
            VarState::AtHi if d > PIVOT_TOL => Some((-1.0, d)),
            VarState::Free if d.abs() > PIVOT_TOL => Some((-d.signum(), d.abs())),
            _ => None,
        }
    }

    /// Largest-violation pricing over every column; lowest index in Bland
    /// mode. Full passes beat sectioned ones here: the objective column's
    /// reduced cost dwarfs the sea of unit-sized candidates around it, and a
    /// section scheme keeps picking the latter.
    fn price(&mut self) -> Option<(usize, f64, f64)> {
        if self.bland {
            return (0..self.n_total).find_map(|j| {
                self.entry_candidate(j).map(|(dir, score)| (j, dir, score))
            });
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            if let Some((dir, score)) = self.entry_candidate(j) {
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
        }
        best
    }

    /// FTRAN the entering column into `ws_steps`.
    fn ftran_entering(&mut self, j: usize) {
        self.ws_rows.clear();
        self.ws_steps.clear();
        if j < self.n_struct {
            for e in self.col_ptr[j] as usize..self.col_ptr[j + 1] as usize {
                self.ws_rows.set(self.col_rows[e], self.col_vals[e]);
            }
        } else {
            self.ws_rows.set((j - self.n_struct) as u32, 1.0);
        }
        let expect_dense = self.ftran_dense_run;
        self.lu
            .ftran(&mut self.ws_rows, &mut self.ws_steps, &mut self.heap, &mut self.queued, expect_dense);
        for eta in &self.etas {
            apply_eta_ftran(&mut self.ws_steps, eta);
        }
        self.ftran_dense_run = self.ws_steps.list.len() >= self.n_rows / 32;
    }

    /// Bounded ratio test over the FTRAN'd column.
    ///
    /// In phase 2 the first bound any basic variable reaches blocks the
    /// step. In phase 1 the test is piecewise-linear: the infeasibility
    /// slope starts at the (negative) reduced cost, every bound crossing
    /// adds back that variable's rate, and the step runs until the slope
    /// turns nonnegative. One long phase-1 step can walk z past hundreds of
    /// violated load rows at once.
    fn ratio_test(&self, j: usize, dir: f64, d_abs: f64) -> RatioOutcome {
        let phase1 = self.viol_count > 0;
        let own_span = self.hi[j] - self.lo[j];
        if phase1 {
            self.ratio_test_phase1(dir, d_abs, own_span)
        } else {
            self.ratio_test_phase2(dir, own_span)
        }
    }

    fn ratio_test_phase2(&self, dir: f64, own_span: f64) -> RatioOutcome {
        let mut t_best = f64::INFINITY;
        let mut pos_best: Option<(usize, bool, f64)> = None;
        for &sp in &self.ws_steps.list {
            let pos = sp as usize;
            let w = self.ws_steps.vals[pos];
            if w.abs() <= 1e-11 {
                continue;
            }
            let col = self.basis[pos];
            let rate = -dir * w;
            let v = self.x[col];
            let (blo, bhi) = (self.lo[col], self.hi[col]);
            let cand: Option<(f64, bool)> = if rate > 0.0 && bhi.is_finite() {
                Some((((bhi - v) / rate).max(0.0), true))
            } else if rate < 0.0 && blo.is_finite() {
                Some((((blo - v) / rate).max(0.0), false))
            } else {
                None
            };
            if let Some((t, to_upper)) = cand {
                let replaces = match pos_best {
                    None => true,
                    Some((bp, _, bw)) => {
                        if t < t_best - 1e-10 {
                            true
                        } else if t < t_best + 1e-10 {
                            if self.bland {
                                self.basis[pos] < self.basis[bp]
                            } else {
                                w.abs() > bw
                            }
                        } else {
                            false
                        }
                    }
                };
                if replaces {
                    t_best = t.min(t_best);
                    pos_best = Some((pos, to_upper, w.abs()));
                }
            }
        }
        match pos_best {
            None => {
                if own_span.is_finite() {
                    RatioOutcome::Flip(own_span)
                } else {
                    RatioOutcome::Unbounded
                }
            }
            Some((pos, to_upper, wabs)) => {
                if own_span <= t_best {
                    return RatioOutcome::Flip(own_span);
                }
                if wabs < PIVOT_TOL {
                    return RatioOutcome::BadPivot;
                }
                RatioOutcome::Pivot { t: t_best, pos, to_upper }
            }
        }
    }

    fn ratio_test_phase1(&self, dir: f64, d_abs: f64, own_span: f64) -> RatioOutcome {
        // (t, pos, to_upper, |w|) break events, including both crossings for
        // variables currently outside their bounds.
        let mut events: Vec<(f64, usize, bool, f64)> = Vec::new();
        for &sp in &self.ws_steps.list {
            let pos = sp as usize;
            let w = self.ws_steps.vals[pos];
            if w.abs() <= 1e-11 {
                continue;
            }
            let col = self.basis[pos];
            let rate = -dir * w;
            let v = self.x[col];
            let (blo, bhi) = (self.lo[col], self.hi[col]);
            if rate > 0.0 {
                if blo.is_finite() && v < blo {
                    events.push(((blo - v) / rate, pos, false, w.abs()));
                }
                if bhi.is_finite() && v <= bhi {
                    events.push((((bhi - v) / rate).max(0.0), pos, true, w.abs()));
                }
            } else {
                if bhi.is_finite() && v > bhi {
                    events.push(((bhi - v) / rate, pos, true, w.abs()));
                }
                if blo.is_finite() && v >= blo {
                    events.push((((blo - v) / rate).max(0.0), pos, false, w.abs()));
                }
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut slope = -d_abs;
        let mut chosen: Option<(f64, usize, bool, f64)> = None;
        for &(t, pos, to_upper, wabs) in &events {
            if own_span < t {
                break;
            }
            slope += wabs;
            if slope >= -PIVOT_TOL {
                chosen = Some((t, pos, to_upper, wabs));
                break;
            }
        }
        match chosen {
            Some((t, pos, to_upper, wabs)) => {
                if wabs < PIVOT_TOL {
                    return RatioOutcome::BadPivot;
                }
                RatioOutcome::Pivot { t, pos, to_upper }
            }
            None => {
                if own_span.is_finite() {
                    RatioOutcome::Flip(own_span)
                } else {
                    // Slope stayed negative past every break: numerics.
                    RatioOutcome::Unbounded
                }
            }
        }
    }

    /// Move the entering variable by `t` and sweep the change through the
    /// basic values, refreshing violation flags as they move.
    fn apply_step(&mut self, j: usize, dir: f64, t: f64) {
        if t == 0.0 {
            return;
        }
        self.x[j] += dir * t;
        let list = std::mem::take(&mut self.ws_steps.list);
        for &sp in &list {
            let pos = sp as usize;
            let w = self.ws_steps.vals[pos];
            if w != 0.0 {
                self.x[self.basis[pos]] -= dir * t * w;
                self.refresh_violation(pos);
            }
        }
        self.ws_steps.list = list;
    }

    fn clear_bans(&mut self) {
        if self.any_banned {
            self.banned.iter_mut().for_each(|b| *b = false);
            self.any_banned = false;
        }
    }

    fn run(&mut self, limits: &SimplexLimits) -> SolveStatus {
        let max_iter = limits
            .max_iterations
            .unwrap_or(50 * (self.n_struct + self.n_rows).max(20));
        let started = Instant::now();
        if self.n_rows == 0 {
            return SolveStatus::Optimal;
        }
        self.recompute_basics();

        loop {
            if self.iterations >= max_iter {
                return SolveStatus::IterationLimit;
            }
            if self.iterations % 128 == 0 {
                if let Some(budget) = limits.time_budget {
                    if started.elapsed() > budget {
                        return SolveStatus::IterationLimit;
                    }
                }
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY
                || self.eta_mass > 8 * self.n_rows.max(256)
            {
                let t = Instant::now();
                self.refactorize();
                self.stats.t_refactor += t.elapsed();
                self.stats.refactors += 1;
            }
            if self.iterations % 4096 == 0 && self.iterations > 0 {
                log::debug!(
                    "simplex iter {}: violated {}, etas {} ({} entries)",
                    self.iterations,
                    self.viol_count,
                    self.etas.len(),
                    self.eta_mass
                );
            }

            let t = Instant::now();
            self.compute_y();
            self.stats.t_y += t.elapsed();
            self.stats.y_nnz += self.ws_y.list.len() as u64;
            let t = Instant::now();
            let priced = self.price();
            self.stats.t_price += t.elapsed();
            let Some((j, dir, d_abs)) = priced else {
                // Nothing prices out. Distrust the conclusion while columns
                // are banned or updates have accumulated.
                if self.any_banned && self.ban_retries < 3 {
                    self.ban_retries += 1;
                    self.clear_bans();
                    self.refactorize();
                    continue;
                }
                if self.viol_count > 0 {
                    return SolveStatus::Infeasible;
                }
                return SolveStatus::Optimal;
            };

            let t = Instant::now();
            self.ftran_entering(j);
            self.stats.t_ftran += t.elapsed();
            self.stats.w_nnz += self.ws_steps.list.len() as u64;
            let t = Instant::now();
            let outcome = self.ratio_test(j, dir, d_abs);
            self.stats.t_ratio += t.elapsed();
            match outcome {
                RatioOutcome::Flip(t) => {
                    self.apply_step(j, dir, t);
                    self.state[j] = match self.state[j] {
                        VarState::AtLo => VarState::AtHi,
                        VarState::AtHi => VarState::AtLo,
                        s => s,
                    };
                    self.x[j] = match self.state[j] {
                        VarState::AtHi => self.hi[j],
                        _ => self.lo[j],
                    };
                    self.iterations += 1;
                    self.clear_bans();
                }
                RatioOutcome::Pivot { t, pos, to_upper } => {
                    let leaving = self.basis[pos];
                    let wp = self.ws_steps.vals[pos];
                    self.apply_step(j, dir, t);
                    self.x[leaving] = if to_upper { self.hi[leaving] } else { self.lo[leaving] };
                    self.state[leaving] = if self.lo[leaving] == self.hi[leaving] {
                        VarState::Fixed
                    } else if to_upper {
                        VarState::AtHi
                    } else {
                        VarState::AtLo
                    };
                    self.state[j] = VarState::Basic(pos as u32);
                    self.basis[pos] = j;
                    self.refresh_violation(pos);
                    let entries: Vec<(u32, f64)> = self
                        .ws_steps
                        .list
                        .iter()
                        .map(|&p| (p, self.ws_steps.vals[p as usize]))
                        .filter(|&(_, v)| v != 0.0)
                        .collect();
                    self.eta_mass += entries.len();
                    self.etas.push(Eta { pos: pos as u32, pivot_val: wp, entries });
                    self.pivots_since_refactor += 1;
                    self.iterations += 1;
                    if t <= DEGEN_EPS {
                        self.degen_run += 1;
                        if self.degen_run >= BLAND_TRIGGER {
                            self.bland = true;
                        }
                    } else {
                        self.degen_run = 0;
                        self.bland = false;
                    }
                    self.clear_bans();
                }
                RatioOutcome::Unbounded => {
                    if self.viol_count > 0 {
                        // An unblocked descent direction cannot exist while
                        // infeasibility is bounded below; call it numerics.
                        log::warn!("phase-1 ray detected, treating as infeasible");
                        return SolveStatus::Infeasible;
                    }
                    return SolveStatus::Unbounded;
                }
                RatioOutcome::BadPivot => {
                    if !self.etas.is_empty() {
                        self.refactorize();
                    } else {
                        self.banned[j] = true;
                        self.any_banned = true;
                        self.iterations += 1;
                    }
                }
            }
            self.ws_steps.clear();
        }
    }

    pub(super) fn solve(mut self, limits: &SimplexLimits) -> LpSolution {
        let status = self.run(limits);
        log::debug!(
            "factor inner {:?} recompute {:?}",
            self.stats.t_factor_inner,
            self.stats.t_recompute,
        );
        log::debug!(
            "simplex done: {} iters, y {:?} price {:?} ftran {:?} ratio {:?} refactor {:?} ({}x), avg w nnz {}, avg y nnz {}",
            self.iterations,
            self.stats.t_y,
            self.stats.t_price,
            self.stats.t_ftran,
            self.stats.t_ratio,
            self.stats.t_refactor,
            self.stats.refactors,
            self.stats.w_nnz / self.iterations.max(1) as u64,
            self.stats.y_nnz / self.iterations.max(1) as u64,
        );
        if self.n_rows > 0 {
            self.refactorize();
        }
        let objective = self
            .cost
            .iter()
            .take(self.n_struct)
            .zip(&self.x)
            .map(|(c, v)| c * v)
            .sum();
        let mut duals = vec![0.0; self.n_rows];
        if self.n_rows > 0 && status == SolveStatus::Optimal {
            self.ws_steps.clear();
            for pos in 0..self.n_rows {
                let c = self.cost[self.basis[pos]];
                if c != 0.0 {
                    self.ws_steps.set(pos as u32, c);
                }
            }
            self.lu
                .btran(&mut self.ws_steps, &mut self.ws_y, &mut self.heap, &mut self.queued, true);
            duals.copy_from_slice(&self.ws_y.vals[..self.n_rows]);
            self.ws_y.clear();
        }
        let mut basis = self.basis.clone();
        basis.sort_unstable();
        LpSolution {
            status,
            values: self.x[..self.n_struct].to_vec(),
            objective,
            basis,
            iterations: self.iterations,
            duals,
        }
    }
}

fn apply_eta_ftran(w: &mut Scratch, eta: &Eta) {
    let xr = w.vals[eta.pos as usize];
    if xr == 0.0 {
        return;
    }
    let t = xr / eta.pivot_val;
    for &(i, v) in &eta.entries {
        if i != eta.pos {
            w.add(i, -v * t);
        }
    }
    w.set(eta.pos, t);
}

fn apply_eta_btran(y: &mut Scratch, eta: &Eta) {
    let mut dot = 0.0;
    for &(i, v) in &eta.entries {
        if i != eta.pos {
            dot += v * y.vals[i as usize];
        }
    }
    let yr = y.vals[eta.pos as usize];
    if yr == 0.0 && dot == 0.0 {
        return;
    }
    y.set(eta.pos, (yr - dot) / eta.pivot_val);
}
