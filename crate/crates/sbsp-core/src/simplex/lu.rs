//! Sparse LU factorization of the basis and the four triangular solves the
//! simplex needs, all sparsity-driven.
//!
//! Columns are factored in basis-position order with partial pivoting by
//! magnitude, so pivot step k corresponds to basis position k. Elimination
//! updates flow strictly from lower to higher steps, which makes ascending
//! step order topological; the solves exploit that with index heaps seeded
//! from the nonzero pattern.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Entries this small are dropped from the factors.
pub const DROP_TOL: f64 = 1e-12;
/// A pivot candidate below this magnitude marks the column as dependent.
pub const SINGULAR_TOL: f64 = 1e-11;

const NO_STEP: u32 = u32::MAX;

/// Dense-valued workspace with an explicit nonzero list. Values outside the
/// list are guaranteed zero, so reads are plain indexing.
pub struct Scratch {
    pub vals: Vec<f64>,
    marked: Vec<bool>,
    pub list: Vec<u32>,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Scratch {
            vals: vec![0.0; n],
            marked: vec![false; n],
            list: Vec::new(),
        }
    }

    pub fn resize(&mut self, n: usize) {
        self.clear();
        self.vals.resize(n, 0.0);
        self.marked.resize(n, false);
    }

    pub fn clear(&mut self) {
        for &i in &self.list {
            self.vals[i as usize] = 0.0;
            self.marked[i as usize] = false;
        }
        self.list.clear();
    }

    #[inline]
    pub fn add(&mut self, i: u32, v: f64) {
        if !self.marked[i as usize] {
            self.marked[i as usize] = true;
            self.list.push(i);
        }
        self.vals[i as usize] += v;
    }

    #[inline]
    pub fn set(&mut self, i: u32, v: f64) {
        if !self.marked[i as usize] {
            self.marked[i as usize] = true;
            self.list.push(i);
        }
        self.vals[i as usize] = v;
    }
}

/// One column replacement made while repairing a numerically dependent basis.
#[derive(Debug, Clone, Copy)]
pub struct Replacement {
    pub position: usize,
    pub old_col: usize,
    pub new_col: usize,
}

struct FlatMat {
    ptr: Vec<u32>,
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl FlatMat {
    fn with_capacity(cols: usize, nnz: usize) -> Self {
        let mut ptr = Vec::with_capacity(cols + 1);
        ptr.push(0);
        FlatMat {
            ptr,
            idx: Vec::with_capacity(nnz),
            val: Vec::with_capacity(nnz),
        }
    }

    #[inline]
    fn col(&self, j: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let lo = self.ptr[j] as usize;
        let hi = self.ptr[j + 1] as usize;
        self.idx[lo..hi]
            .iter()
            .copied()
            .zip(self.val[lo..hi].iter().copied())
    }

    fn close_col(&mut self) {
        self.ptr.push(self.idx.len() as u32);
    }

    fn transpose(&self, n_rows: usize) -> FlatMat {
        let mut counts = vec![0u32; n_rows + 1];
        for &i in &self.idx {
            counts[i as usize + 1] += 1;
        }
        for k in 0..n_rows {
            counts[k + 1] += counts[k];
        }
        let mut out = FlatMat {
            ptr: counts.clone(),
            idx: vec![0; self.idx.len()],
            val: vec![0.0; self.val.len()],
        };
        let mut cursor = counts;
        for j in 0..self.ptr.len() - 1 {
            for (i, v) in self.col(j) {
                let slot = cursor[i as usize] as usize;
                out.idx[slot] = j as u32;
                out.val[slot] = v;
                cursor[i as usize] += 1;
            }
        }
        out
    }
}

/// LU factors of the basis, with row- and column-major copies of both
/// triangles so every solve direction can run sparsity-driven.
pub struct Lu {
    l_by_step: FlatMat,
    l_by_row: FlatMat,
    u_by_step: FlatMat,
    u_by_row: FlatMat,
    u_diag: Vec<f64>,
    pub pivot_row: Vec<u32>,
    pub step_of_row: Vec<u32>,
}

impl Lu {
    pub fn identity(m: usize) -> Self {
        Lu {
            l_by_step: empty_mat(m),
            l_by_row: empty_mat(m),
            u_by_step: empty_mat(m),
            u_by_row: empty_mat(m),
            u_diag: vec![1.0; m],
            pivot_row: (0..m as u32).collect(),
            step_of_row: (0..m as u32).collect(),
        }
    }

    /// Factor the basis given by `columns` (position order). Each column is
    /// fetched as sparse `(row, value)` pairs. Numerically dependent columns
    /// are replaced in place by the slack of a still-unpivoted row;
    /// replacements are reported so the caller can fix its bookkeeping.
    pub fn factorize(
        basis: &mut [usize],
        col_of: impl Fn(usize, &mut Vec<(u32, f64)>),
        n_struct: usize,
        work: &mut Scratch,
    ) -> (Lu, Vec<Replacement>) {
        let m = basis.len();
        // Static row counts steer pivoting away from dense rows; entries
        // this matrix drops to fill would otherwise smear across them.
        let mut row_count = vec![0u32; m];
        {
            let mut buf = Vec::new();
            for &col in basis.iter() {
                buf.clear();
                col_of(col, &mut buf);
                for &(row, _) in &buf {
                    row_count[row as usize] += 1;
                }
            }
        }
        let mut lu = Lu {
            l_by_step: FlatMat::with_capacity(m, 4 * m),
            l_by_row: empty_mat(0),
            u_by_step: FlatMat::with_capacity(m, 4 * m),
            u_by_row: empty_mat(0),
            u_diag: vec![0.0; m],
            pivot_row: vec![0; m],
            step_of_row: vec![NO_STEP; m],
        };
        let mut replacements = Vec::new();
        work.resize(m);
        let mut pending: BinaryHeap<Reverse<u32>> = BinaryHeap::new();
        let mut queued = vec![false; m];
        let mut col_buf: Vec<(u32, f64)> = Vec::new();

        for k in 0..m {
            col_buf.clear();
            col_of(basis[k], &mut col_buf);
            for &(row, v) in &col_buf {
                work.add(row, v);
                let step = lu.step_of_row[row as usize];
                if step != NO_STEP && !queued[step as usize] {
                    queued[step as usize] = true;
                    pending.push(Reverse(step));
                }
            }
            let u_mark = lu.u_by_step.idx.len();
            while let Some(Reverse(j)) = pending.pop() {
                queued[j as usize] = false;
                let t = work.vals[lu.pivot_row[j as usize] as usize];
                if t.abs() <= DROP_TOL {
                    continue;
                }
                lu.u_by_step.idx.push(j);
                lu.u_by_step.val.push(t);
                let lo = lu.l_by_step.ptr[j as usize] as usize;
                let hi = lu.l_by_step.ptr[j as usize + 1] as usize;
                for e in lo..hi {
                    let row = lu.l_by_step.idx[e];
                    work.add(row, -lu.l_by_step.val[e] * t);
                    let step = lu.step_of_row[row as usize];
                    if step != NO_STEP && !queued[step as usize] {
                        queued[step as usize] = true;
                        pending.push(Reverse(step));
                    }
                }
            }

            // Pivot: sparsest acceptable row. Among still-unpivoted rows
            // whose magnitude clears a tenth of the maximum, prefer the one
            // with the smallest static count (ties by magnitude, then index).
            let mut max_val = 0.0f64;
            for &row in &work.list {
                if lu.step_of_row[row as usize] == NO_STEP {
                    max_val = max_val.max(work.vals[row as usize].abs());
                }
            }
            let mut best_row = NO_STEP;
            let mut best_val = 0.0f64;
            let mut best_count = u32::MAX;
            if max_val > SINGULAR_TOL {
                let threshold = 0.1 * max_val;
                for &row in &work.list {
                    if lu.step_of_row[row as usize] != NO_STEP {
                        continue;
                    }
                    let v = work.vals[row as usize].abs();
                    if v < threshold {
                        continue;
                    }
                    let count = row_count[row as usize];
                    let better = count < best_count
                        || (count == best_count && v > best_val)
                        || (count == best_count && v == best_val && row < best_row);
                    if better {
                        best_row = row;
                        best_val = v;
                        best_count = count;
                    }
                }
            }

            if best_val <= SINGULAR_TOL {
                // Dependent column: swap in the slack of the lowest free row.
                lu.u_by_step.idx.truncate(u_mark);
                lu.u_by_step.val.truncate(u_mark);
                let row = (0..m as u32)
                    .find(|&r| lu.step_of_row[r as usize] == NO_STEP)
                    .expect("some row must remain unpivoted");
                replacements.push(Replacement {
                    position: k,
                    old_col: basis[k],
                    new_col: n_struct + row as usize,
                });
                basis[k] = n_struct + row as usize;
                lu.pivot_row[k] = row;
                lu.step_of_row[row as usize] = k as u32;
                lu.u_diag[k] = 1.0;
            } else {
                let piv = work.vals[best_row as usize];
                lu.pivot_row[k] = best_row;
                lu.step_of_row[best_row as usize] = k as u32;
                lu.u_diag[k] = piv;
                for &row in &work.list {
                    if row == best_row || lu.step_of_row[row as usize] != NO_STEP {
                        continue;
                    }
                    let v = work.vals[row as usize] / piv;
                    if v.abs() > DROP_TOL {
                        lu.l_by_step.idx.push(row);
                        lu.l_by_step.val.push(v);
                    }
                }
            }
            lu.l_by_step.close_col();
            lu.u_by_step.close_col();
            work.clear();
        }

        lu.l_by_row = lu.l_by_step.transpose(m);
        lu.u_by_row = lu.u_by_step.transpose(m);
        (lu, replacements)
    }

    /// Seed sets at least this dense (relative to the dimension) switch the
    /// solves from heap-driven traversal to plain linear scans.
    fn dense_cutoff(&self) -> usize {
        (self.pivot_row.len() / 64).max(8)
    }

    /// Solve `B x = a`. Input: `rows` scratch holding `a` in row space.
    /// Output written into `steps` scratch in position space; `rows` is
    /// consumed (cleared). `expect_dense` routes straight to the linear-scan
    /// variant; callers track how dense their results have been running.
    pub fn ftran(
        &self,
        rows: &mut Scratch,
        steps: &mut Scratch,
        pending: &mut BinaryHeap<Reverse<u32>>,
        queued: &mut [bool],
        expect_dense: bool,
    ) {
        if expect_dense || rows.list.len() >= self.dense_cutoff() {
            return self.ftran_dense(rows, steps);
        }
        // Lower solve in row space, ascending steps.
        pending.clear();
        for &row in &rows.list {
            let step = self.step_of_row[row as usize];
            if step != NO_STEP && !queued[step as usize] && rows.vals[row as usize] != 0.0 {
                queued[step as usize] = true;
                pending.push(Reverse(step));
            }
        }
        steps.clear();
        while let Some(Reverse(j)) = pending.pop() {
            queued[j as usize] = false;
            let t = rows.vals[self.pivot_row[j as usize] as usize];
            if t == 0.0 {
                continue;
            }
            steps.set(j, t);
            for (row, lv) in self.l_by_step.col(j as usize) {
                rows.add(row, -lv * t);
                let step = self.step_of_row[row as usize];
                if step != NO_STEP && !queued[step as usize] {
                    queued[step as usize] = true;
                    pending.push(Reverse(step));
                }
            }
        }
        rows.clear();

        // Upper solve in step space, descending.
        pending.clear();
        for &s in &steps.list {
            if steps.vals[s as usize] != 0.0 {
                queued[s as usize] = true;
                pending.push(Reverse(!s));
            }
        }
        while let Some(Reverse(not_k)) = pending.pop() {
            let k = !not_k;
            queued[k as usize] = false;
            let x = steps.vals[k as usize] / self.u_diag[k as usize];
            steps.vals[k as usize] = x;
            if x == 0.0 {
                continue;
            }
            for (j, u) in self.u_by_step.col(k as usize) {
                steps.add(j, -u * x);
                if !queued[j as usize] {
                    queued[j as usize] = true;
                    pending.push(Reverse(!j));
                }
            }
        }
    }

    /// Linear-scan variant of [`Lu::ftran`] for dense inputs.
    fn ftran_dense(&self, rows: &mut Scratch, steps: &mut Scratch) {
        let m = self.pivot_row.len();
        steps.clear();
        for j in 0..m {
            let t = rows.vals[self.pivot_row[j] as usize];
            if t == 0.0 {
                continue;
            }
            steps.set(j as u32, t);
            for (row, lv) in self.l_by_step.col(j) {
                rows.add(row, -lv * t);
            }
        }
        rows.clear();
        for k in (0..m).rev() {
            let v = steps.vals[k];
            if v == 0.0 {
                continue;
            }
            let x = v / self.u_diag[k];
            steps.set(k as u32, x);
            for (j, u) in self.u_by_step.col(k) {
                steps.add(j, -u * x);
            }
        }
    }

    /// Solve `Bᵀ y = c`. Input: `steps` scratch holding `c` in position
    /// space (consumed). Output written into `rows` scratch in row space.
    pub fn btran(
        &self,
        steps: &mut Scratch,
        rows: &mut Scratch,
        pending: &mut BinaryHeap<Reverse<u32>>,
        queued: &mut [bool],
        expect_dense: bool,
    ) {
        if expect_dense || steps.list.len() >= self.dense_cutoff() {
            return self.btran_dense(steps, rows);
        }
        // Uᵀ solve, ascending steps.
        pending.clear();
        for &s in &steps.list {
            if steps.vals[s as usize] != 0.0 {
                queued[s as usize] = true;
                pending.push(Reverse(s));
            }
        }
        while let Some(Reverse(k)) = pending.pop() {
            queued[k as usize] = false;
            let z = steps.vals[k as usize] / self.u_diag[k as usize];
            steps.vals[k as usize] = z;
            if z == 0.0 {
                continue;
            }
            for (k2, u) in self.u_by_row.col(k as usize) {
                steps.add(k2, -u * z);
                if !queued[k2 as usize] {
                    queued[k2 as usize] = true;
                    pending.push(Reverse(k2));
                }
            }
        }

        // Lᵀ solve: assign y at pivot rows in descending step order,
        // scattering into the steps that read each freshly known row.
        rows.clear();
        pending.clear();
        for &s in &steps.list {
            if steps.vals[s as usize] != 0.0 && !queued[s as usize] {
                queued[s as usize] = true;
                pending.push(Reverse(!s));
            }
        }
        while let Some(Reverse(not_j)) = pending.pop() {
            let j = !not_j;
            queued[j as usize] = false;
            let val = steps.vals[j as usize];
            if val == 0.0 {
                continue;
            }
            let row = self.pivot_row[j as usize];
            rows.set(row, val);
            for (j2, lv) in self.l_by_row.col(row as usize) {
                steps.add(j2, -lv * val);
                if !queued[j2 as usize] {
                    queued[j2 as usize] = true;
                    pending.push(Reverse(!j2));
                }
            }
        }
        steps.clear();
    }

    /// Linear-scan variant of [`Lu::btran`] for dense inputs; gather-style,
    /// so it only touches the column-major factors.
    fn btran_dense(&self, steps: &mut Scratch, rows: &mut Scratch) {
        let m = self.pivot_row.len();
        for k in 0..m {
            let mut s = steps.vals[k];
            for (j, u) in self.u_by_step.col(k) {
                s -= u * steps.vals[j as usize];
            }
            if s != 0.0 || steps.vals[k] != 0.0 {
                steps.set(k as u32, s / self.u_diag[k]);
            }
        }
        rows.clear();
        for j in (0..m).rev() {
            let mut s = steps.vals[j];
            for (row, lv) in self.l_by_step.col(j) {
                s -= lv * rows.vals[row as usize];
            }
            if s != 0.0 {
                rows.set(self.pivot_row[j], s);
            }
        }
        steps.clear();
    }
}

fn empty_mat(cols: usize) -> FlatMat {
    FlatMat {
        ptr: vec![0; cols + 1],
        idx: Vec::new(),
        val: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Dense reference columns for a small random sparse matrix.
    fn random_basis(m: usize, seed: u64) -> Vec<Vec<(u32, f64)>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|j| {
                let mut col: Vec<(u32, f64)> = Vec::new();
                for _ in 0..m {
                    if rng.gen::<f64>() < 0.3 {
                        col.push((rng.gen_range(0..m as u32), rng.gen_range(-2.0..2.0)));
                    }
                }
                col.sort_by_key(|&(r, _)| r);
                col.dedup_by_key(|&mut (r, _)| r);
                // Guarantee nonsingularity with a diagonal anchor.
                if !col.iter().any(|&(r, _)| r == j as u32) {
                    col.push((j as u32, 3.0 + j as f64));
                }
                col
            })
            .collect()
    }

    fn mat_vec(cols: &[Vec<(u32, f64)>], x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let mut out = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                out[r as usize] += v * x[j];
            }
        }
        out
    }

    #[test]
    fn ftran_btran_recover_solutions() {
        for seed in 0..10 {
            let m = 40;
            let cols = random_basis(m, seed);
            let mut basis: Vec<usize> = (0..m).collect();
            let mut work = Scratch::new(m);
            let (lu, reps) = Lu::factorize(
                &mut basis,
                |j, buf| buf.extend_from_slice(&cols[j]),
                m,
                &mut work,
            );
            assert!(reps.is_empty(), "random anchored basis should factor");

            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 100);
            let x_true: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = mat_vec(&cols, &x_true);

            let mut rows = Scratch::new(m);
            let mut steps = Scratch::new(m);
            let mut pending = BinaryHeap::new();
            let mut queued = vec![false; m];
            for (i, &v) in b.iter().enumerate() {
                if v != 0.0 {
                    rows.set(i as u32, v);
                }
            }
            lu.ftran(&mut rows, &mut steps, &mut pending, &mut queued, false);
            for (j, &xt) in x_true.iter().enumerate() {
                assert!(
                    (steps.vals[j] - xt).abs() < 1e-9,
                    "ftran mismatch at {j}: {} vs {xt}",
                    steps.vals[j]
                );
            }
            steps.clear();

            // Bᵀ y = c.
            let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut y_in = Scratch::new(m);
            for (j, &v) in c.iter().enumerate() {
                y_in.set(j as u32, v);
            }
            let mut y_out = Scratch::new(m);
            lu.btran(&mut y_in, &mut y_out, &mut pending, &mut queued, false);
            // Verify Bᵀ y = c column by column.
            for (j, col) in cols.iter().enumerate() {
                let dot: f64 = col.iter().map(|&(r, v)| v * y_out.vals[r as usize]).sum();
                assert!((dot - c[j]).abs() < 1e-9, "btran mismatch at {j}");
            }
        }
    }

    #[test]
    fn dependent_columns_are_replaced_by_slacks() {
        // Two identical columns force one replacement.
        let cols = vec![
            vec![(0u32, 1.0), (1, 2.0)],
            vec![(0u32, 1.0), (1, 2.0)],
            vec![(2u32, 1.0)],
        ];
        let mut basis: Vec<usize> = vec![0, 1, 2];
        let mut work = Scratch::new(3);
        let (lu, reps) = Lu::factorize(
            &mut basis,
            |j, buf| buf.extend_from_slice(&cols[j]),
            0,
            &mut work,
        );
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].position, 1);
        assert_eq!(lu.pivot_row.len(), 3);
        // All rows pivoted exactly once.
        let mut rows: Vec<u32> = lu.pivot_row.clone();
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1, 2]);
    }
}
