//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The factorization is left-looking: columns are processed in an order that
//! first peels off column singletons (the triangular part that dominates the
//! bases of network-like models) and then takes the remaining columns by
//! ascending count. Each column is reduced by a sparse triangular solve with
//! the `L` built so far, and its pivot row is picked by threshold partial
//! pivoting with a preference for sparse rows.

use crate::model::CscMatrix;
use crate::sparse::{Dfs, SparseVec, Triangle};

const NONE: usize = usize::MAX;
const DROP_TOL: f64 = 1e-14;
const SINGULAR_TOL: f64 = 1e-11;

/// Columns of the basis that could not be pivoted together with the rows
/// left without a pivot. Both lists have the same length.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    row_step: Vec<usize>,
    pos_step: Vec<usize>,
    u_diag: Vec<f64>,
    // all four triangles live in pivot-step space
    l_fwd: Triangle,
    u_fwd: Triangle,
    u_bwd: Triangle,
    l_bwd: Triangle,
}

impl LuFactors {
    /// Factorizes the square matrix whose columns are the basis positions.
    pub fn factorize(basis: &CscMatrix, threshold: f64) -> Result<Self, Singular> {
        let m = basis.ncols;
        debug_assert_eq!(basis.nrows, m);
        let rows_t = basis.transpose();
        let order = column_order(basis, &rows_t);
        let mut row_count: Vec<usize> = (0..m).map(|i| rows_t.col(i).0.len()).collect();

        let mut prow = Vec::with_capacity(m);
        let mut pcol = Vec::with_capacity(m);
        let mut u_diag = Vec::with_capacity(m);
        let mut l_start = vec![0];
        let mut l_row: Vec<usize> = Vec::new();
        let mut l_val: Vec<f64> = Vec::new();
        let mut u_edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut row_step = vec![NONE; m];
        let mut work = vec![0.0; m];
        let mut visited = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut steps: Vec<usize> = Vec::new();
        let mut singular_positions = Vec::new();

        for &(pos, preferred) in &order {
            let (rows, vals) = basis.col(pos);
            pattern.clear();
            for (&i, &a) in rows.iter().zip(vals) {
                work[i] = a;
                if !visited[i] {
                    visited[i] = true;
                    pattern.push(i);
                }
            }
            // symbolic reach through the columns of L
            stack.extend_from_slice(&pattern);
            while let Some(i) = stack.pop() {
                let s = row_step[i];
                if s == NONE {
                    continue;
                }
                for &r in &l_row[l_start[s]..l_start[s + 1]] {
                    if !visited[r] {
                        visited[r] = true;
                        pattern.push(r);
                        stack.push(r);
                    }
                }
            }
            steps.clear();
            steps.extend(pattern.iter().filter_map(|&i| {
                let s = row_step[i];
                (s != NONE).then_some(s)
            }));
            steps.sort_unstable();
            for &s in &steps {
                let v = work[prow[s]];
                if v != 0.0 {
                    for k in l_start[s]..l_start[s + 1] {
                        work[l_row[k]] -= l_val[k] * v;
                    }
                }
            }

            let mut max_abs: f64 = 0.0;
            for &i in &pattern {
                if row_step[i] == NONE {
                    max_abs = max_abs.max(work[i].abs());
                }
            }
            if max_abs <= SINGULAR_TOL {
                singular_positions.push(pos);
                for &i in &pattern {
                    work[i] = 0.0;
                    visited[i] = false;
                }
                continue;
            }
            let limit = threshold * max_abs;
            let mut pivot = NONE;
            if preferred != NONE && row_step[preferred] == NONE && work[preferred].abs() >= limit {
                pivot = preferred;
            } else {
                for &i in &pattern {
                    if row_step[i] != NONE || work[i].abs() < limit {
                        continue;
                    }
                    if pivot == NONE
                        || row_count[i] < row_count[pivot]
                        || (row_count[i] == row_count[pivot] && i < pivot)
                    {
                        pivot = i;
                    }
                }
            }
            let diag = work[pivot];
            let step = prow.len();
            for &i in &pattern {
                let v = work[i];
                if row_step[i] != NONE {
                    if v.abs() > DROP_TOL {
                        u_edges.push((step, row_step[i], v));
                    }
                } else if i != pivot && v.abs() > DROP_TOL {
                    l_row.push(i);
                    l_val.push(v / diag);
                }
                work[i] = 0.0;
                visited[i] = false;
            }
            l_start.push(l_row.len());
            u_diag.push(diag);
            prow.push(pivot);
            pcol.push(pos);
            row_step[pivot] = step;
            for &i in rows {
                row_count[i] = row_count[i].saturating_sub(1);
            }
        }

        if !singular_positions.is_empty() {
            let rows = (0..m).filter(|&i| row_step[i] == NONE).collect();
            return Err(Singular {
                positions: singular_positions,
                rows,
            });
        }
        let mut l_edges = Vec::with_capacity(l_row.len());
        for s in 0..m {
            for k in l_start[s]..l_start[s + 1] {
                l_edges.push((s, row_step[l_row[k]], l_val[k]));
            }
        }
        let flip = |e: &[(usize, usize, f64)]| e.iter().map(|&(s, t, a)| (t, s, a)).collect::<Vec<_>>();
        let mut pos_step = vec![0; m];
        for (s, &p) in pcol.iter().enumerate() {
            pos_step[p] = s;
        }
        Ok(LuFactors {
            m,
            l_bwd: Triangle::from_edges(m, &flip(&l_edges), false),
            u_bwd: Triangle::from_edges(m, &flip(&u_edges), true),
            l_fwd: Triangle::from_edges(m, &l_edges, true),
            u_fwd: Triangle::from_edges(m, &u_edges, false),
            prow,
            pcol,
            row_step,
            pos_step,
            u_diag,
        })
    }

    pub fn nnz(&self) -> usize {
        self.m + self.l_fwd.nnz() + self.u_fwd.nnz()
    }

    /// Solves `B x = b`: `v` enters row-indexed and leaves indexed by basis
    /// position. `work` is step-indexed scratch.
    fn ftran(&self, v: &mut SparseVec, work: &mut SparseVec, dfs: &mut Dfs) {
        work.clear();
        for &i in &v.idx {
            work.set(self.row_step[i], v.val[i]);
        }
        v.clear();
        self.l_fwd.solve(None, work, dfs);
        self.u_fwd.solve(Some(&self.u_diag), work, dfs);
        for &s in &work.idx {
            let x = work.val[s];
            if x.abs() > DROP_TOL {
                v.set(self.pcol[s], x);
            }
        }
    }

    /// Solves `B' y = c`: `v` enters indexed by basis position and leaves
    /// row-indexed.
    fn btran(&self, v: &mut SparseVec, work: &mut SparseVec, dfs: &mut Dfs) {
        work.clear();
        for &p in &v.idx {
            work.set(self.pos_step[p], v.val[p]);
        }
        v.clear();
        self.u_bwd.solve(Some(&self.u_diag), work, dfs);
        self.l_bwd.solve(None, work, dfs);
        for &s in &work.idx {
            let y = work.val[s];
            if y.abs() > DROP_TOL {
                v.set(self.prow[s], y);
            }
        }
    }
}

/// Returns `(position, preferred pivot row)` in processing order.
fn column_order(basis: &CscMatrix, rows_t: &CscMatrix) -> Vec<(usize, usize)> {
    let m = basis.ncols;
    let mut count: Vec<usize> = (0..m).map(|j| basis.col(j).0.len()).collect();
    let mut row_active = vec![true; m];
    let mut done = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut queue: Vec<usize> = (0..m).rev().filter(|&j| count[j] == 1).collect();
    while let Some(j) = queue.pop() {
        if done[j] || count[j] != 1 {
            continue;
        }
        let (rows, _) = basis.col(j);
        let Some(&r) = rows.iter().find(|&&i| row_active[i]) else {
            continue;
        };
        done[j] = true;
        row_active[r] = false;
        order.push((j, r));
        for &k in rows_t.col(r).0 {
            if !done[k] {
                count[k] -= 1;
                if count[k] == 1 {
                    queue.push(k);
                }
            }
        }
    }
    let mut rest: Vec<usize> = (0..m).filter(|&j| !done[j]).collect();
    rest.sort_by_key(|&j| (count[j], j));
    order.extend(rest.into_iter().map(|j| (j, NONE)));
    order
}

/// LU factors plus a product-form eta file for the updates since the last
/// refactorization.
#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    lu: LuFactors,
    eta_pos: Vec<usize>,
    eta_pivot: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
    work: SparseVec,
    dfs: Dfs,
}

impl BasisFactor {
    pub fn new(lu: LuFactors) -> Self {
        let m = lu.m;
        Self {
            lu,
            eta_pos: Vec::new(),
            eta_pivot: Vec::new(),
            eta_start: vec![0],
            eta_idx: Vec::new(),
            eta_val: Vec::new(),
            work: SparseVec::new(m),
            dfs: Dfs::new(m),
        }
    }

    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    /// Nonzeros in the eta file, a proxy for the cost of further updates.
    pub fn eta_nnz(&self) -> usize {
        self.eta_idx.len()
    }

    pub fn lu_nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// `B^{-1} v`: `v` enters row-indexed and leaves position-indexed.
    pub fn ftran(&mut self, v: &mut SparseVec) {
        self.lu.ftran(v, &mut self.work, &mut self.dfs);
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = v.val[r];
            if xr != 0.0 {
                let xr = xr / self.eta_pivot[e];
                v.val[r] = xr;
                for k in self.eta_start[e]..self.eta_start[e + 1] {
                    v.add(self.eta_idx[k], -self.eta_val[k] * xr);
                }
            }
        }
    }

    /// `B^{-T} v`: `v` enters position-indexed and leaves row-indexed.
    pub fn btran(&mut self, v: &mut SparseVec) {
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut x = v.val[r];
            for k in self.eta_start[e]..self.eta_start[e + 1] {
                x -= self.eta_val[k] * v.val[self.eta_idx[k]];
            }
            if x != 0.0 || v.val[r] != 0.0 {
                v.set(r, x / self.eta_pivot[e]);
            }
        }
        self.lu.btran(v, &mut self.work, &mut self.dfs);
    }

    /// Records that the column at position `r` was replaced by a column
    /// whose `B^{-1} a` (position-indexed) is `alpha`.
    pub fn update(&mut self, r: usize, alpha: &SparseVec) {
        self.eta_pos.push(r);
        self.eta_pivot.push(alpha.val[r]);
        for &i in &alpha.idx {
            let a = alpha.val[i];
            if i != r && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}
