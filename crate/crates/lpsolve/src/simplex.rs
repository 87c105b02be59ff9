//! Bounded primal and dual simplex on the computational form
//! `A x + s = b`, where every row owns a logical column `s` whose bounds
//! encode the row sense (`<=`: `s >= 0`, `>=`: `s <= 0`, `=`: `s = 0`).
//!
//! The driver keeps the basis dual feasible whenever it can and then runs
//! the dual simplex; if neither primal nor dual feasibility holds it first
//! minimizes an artificial piecewise cost that makes the starting basis dual
//! feasible, then finishes with the primal simplex on the true costs.

use std::time::Instant;

use crate::error::SolveError;
use crate::lu::{BasisFactor, LuFactors};
use crate::model::{CscMatrix, LpModel, Sense};
use crate::scaling::{pow2, Scaling};
use crate::sparse::SparseVec;
use crate::solution::{Basis, BasisStatus, LpSolution, SolveOptions, SolveStats, Status};

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const LU_THRESHOLD: f64 = 0.1;
const REFACTOR_EVERY: usize = 50;
const BLAND_AFTER: usize = 400;
const MAX_OUTER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic,
    Lower,
    Upper,
    Free,
}

enum Phase {
    Done,
    Refactor,
    Infeasible,
    Unbounded,
    Limit,
}

/// Scaled computational form. Indices `0..n` are structural, `n..n+m`
/// logical.
struct Problem {
    n: usize,
    m: usize,
    a: CscMatrix,
    at: CscMatrix,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scaling: Scaling,
    obj_scale: f64,
}

impl Problem {
    fn new(model: &LpModel, scale: bool) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();
        let mut a = model.to_csc();
        let scaling = if scale { Scaling::compute(&a) } else { Scaling::identity(m, n) };
        for j in 0..n {
            for k in a.col_ptr[j]..a.col_ptr[j + 1] {
                a.vals[k] *= scaling.row[a.row_idx[k]] * scaling.col[j];
            }
        }
        let at = a.transpose();
        let mut cost = vec![0.0; n + m];
        let mut lower = vec![0.0; n + m];
        let mut upper = vec![0.0; n + m];
        let mut cmax: f64 = 0.0;
        for (j, v) in model.vars().iter().enumerate() {
            cost[j] = v.cost * scaling.col[j];
            cmax = cmax.max(cost[j].abs());
            lower[j] = v.lower / scaling.col[j];
            upper[j] = v.upper / scaling.col[j];
        }
        // only extreme objectives are normalized; the reduced-cost tolerance is absolute
        let obj_scale = if scale && cmax > 1e6 { pow2(cmax / 1e6) } else { 1.0 };
        for c in &mut cost[..n] {
            *c /= obj_scale;
        }
        let mut rhs = vec![0.0; m];
        for (i, r) in model.rows().iter().enumerate() {
            rhs[i] = r.rhs * scaling.row[i];
            let (lo, hi) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower[n + i] = lo;
            upper[n + i] = hi;
        }
        Self {
            n,
            m,
            a,
            at,
            cost,
            lower,
            upper,
            rhs,
            scaling,
            obj_scale,
        }
    }

    fn fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }
}

struct Solver<'p> {
    p: &'p Problem,
    opts: SolveOptions,
    state: Vec<VState>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    x: Vec<f64>,
    cost: Vec<f64>,
    cost_shifted: bool,
    d: Vec<f64>,
    y: Vec<f64>,
    factor: Option<BasisFactor>,
    iterations: usize,
    refactors: usize,
    work: SparseVec,
    alpha_q: SparseVec,
    rho: SparseVec,
    tau: SparseVec,
    // squared primal infeasibility per basis position, zero within tolerance
    infeas: Vec<f64>,
    alpha_r: Vec<f64>,
    alpha_r_nz: Vec<usize>,
    in_alpha_r: Vec<bool>,
    dse: Vec<f64>,
    devex: Vec<f64>,
    bland: bool,
    degenerate: usize,
}

impl<'p> Solver<'p> {
    fn new(p: &'p Problem, opts: SolveOptions) -> Self {
        let (n, m) = (p.n, p.m);
        Self {
            p,
            opts,
            state: vec![VState::Lower; n + m],
            basis: Vec::with_capacity(m),
            pos: vec![NONE; n + m],
            x: vec![0.0; n + m],
            cost: p.cost.clone(),
            cost_shifted: false,
            d: vec![0.0; n + m],
            y: vec![0.0; m],
            factor: None,
            iterations: 0,
            refactors: 0,
            work: SparseVec::new(m),
            alpha_q: SparseVec::new(m),
            rho: SparseVec::new(m),
            tau: SparseVec::new(m),
            infeas: vec![0.0; m],
            alpha_r: vec![0.0; n + m],
            alpha_r_nz: Vec::new(),
            in_alpha_r: vec![false; n + m],
            dse: vec![1.0; m],
            devex: vec![1.0; n + m],
            bland: false,
            degenerate: 0,
        }
    }

    /// Slack basis with structural variables at the bound their cost favors.
    fn cold_start(&mut self) {
        let p = self.p;
        for j in 0..p.n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            let st = if lo == hi {
                VState::Lower
            } else if lo.is_infinite() && hi.is_infinite() {
                VState::Free
            } else if p.cost[j] > 0.0 {
                if lo.is_finite() { VState::Lower } else { VState::Upper }
            } else if p.cost[j] < 0.0 {
                if hi.is_finite() { VState::Upper } else { VState::Lower }
            } else if lo.is_finite() {
                VState::Lower
            } else {
                VState::Upper
            };
            self.set_nonbasic(j, st);
        }
        self.basis.clear();
        for i in 0..p.m {
            self.make_basic(p.n + i, i);
        }
    }

    fn warm_start(&mut self, warm: &Basis) {
        let p = self.p;
        let statuses = warm.vars.iter().chain(&warm.rows);
        self.basis.clear();
        let mut demoted = Vec::new();
        for (j, &st) in statuses.enumerate() {
            match st {
                BasisStatus::Basic if self.basis.len() < p.m => {
                    self.basis.push(j);
                    self.pos[j] = self.basis.len() - 1;
                    self.state[j] = VState::Basic;
                }
                BasisStatus::Basic => demoted.push(j),
                BasisStatus::AtLower => self.set_nonbasic(j, VState::Lower),
                BasisStatus::AtUpper => self.set_nonbasic(j, VState::Upper),
                BasisStatus::Free => self.set_nonbasic(j, VState::Free),
            }
        }
        for j in demoted {
            self.set_nonbasic(j, VState::Lower);
        }
        let mut i = 0;
        while self.basis.len() < p.m {
            let j = p.n + i;
            if self.pos[j] == NONE {
                self.basis.push(j);
                self.pos[j] = self.basis.len() - 1;
                self.state[j] = VState::Basic;
            }
            i += 1;
        }
    }

    fn make_basic(&mut self, j: usize, position: usize) {
        if position == self.basis.len() {
            self.basis.push(j);
        } else {
            self.basis[position] = j;
        }
        self.pos[j] = position;
        self.state[j] = VState::Basic;
    }

    /// Puts `j` at the requested bound, falling back to a finite one.
    fn set_nonbasic(&mut self, j: usize, want: VState) {
        let (lo, hi) = (self.p.lower[j], self.p.upper[j]);
        let st = match want {
            _ if lo == hi => VState::Lower,
            VState::Lower if lo.is_finite() => VState::Lower,
            VState::Upper if hi.is_finite() => VState::Upper,
            _ if lo.is_finite() => VState::Lower,
            _ if hi.is_finite() => VState::Upper,
            _ => VState::Free,
        };
        self.pos[j] = NONE;
        self.state[j] = st;
        self.x[j] = match st {
            VState::Lower => lo,
            VState::Upper => hi,
            _ => 0.0,
        };
    }

    /// Bound state nearest to the current value of `j`.
    fn nearest_bound(&self, j: usize) -> VState {
        let (lo, hi, v) = (self.p.lower[j], self.p.upper[j], self.x[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => VState::Free,
            (true, false) => VState::Lower,
            (false, true) => VState::Upper,
            (true, true) => {
                if (v - lo).abs() <= (hi - v).abs() {
                    VState::Lower
                } else {
                    VState::Upper
                }
            }
        }
    }

    fn factor(&self) -> &BasisFactor {
        self.factor.as_ref().expect("basis factorized")
    }

    /// Refactorizes after a fixed number of updates or once the eta file
    /// outgrows the factors.
    fn needs_refactor(&self) -> bool {
        let f = self.factor();
        f.num_updates() >= REFACTOR_EVERY || f.eta_nnz() > 2 * f.lu_nnz()
    }

    fn refactor(&mut self) -> Result<(), SolveError> {
        let p = self.p;
        for _ in 0..8 {
            let mut bm = CscMatrix {
                nrows: p.m,
                ncols: p.m,
                col_ptr: Vec::with_capacity(p.m + 1),
                row_idx: Vec::new(),
                vals: Vec::new(),
            };
            bm.col_ptr.push(0);
            for &j in &self.basis {
                if j < p.n {
                    let (rows, vals) = p.a.col(j);
                    bm.row_idx.extend_from_slice(rows);
                    bm.vals.extend_from_slice(vals);
                } else {
                    bm.row_idx.push(j - p.n);
                    bm.vals.push(1.0);
                }
                bm.col_ptr.push(bm.row_idx.len());
            }
            match LuFactors::factorize(&bm, LU_THRESHOLD) {
                Ok(lu) => {
                    self.factor = Some(BasisFactor::new(lu));
                    self.refactors += 1;
                    return Ok(());
                }
                Err(sing) => {
                    log::debug!("singular basis: replacing {} columns by logicals", sing.positions.len());
                    let mut rows: Vec<usize> =
                        sing.rows.iter().copied().filter(|&i| self.pos[p.n + i] == NONE).collect();
                    if rows.len() < sing.positions.len() {
                        for i in 0..p.m {
                            if self.pos[p.n + i] == NONE && !rows.contains(&i) {
                                rows.push(i);
                                if rows.len() >= sing.positions.len() {
                                    break;
                                }
                            }
                        }
                    }
                    for (&position, &row) in sing.positions.iter().zip(&rows) {
                        let old = self.basis[position];
                        let st = self.nearest_bound(old);
                        self.set_nonbasic(old, st);
                        self.make_basic(p.n + row, position);
                        self.dse[position] = 1.0;
                    }
                }
            }
        }
        Err(SolveError::NumericalBreakdown {
            iterations: self.iterations,
            reason: "basis stays singular after repair".into(),
        })
    }

    fn compute_primal(&mut self) {
        let p = self.p;
        self.work.clear();
        self.work.val.copy_from_slice(&p.rhs);
        for j in 0..p.n + p.m {
            if self.state[j] == VState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < p.n {
                let (rows, vals) = p.a.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    self.work.val[i] -= v * xj;
                }
            } else {
                self.work.val[j - p.n] -= xj;
            }
        }
        self.work.rebuild();
        self.factor.as_mut().expect("basis factorized").ftran(&mut self.work);
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = self.work.val[k];
        }
    }

    fn compute_duals(&mut self) {
        let p = self.p;
        self.work.clear();
        for (k, &j) in self.basis.iter().enumerate() {
            self.work.val[k] = self.cost[j];
        }
        self.work.rebuild();
        self.factor.as_mut().expect("basis factorized").btran(&mut self.work);
        self.y.copy_from_slice(&self.work.val);
        for j in 0..p.n + p.m {
            self.d[j] = if self.state[j] == VState::Basic {
                0.0
            } else if j < p.n {
                let (rows, vals) = p.a.col(j);
                self.cost[j] - rows.iter().zip(vals).map(|(&i, &v)| v * self.y[i]).sum::<f64>()
            } else {
                self.cost[j] - self.y[j - p.n]
            };
        }
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        if self.p.fixed(j) {
            return 0.0;
        }
        match self.state[j] {
            VState::Basic => 0.0,
            VState::Lower => (-self.d[j]).max(0.0),
            VState::Upper => self.d[j].max(0.0),
            VState::Free => self.d[j].abs(),
        }
    }

    fn max_dual_infeasibility(&self) -> f64 {
        (0..self.p.n + self.p.m).map(|j| self.dual_infeasibility(j)).fold(0.0, f64::max)
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.p.lower[j] - v).max(v - self.p.upper[j]).max(0.0)
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&j| self.primal_infeasibility(j)).fold(0.0, f64::max)
    }

    /// Shifts costs of dual infeasible nonbasic variables so their reduced
    /// cost becomes zero.
    fn shift_costs(&mut self) {
        let tol = self.opts.optimality_tol;
        for j in 0..self.p.n + self.p.m {
            if self.dual_infeasibility(j) > tol {
                self.cost[j] -= self.d[j];
                self.d[j] = 0.0;
                self.cost_shifted = true;
            }
        }
    }

    fn set_artificial_costs(&mut self) {
        for j in 0..self.p.n + self.p.m {
            self.cost[j] = if self.p.fixed(j) {
                0.0
            } else {
                match self.state[j] {
                    VState::Lower => 1.0,
                    VState::Upper => -1.0,
                    _ => 0.0,
                }
            };
        }
    }

    fn restore_costs(&mut self) {
        self.cost.copy_from_slice(&self.p.cost);
        self.cost_shifted = false;
    }

    /// `alpha_q = B^{-1} a_q`.
    fn ftran_col(&mut self, q: usize) {
        let p = self.p;
        self.alpha_q.clear();
        if q < p.n {
            let (rows, vals) = p.a.col(q);
            for (&i, &v) in rows.iter().zip(vals) {
                self.alpha_q.set(i, v);
            }
        } else {
            self.alpha_q.set(q - p.n, 1.0);
        }
        self.factor.as_mut().expect("basis factorized").ftran(&mut self.alpha_q);
    }

    /// `rho = B^{-T} e_r` and `alpha_r = rho' [A I]` on its sparsity pattern.
    fn pivot_row(&mut self, r: usize) {
        let p = self.p;
        self.rho.clear();
        self.rho.set(r, 1.0);
        self.factor.as_mut().expect("basis factorized").btran(&mut self.rho);
        for &i in &self.rho.idx {
            let ri = self.rho.val[i];
            if ri == 0.0 {
                continue;
            }
            let lj = p.n + i;
            if !self.in_alpha_r[lj] {
                self.in_alpha_r[lj] = true;
                self.alpha_r_nz.push(lj);
            }
            self.alpha_r[lj] += ri;
            let (cols, vals) = p.at.col(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if !self.in_alpha_r[j] {
                    self.in_alpha_r[j] = true;
                    self.alpha_r_nz.push(j);
                }
                self.alpha_r[j] += v * ri;
            }
        }
    }

    fn clear_alpha_r(&mut self) {
        for &j in &self.alpha_r_nz {
            self.alpha_r[j] = 0.0;
            self.in_alpha_r[j] = false;
        }
        self.alpha_r_nz.clear();
    }

    fn note_step(&mut self, step: f64) {
        self.iterations += 1;
        if step.abs() < 1e-12 {
            self.degenerate += 1;
            if self.degenerate > BLAND_AFTER && !self.bland {
                log::debug!("switching to Bland's rule after {} degenerate pivots", self.degenerate);
                self.bland = true;
            }
        } else {
            self.degenerate = 0;
            self.bland = false;
        }
    }

    fn swap_basis(&mut self, r: usize, q: usize, leave_state: VState) {
        let p_var = self.basis[r];
        let (lo, hi) = (self.p.lower[p_var], self.p.upper[p_var]);
        self.state[p_var] = if lo == hi { VState::Lower } else { leave_state };
        self.x[p_var] = match self.state[p_var] {
            VState::Lower => lo,
            VState::Upper => hi,
            _ => 0.0,
        };
        self.pos[p_var] = NONE;
        self.make_basic(q, r);
        self.factor.as_mut().expect("basis factorized").update(r, &self.alpha_q);
    }

    fn dual_phase(&mut self) -> Phase {
        let p = self.p;
        let dtol = self.opts.optimality_tol;
        for i in 0..p.m {
            self.update_infeas(i);
        }
        loop {
            if self.iterations >= self.opts.iteration_limit {
                return Phase::Limit;
            }
            if self.needs_refactor() {
                return Phase::Refactor;
            }
            let mut r = NONE;
            let mut best = 0.0;
            for (i, &inf) in self.infeas.iter().enumerate() {
                if inf == 0.0 {
                    continue;
                }
                if self.bland {
                    if r == NONE || self.basis[i] < self.basis[r] {
                        r = i;
                    }
                } else {
                    let score = inf / self.dse[i];
                    if score > best {
                        best = score;
                        r = i;
                    }
                }
            }
            if r == NONE {
                return Phase::Done;
            }
            let leaving = self.basis[r];
            let to_lower = self.x[leaving] < p.lower[leaving];
            let target = if to_lower { p.lower[leaving] } else { p.upper[leaving] };
            self.pivot_row(r);
            self.dse[r] = self.rho.idx.iter().map(|&i| self.rho.val[i].powi(2)).sum::<f64>().max(1e-12);
            let sigma = if to_lower { -1.0 } else { 1.0 };

            // Harris two-pass ratio test
            let mut t_max = f64::INFINITY;
            for &j in &self.alpha_r_nz {
                if let Some(t) = self.dual_ratio(j, sigma, dtol) {
                    t_max = t_max.min(t);
                }
            }
            if t_max == f64::INFINITY {
                self.clear_alpha_r();
                // confirm the certificate on a fresh factorization
                return if self.factor().num_updates() > 0 { Phase::Refactor } else { Phase::Infeasible };
            }
            let t_max = t_max.max(0.0);
            let mut q = NONE;
            let mut best_abs = 0.0;
            let mut best_ratio = f64::INFINITY;
            for &j in &self.alpha_r_nz {
                let Some(_) = self.dual_ratio(j, sigma, dtol) else {
                    continue;
                };
                let a = self.alpha_r[j].abs();
                let exact = self.dual_ratio(j, sigma, 0.0).unwrap_or(0.0).max(0.0);
                if self.bland {
                    if exact < best_ratio || (exact == best_ratio && j < q) {
                        best_ratio = exact;
                        q = j;
                    }
                } else if exact <= t_max && (a > best_abs || (a == best_abs && j < q)) {
                    best_abs = a;
                    q = j;
                }
            }
            if q == NONE {
                self.clear_alpha_r();
                return Phase::Refactor;
            }
            let a_rq = self.alpha_r[q];
            self.ftran_col(q);
            let a_qr = self.alpha_q.val[r];
            if (a_qr - a_rq).abs() > 1e-6 * (1.0 + a_rq.abs()) && self.factor().num_updates() > 0 {
                self.clear_alpha_r();
                return Phase::Refactor;
            }
            if a_qr.abs() < PIVOT_TOL {
                self.clear_alpha_r();
                return Phase::Refactor;
            }

            let theta_d = self.d[q] / a_rq;
            for &j in &self.alpha_r_nz {
                if self.state[j] != VState::Basic {
                    self.d[j] -= theta_d * self.alpha_r[j];
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            let delta = (self.x[leaving] - target) / a_qr;
            for &i in &self.alpha_q.idx {
                self.x[self.basis[i]] -= delta * self.alpha_q.val[i];
            }
            self.x[q] += delta;

            // dual steepest-edge weights
            self.tau.copy_from(&self.rho);
            self.factor.as_mut().expect("basis factorized").ftran(&mut self.tau);
            let w_r = self.dse[r];
            for &i in &self.alpha_q.idx {
                if i == r {
                    continue;
                }
                let ratio = self.alpha_q.val[i] / a_qr;
                if ratio != 0.0 {
                    let w = self.dse[i] - 2.0 * ratio * self.tau.val[i] + ratio * ratio * w_r;
                    self.dse[i] = w.max(ratio * ratio).max(1e-12);
                }
            }
            self.dse[r] = (w_r / (a_qr * a_qr)).max(1e-12);

            let leave_state = if to_lower { VState::Lower } else { VState::Upper };
            self.swap_basis(r, q, leave_state);
            for k in 0..self.alpha_q.idx.len() {
                let i = self.alpha_q.idx[k];
                self.update_infeas(i);
            }
            self.update_infeas(r);
            self.clear_alpha_r();
            self.note_step(theta_d);
        }
    }

    fn update_infeas(&mut self, i: usize) {
        let inf = self.primal_infeasibility(self.basis[i]);
        self.infeas[i] = if inf > self.opts.feasibility_tol { inf * inf } else { 0.0 };
    }

    /// Dual ratio of nonbasic `j` in the dual ratio test, or `None` if `j`
    /// cannot enter. `tol` relaxes the reduced cost (Harris bound).
    fn dual_ratio(&self, j: usize, sigma: f64, tol: f64) -> Option<f64> {
        let st = self.state[j];
        if st == VState::Basic || self.p.fixed(j) {
            return None;
        }
        let a = self.alpha_r[j];
        if a.abs() < PIVOT_TOL {
            return None;
        }
        let sa = sigma * a;
        match st {
            VState::Lower if sa > 0.0 => Some((self.d[j] + tol) / sa),
            VState::Upper if sa < 0.0 => Some((-self.d[j] + tol) / -sa),
            VState::Free => Some((self.d[j].abs() + tol) / a.abs()),
            _ => None,
        }
    }

    fn primal_phase(&mut self) -> Phase {
        let p = self.p;
        let ftol = self.opts.feasibility_tol;
        let dtol = self.opts.optimality_tol;
        loop {
            if self.iterations >= self.opts.iteration_limit {
                return Phase::Limit;
            }
            if self.needs_refactor() {
                return Phase::Refactor;
            }
            let mut q = NONE;
            let mut best = 0.0;
            for j in 0..p.n + p.m {
                let inf = self.dual_infeasibility(j);
                if inf <= dtol {
                    continue;
                }
                if self.bland {
                    q = j;
                    break;
                }
                let score = inf * inf / self.devex[j];
                if score > best {
                    best = score;
                    q = j;
                }
            }
            if q == NONE {
                return Phase::Done;
            }
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            self.ftran_col(q);

            let mut t_max = f64::INFINITY;
            for &i in &self.alpha_q.idx {
                let b = self.basis[i];
                if let Some(t) = self.primal_ratio(i, b, dir, ftol) {
                    t_max = t_max.min(t);
                }
            }
            let flip = p.upper[q] - p.lower[q];
            if t_max == f64::INFINITY && !flip.is_finite() {
                return Phase::Unbounded;
            }
            let t_max = if t_max < f64::INFINITY { t_max.max(0.0) } else { t_max };
            let mut r = NONE;
            let mut step = f64::INFINITY;
            let mut best_abs = 0.0;
            if t_max < f64::INFINITY {
                for &i in &self.alpha_q.idx {
                    let b = self.basis[i];
                    let Some(_) = self.primal_ratio(i, b, dir, ftol) else {
                        continue;
                    };
                    let exact = self.primal_ratio(i, b, dir, 0.0).unwrap_or(0.0).max(0.0);
                    let a = self.alpha_q.val[i].abs();
                    if self.bland {
                        if exact < step || (exact == step && r != NONE && b < self.basis[r]) {
                            step = exact;
                            r = i;
                        }
                    } else if exact <= t_max && (a > best_abs || (a == best_abs && exact < step)) {
                        best_abs = a;
                        step = exact;
                        r = i;
                    }
                }
            }

            if flip.is_finite() && (r == NONE || flip <= step) {
                let delta = dir * flip;
                for &i in &self.alpha_q.idx {
                    self.x[self.basis[i]] -= delta * self.alpha_q.val[i];
                }
                let (st, v) = if dir > 0.0 {
                    (VState::Upper, p.upper[q])
                } else {
                    (VState::Lower, p.lower[q])
                };
                self.state[q] = st;
                self.x[q] = v;
                self.note_step(flip);
                continue;
            }
            if r == NONE {
                return Phase::Unbounded;
            }

            let delta = dir * step;
            for &i in &self.alpha_q.idx {
                self.x[self.basis[i]] -= delta * self.alpha_q.val[i];
            }
            self.x[q] += delta;
            let leaving = self.basis[r];
            let rate = -dir * self.alpha_q.val[r];
            let leave_state = if rate < 0.0 { VState::Lower } else { VState::Upper };

            self.pivot_row(r);
            let a_qr = self.alpha_q.val[r];
            let a_rq = self.alpha_r[q];
            if (a_qr - a_rq).abs() > 1e-6 * (1.0 + a_rq.abs()) && self.factor().num_updates() > 0 {
                self.clear_alpha_r();
                return Phase::Refactor;
            }
            let theta = self.d[q] / a_qr;
            let w_q = self.devex[q];
            let mut reset = false;
            for &j in &self.alpha_r_nz {
                if self.state[j] != VState::Basic && j != q {
                    let a = self.alpha_r[j];
                    self.d[j] -= theta * a;
                    let ratio = a / a_qr;
                    let w = self.devex[j].max(ratio * ratio * w_q);
                    self.devex[j] = w;
                    reset |= w > 1e8;
                }
            }
            self.d[q] = 0.0;
            self.d[leaving] = -theta;
            self.devex[leaving] = (w_q / (a_qr * a_qr)).max(1.0);
            if reset {
                self.devex.fill(1.0);
            }
            self.swap_basis(r, q, leave_state);
            self.clear_alpha_r();
            self.note_step(step);
        }
    }

    /// Step length at which basic variable `b` (position `i`) hits a bound
    /// when the entering variable moves in direction `dir`.
    fn primal_ratio(&self, i: usize, b: usize, dir: f64, tol: f64) -> Option<f64> {
        let a = self.alpha_q.val[i];
        if a.abs() < PIVOT_TOL {
            return None;
        }
        let rate = -dir * a;
        if rate < 0.0 {
            let lo = self.p.lower[b];
            lo.is_finite().then(|| (self.x[b] - lo + tol) / -rate)
        } else {
            let hi = self.p.upper[b];
            hi.is_finite().then(|| (hi - self.x[b] + tol) / rate)
        }
    }

    fn run(&mut self) -> Result<Status, SolveError> {
        let ftol = self.opts.feasibility_tol;
        let dtol = self.opts.optimality_tol;
        let mut artificial = false;
        for _ in 0..MAX_OUTER {
            self.refactor()?;
            self.compute_primal();
            self.compute_duals();
            if self.iterations >= self.opts.iteration_limit {
                return Ok(Status::IterationLimit);
            }
            if artificial {
                self.shift_costs();
                match self.dual_phase() {
                    Phase::Done => {
                        artificial = false;
                        self.restore_costs();
                    }
                    Phase::Refactor => {}
                    Phase::Infeasible => return Ok(Status::Infeasible),
                    Phase::Limit => return Ok(Status::IterationLimit),
                    Phase::Unbounded => unreachable!("dual phase never reports unboundedness"),
                }
                continue;
            }
            let pinf = self.max_primal_infeasibility() > ftol;
            let dinf_max = self.max_dual_infeasibility();
            let dinf = dinf_max > dtol;
            match (pinf, dinf) {
                (false, false) => {
                    if self.cost_shifted {
                        self.restore_costs();
                        continue;
                    }
                    return Ok(Status::Optimal);
                }
                (false, true) => match self.primal_phase() {
                    Phase::Done | Phase::Refactor => {}
                    Phase::Unbounded => {
                        if self.cost_shifted {
                            self.restore_costs();
                            continue;
                        }
                        return Ok(Status::Unbounded);
                    }
                    Phase::Limit => return Ok(Status::IterationLimit),
                    Phase::Infeasible => unreachable!("primal phase never reports infeasibility"),
                },
                (true, _) => {
                    if dinf {
                        if dinf_max < 1e3 * dtol {
                            self.shift_costs();
                        } else {
                            artificial = true;
                            self.set_artificial_costs();
                            continue;
                        }
                    }
                    match self.dual_phase() {
                        Phase::Done | Phase::Refactor => {}
                        Phase::Infeasible => return Ok(Status::Infeasible),
                        Phase::Limit => return Ok(Status::IterationLimit),
                        Phase::Unbounded => unreachable!("dual phase never reports unboundedness"),
                    }
                }
            }
        }
        Err(SolveError::NumericalBreakdown {
            iterations: self.iterations,
            reason: "no progress between refactorizations".into(),
        })
    }
}

/// Solves `model` with the built-in simplex, optionally from a basis of a
/// previous solve of a model with the same dimensions.
pub fn solve(model: &LpModel, opts: &SolveOptions, warm: Option<&Basis>) -> Result<LpSolution, SolveError> {
    let start = Instant::now();
    model.validate()?;
    let mut sol = solve_once(model, opts, warm)?;
    if opts.scaling && sol.is_optimal() && model.max_violation(&sol.primal) > opts.feasibility_tol {
        // tolerances met in scaled space only; finish on the unscaled problem
        log::debug!("{}: polishing without scaling", model.name);
        let unscaled = SolveOptions { scaling: false, ..*opts };
        let iterations = sol.stats.iterations;
        let refactors = sol.stats.refactorizations;
        sol = solve_once(model, &unscaled, sol.basis.as_ref())?;
        sol.stats.iterations += iterations;
        sol.stats.refactorizations += refactors;
    }
    sol.stats.wall_time = start.elapsed();
    Ok(sol)
}

fn solve_once(model: &LpModel, opts: &SolveOptions, warm: Option<&Basis>) -> Result<LpSolution, SolveError> {
    let start = Instant::now();
    let p = Problem::new(model, opts.scaling);
    let mut s = Solver::new(&p, *opts);
    match warm {
        Some(b) => {
            if b.vars.len() != p.n || b.rows.len() != p.m {
                return Err(SolveError::BasisMismatch {
                    expected: p.n + p.m,
                    got: b.vars.len() + b.rows.len(),
                });
            }
            s.warm_start(b);
        }
        None => s.cold_start(),
    }
    let status = s.run()?;
    let n = p.n;
    let primal: Vec<f64> = (0..n).map(|j| s.x[j] * p.scaling.col[j]).collect();
    let objective = model.objective_value(&primal);
    let duals = status.is_optimal().then(|| {
        (0..p.m)
            .map(|i| s.y[i] * p.scaling.row[i] * p.obj_scale)
            .collect()
    });
    let to_status = |j: usize| match s.state[j] {
        VState::Basic => BasisStatus::Basic,
        VState::Lower => BasisStatus::AtLower,
        VState::Upper => BasisStatus::AtUpper,
        VState::Free => BasisStatus::Free,
    };
    let basis = Basis {
        vars: (0..n).map(to_status).collect(),
        rows: (n..n + p.m).map(to_status).collect(),
    };
    let stats = SolveStats {
        iterations: s.iterations,
        refactorizations: s.refactors,
        wall_time: start.elapsed(),
    };
    log::debug!(
        "{}: {:?} after {} iterations, {} refactorizations, {:.3?}",
        model.name,
        status,
        stats.iterations,
        stats.refactorizations,
        stats.wall_time
    );
    Ok(LpSolution {
        status,
        objective,
        primal,
        duals,
        basis: Some(basis),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VarId;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn small_production_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut m = LpModel::new("wyndor");
        let x = m.add_var("x", 0.0, f64::INFINITY, -3.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, -5.0);
        m.add_constraint("a", [(x, 1.0)], Sense::Le, 4.0);
        m.add_constraint("b", [(y, 2.0)], Sense::Le, 12.0);
        m.add_constraint("c", [(x, 3.0), (y, 2.0)], Sense::Le, 18.0);
        let sol = solve(&m, &opts(), None).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective + 36.0).abs() < 1e-9);
        assert!((sol.primal[0] - 2.0).abs() < 1e-9);
        assert!((sol.primal[1] - 6.0).abs() < 1e-9);
        let y = sol.duals.unwrap();
        assert!((y[0]).abs() < 1e-9);
        assert!((y[1] + 1.5).abs() < 1e-9);
        assert!((y[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y  s.t. x + y = 10, x >= 3, y >= 2, x <= 6
        let mut m = LpModel::new("mix");
        let x = m.add_var("x", 0.0, 6.0, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 2.0);
        m.add_constraint("sum", [(x, 1.0), (y, 1.0)], Sense::Eq, 10.0);
        m.add_constraint("xmin", [(x, 1.0)], Sense::Ge, 3.0);
        m.add_constraint("ymin", [(y, 1.0)], Sense::Ge, 2.0);
        let sol = solve(&m, &opts(), None).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 14.0).abs() < 1e-9);
        assert!((sol.primal[0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let mut m = LpModel::new("inf");
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        m.add_constraint("r", [(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve(&m, &opts(), None).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut m = LpModel::new("unb");
        let x = m.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, 0.0);
        m.add_constraint("r", [(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve(&m, &opts(), None).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn free_variables_and_negative_bounds() {
        // min |x - 3| via t >= x - 3, t >= 3 - x, x free
        let mut m = LpModel::new("abs");
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let t = m.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        m.add_constraint("p", [(t, 1.0), (x, -1.0)], Sense::Ge, -3.0);
        m.add_constraint("n", [(t, 1.0), (x, 1.0)], Sense::Ge, 3.0);
        m.add_constraint("lim", [(x, 1.0)], Sense::Le, -2.0);
        let sol = solve(&m, &opts(), None).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let mut m = LpModel::new("warm");
        let xs: Vec<VarId> = (0..6).map(|i| m.add_var(format!("x{i}"), 0.0, 10.0, -(i as f64) - 1.0)).collect();
        m.add_constraint("cap", xs.iter().map(|&v| (v, 1.0)), Sense::Le, 15.0);
        m.add_constraint("pair", [(xs[4], 1.0), (xs[5], 1.0)], Sense::Le, 12.0);
        let first = solve(&m, &opts(), None).unwrap();
        let again = solve(&m, &opts(), first.basis.as_ref()).unwrap();
        assert_eq!(again.status, Status::Optimal);
        assert_eq!(again.stats.iterations, 0);
        assert!((again.objective - first.objective).abs() < 1e-9);
        m.set_rhs(crate::model::RowId(0), 18.0);
        let shifted = solve(&m, &opts(), first.basis.as_ref()).unwrap();
        let cold = solve(&m, &opts(), None).unwrap();
        assert!((shifted.objective - cold.objective).abs() < 1e-9);
    }

    #[test]
    fn empty_model() {
        let m = LpModel::new("empty");
        let sol = solve(&m, &opts(), None).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.objective, 0.0);
    }
}
