//! Sparse linear program representation.
//!
//! A model is a list of bounded variables with objective coefficients, a list
//! of rows with a sense and a right-hand side, and a bag of `(row, column,
//! coefficient)` triplets. The objective is always minimized.

use std::fmt;

use crate::error::ModelError;

/// Index of a variable inside an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem `min c'x  s.t.  A x (<=|=|>=) b,  l <= x <= u`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub name: String,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    triplets: Vec<(usize, usize, f64)>,
    /// Constant added to the objective value; not seen by the solver.
    pub objective_offset: f64,
}

impl LpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(&mut self, name: impl Into<String>, sense: Sense, rhs: f64) -> RowId {
        self.rows.push(Row {
            name: name.into(),
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    /// Adds a row together with its coefficients.
    pub fn add_constraint<I>(&mut self, name: impl Into<String>, terms: I, sense: Sense, rhs: f64) -> RowId
    where
        I: IntoIterator<Item = (VarId, f64)>,
    {
        let row = self.add_row(name, sense, rhs);
        for (var, coeff) in terms {
            self.set_coeff(row, var, coeff);
        }
        row
    }

    /// Appends a coefficient. Zero coefficients are dropped; duplicate
    /// `(row, var)` entries are summed when the matrix is assembled.
    pub fn set_coeff(&mut self, row: RowId, var: VarId, coeff: f64) {
        if coeff != 0.0 {
            self.triplets.push((row.0, var.0, coeff));
        }
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &Row {
        &self.rows[id.0]
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Checks the structural invariants: every triplet points at an existing
    /// row and variable, all numbers are finite where they must be, and
    /// `lower <= upper` for every variable.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::InvalidBounds {
                    var: v.name.clone(),
                    index: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::InvalidBounds {
                    var: v.name.clone(),
                    index: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if !v.cost.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("objective coefficient of `{}`", v.name),
                });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("right-hand side of `{}`", r.name),
                });
            }
        }
        for &(i, j, a) in &self.triplets {
            if i >= self.rows.len() {
                return Err(ModelError::DanglingRow { row: i });
            }
            if j >= self.vars.len() {
                return Err(ModelError::DanglingVar { var: j });
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite {
                    what: format!("coefficient ({}, {})", self.rows[i].name, self.vars[j].name),
                });
            }
        }
        Ok(())
    }

    /// Assembles the constraint matrix in compressed column form, summing
    /// duplicate entries and dropping exact zeros.
    pub fn to_csc(&self) -> CscMatrix {
        CscMatrix::from_triplets(self.rows.len(), self.vars.len(), &self.triplets)
    }

    /// Evaluates `A x` for a primal vector.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.rows.len()];
        for &(i, j, a) in &self.triplets {
            act[i] += a * x[j];
        }
        act
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }

    /// Largest violation of any bound or row by `x` (absolute units).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for (r, act) in self.rows.iter().zip(self.row_activities(x)) {
            let viol = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CscMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(_, j, _) in triplets {
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, a) in triplets {
            let k = next[j];
            rows[k] = i;
            vals[k] = a;
            next[j] += 1;
        }
        // sort each column by row and merge duplicates
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let r = scratch[k].0;
                let mut sum = 0.0;
                while k < scratch.len() && scratch[k].0 == r {
                    sum += scratch[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    row_idx.push(r);
                    out_vals.push(sum);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            vals: out_vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.vals[range])
    }

    /// Row-major copy with the same entries.
    pub fn transpose(&self) -> CscMatrix {
        let mut col_ptr = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            col_ptr[i + 1] += 1;
        }
        for i in 0..self.nrows {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        // scanning columns in order keeps every output column sorted
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                row_idx[next[i]] = j;
                vals[next[i]] = self.vals[k];
                next[i] += 1;
            }
        }
        CscMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            col_ptr,
            row_idx,
            vals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_triplets_are_summed() {
        let mut m = LpModel::new("dup");
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        let r = m.add_row("r", Sense::Le, 1.0);
        m.set_coeff(r, x, 1.0);
        m.set_coeff(r, x, 2.0);
        let a = m.to_csc();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.col(0).1, &[3.0]);
    }

    #[test]
    fn validate_rejects_crossed_bounds() {
        let mut m = LpModel::new("bad");
        m.add_var("x", 2.0, 1.0, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::InvalidBounds { .. })));
    }

    #[test]
    fn validate_rejects_dangling_triplet() {
        let mut m = LpModel::new("bad");
        let x = m.add_var("x", 0.0, 1.0, 0.0);
        m.set_coeff(RowId(3), x, 1.0);
        assert!(matches!(m.validate(), Err(ModelError::DanglingRow { row: 3 })));
    }

    #[test]
    fn transpose_round_trips() {
        let trip = vec![(0, 0, 1.0), (1, 0, 2.0), (0, 2, -1.0), (2, 1, 4.0)];
        let a = CscMatrix::from_triplets(3, 3, &trip);
        assert_eq!(a.transpose().transpose(), a);
    }
}
