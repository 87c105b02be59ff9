//! Geometric-mean equilibration with power-of-two factors.
//!
//! Scaled matrix is `R A C`; a scaled variable is `x / C_j`, a scaled dual is
//! `y_i / R_i`. Power-of-two factors keep the scaling exact in floating point.

use crate::model::CscMatrix;

const PASSES: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

impl Scaling {
    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            row: vec![1.0; m],
            col: vec![1.0; n],
        }
    }

    pub fn compute(a: &CscMatrix) -> Self {
        let (m, n) = (a.nrows, a.ncols);
        let mut s = Self::identity(m, n);
        if a.nnz() == 0 {
            return s;
        }
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        let mut prev_ratio = f64::INFINITY;
        for _ in 0..PASSES {
            rmin.fill(f64::INFINITY);
            rmax.fill(0.0);
            for j in 0..n {
                let (rows, vals) = a.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    let x = v.abs() * s.col[j];
                    rmin[i] = rmin[i].min(x);
                    rmax[i] = rmax[i].max(x);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    s.row[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
                }
            }
            let mut ratio: f64 = 1.0;
            for j in 0..n {
                let (rows, vals) = a.col(j);
                if rows.is_empty() {
                    continue;
                }
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for (&i, &v) in rows.iter().zip(vals) {
                    let x = v.abs() * s.row[i];
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                s.col[j] = 1.0 / (lo * hi).sqrt();
                ratio = ratio.max(hi / lo);
            }
            if ratio > 0.9 * prev_ratio {
                break;
            }
            prev_ratio = ratio;
        }
        for v in s.row.iter_mut().chain(s.col.iter_mut()) {
            *v = pow2(*v);
        }
        s
    }
}

/// Nearest power of two in log scale.
pub(crate) fn pow2(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round().clamp(-60.0, 60.0) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_are_powers_of_two() {
        let t = vec![(0, 0, 1000.0), (1, 0, 0.001), (0, 1, 3.0), (1, 1, 7e5)];
        let a = CscMatrix::from_triplets(2, 2, &t);
        let s = Scaling::compute(&a);
        for v in s.row.iter().chain(&s.col) {
            assert_eq!(v.log2().fract(), 0.0);
        }
    }

    #[test]
    fn scaling_reduces_spread() {
        let t = vec![(0, 0, 1e4), (1, 0, 1e-2), (0, 1, 1e2), (1, 1, 1e-4)];
        let a = CscMatrix::from_triplets(2, 2, &t);
        let s = Scaling::compute(&a);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for &(i, j, v) in &t {
            let x = v * s.row[i] * s.col[j];
            lo = lo.min(x);
            hi = hi.max(x);
        }
        assert!(hi / lo < 1e8 / 100.0);
    }
}
