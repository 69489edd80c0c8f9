//! Small dense solves with a condition-number guard.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose 2-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `j x = b`, returning the solution and the condition number of `j`.
pub fn solve_guarded(j: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<(DVector<f64>, f64)> {
    if j.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateDesign(format!("{what}: non-finite entries")));
    }
    let cond = condition_number(j);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateDesign(format!("{what}: condition number {cond:.3e} exceeds {MAX_CONDITION:e}")));
    }
    let x = j
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::DegenerateDesign(format!("{what}: singular system")))?;
    Ok((x, cond))
}

pub fn inverse_guarded(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, f64)> {
    let cond = condition_number(m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateDesign(format!("{what}: condition number {cond:.3e} exceeds {MAX_CONDITION:e}")));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateDesign(format!("{what}: singular matrix")))?;
    Ok((inv, cond))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Accumulates `w * a b'` into `acc`.
#[inline]
pub(crate) fn add_outer(acc: &mut DMatrix<f64>, w: f64, a: &[f64], b: &[f64]) {
    for (i, ai) in a.iter().enumerate() {
        let wa = w * ai;
        for (j, bj) in b.iter().enumerate() {
            acc[(i, j)] += wa * bj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_system_is_degenerate() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(solve_guarded(&j, &b, "t"), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn well_posed_solve() {
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let (x, cond) = solve_guarded(&j, &b, "t").unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(cond > 1.0 && cond < 10.0);
    }
}
