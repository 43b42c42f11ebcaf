//! Small dense linear solves (LU with partial pivoting).

use super::{Matrix, NumericsError};
use crate::scalar::Scalar;

/// Solves `a * x = b` for square `a` and column vector `b`.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>, NumericsError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(NumericsError::DimensionMismatch {
            op: "solve",
            lhs: a.shape(),
            rhs: (b.len(), 1),
        });
    }
    let mut lu = a.clone();
    let mut x: Vec<S> = b.to_vec();
    for col in 0..n {
        // Pivot.
        let mut pivot = col;
        let mut pivot_val = lu.get(col, col).abs();
        for r in col + 1..n {
            let v = lu.get(r, col).abs();
            if v > pivot_val {
                pivot = r;
                pivot_val = v;
            }
        }
        if pivot_val == S::zero() {
            return Err(NumericsError::SingularSystem);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = lu.get(col, c);
                lu.set(col, c, lu.get(pivot, c));
                lu.set(pivot, c, tmp);
            }
            x.swap(col, pivot);
        }
        // Eliminate below.
        let diag = lu.get(col, col);
        for r in col + 1..n {
            let factor = lu.get(r, col) / diag;
            if factor == S::zero() {
                continue;
            }
            for c in col..n {
                let v = lu.get(r, c) - factor * lu.get(col, c);
                lu.set(r, c, v);
            }
            let adjust = factor * x[col];
            x[r] -= adjust;
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let mut acc = x[col];
        for c in col + 1..n {
            acc -= lu.get(col, c) * x[c];
        }
        x[col] = acc / lu.get(col, col);
    }
    Ok(x)
}
