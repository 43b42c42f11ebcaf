//! Central-difference gradient oracle.
//!
//! Every manual backprop in this crate is validated against this oracle.
//! It is intentionally dumb: perturb one parameter, re-evaluate the loss,
//! never share code with the analytic path.

use super::Matrix;
use crate::scalar::Scalar;

/// Central differences (f(p+h) - f(p-h)) / 2h per parameter element.
pub fn finite_diff_grad<S, F>(mut loss: F, params: &[Matrix<S>], h: S) -> Vec<Matrix<S>>
where
    S: Scalar,
    F: FnMut(&[Matrix<S>]) -> S,
{
    assert!(h > S::zero(), "step must be positive");
    let two_h = h + h;
    let mut work: Vec<Matrix<S>> = params.to_vec();
    let mut grads = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let (rows, cols) = params[pi].shape();
        let mut grad = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let orig = work[pi].get(r, c);
                work[pi].set(r, c, orig + h);
                let up = loss(&work);
                work[pi].set(r, c, orig - h);
                let down = loss(&work);
                work[pi].set(r, c, orig);
                grad.set(r, c, (up - down) / two_h);
            }
        }
        grads.push(grad);
    }
    grads
}

/// True when two gradient sets agree within `rtol` (relative, with a small
/// absolute floor for near-zero entries).
pub fn grads_close<S: Scalar>(analytic: &[Matrix<S>], numeric: &[Matrix<S>], rtol: S) -> bool {
    let atol = S::from_f64_lossy(1e-7);
    if analytic.len() != numeric.len() {
        return false;
    }
    analytic.iter().zip(numeric).all(|(a, n)| {
        a.shape() == n.shape()
            && a.values().iter().zip(n.values()).all(|(&x, &y)| {
                let denom = x.abs().max(y.abs());
                (x - y).abs() <= atol.max(rtol * denom)
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Mat = Matrix<f64>;

    #[test]
    fn quadratic_derivative() {
        let params = vec![Mat::from_rows(&[vec![3.0]]).unwrap()];
        let grads = finite_diff_grad(|p| p[0].get(0, 0).powi(2), &params, 1e-4);
        assert!((grads[0].get(0, 0) - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let params = vec![Mat::from_rows(&[vec![1.0, -2.0], vec![0.5, 9.0]]).unwrap()];
        let grads = finite_diff_grad(|_| 7.25, &params, 1e-5);
        assert!(grads[0].values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn multi_matrix_gradients() {
        // f = sum(a) * sum(b): df/da_ij = sum(b), df/db_ij = sum(a).
        let a = Mat::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Mat::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let sum = |m: &Mat| m.values().iter().sum::<f64>();
        let grads = finite_diff_grad(|p| sum(&p[0]) * sum(&p[1]), &[a, b], 1e-5);
        for &g in grads[0].values() {
            assert!((g - 7.0).abs() < 1e-8);
        }
        for &g in grads[1].values() {
            assert!((g - 3.0).abs() < 1e-8);
        }
    }
}
