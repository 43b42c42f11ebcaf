//! SGD with momentum.

use super::{Matrix, NumericsError};
use crate::scalar::Scalar;

/// Momentum-SGD state: v <- mu*v - eta*g; p <- p + v.
#[derive(Debug, Clone)]
pub struct OptimizerState<S: Scalar> {
    learning_rate: S,
    momentum: S,
    velocities: Vec<Matrix<S>>,
}

impl<S: Scalar> OptimizerState<S> {
    pub fn new(learning_rate: S, momentum: S) -> Self {
        assert!(learning_rate > S::zero(), "learning rate must be positive");
        assert!(
            momentum >= S::zero() && momentum < S::one(),
            "momentum must lie in [0, 1)"
        );
        Self {
            learning_rate,
            momentum,
            velocities: Vec::new(),
        }
    }

    pub fn learning_rate(&self) -> S {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, learning_rate: S) {
        assert!(learning_rate > S::zero(), "learning rate must be positive");
        self.learning_rate = learning_rate;
    }

    /// One update step on every parameter matrix. Velocities are allocated
    /// lazily on the first call and their shapes are pinned from then on.
    pub fn step(
        &mut self,
        params: &mut [Matrix<S>],
        grads: &[Matrix<S>],
    ) -> Result<(), NumericsError> {
        if params.len() != grads.len() {
            return Err(NumericsError::ParamCountMismatch {
                params: params.len(),
                grads: grads.len(),
            });
        }
        if self.velocities.is_empty() {
            self.velocities = params
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect();
        }
        for ((p, g), v) in params.iter().zip(grads).zip(&self.velocities) {
            if p.shape() != g.shape() || p.shape() != v.shape() {
                return Err(NumericsError::DimensionMismatch {
                    op: "sgd_step",
                    lhs: p.shape(),
                    rhs: g.shape(),
                });
            }
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocities) {
            *v = v.scale(self.momentum).sub(&g.scale(self.learning_rate))?;
            *p = p.add(v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Mat = Matrix<f64>;

    #[test]
    fn no_momentum_unit_rate_zeroes_params_when_grad_equals_param() {
        let mut opt = OptimizerState::new(1.0, 0.0);
        let mut params = vec![Mat::from_rows(&[vec![2.0, -3.0]]).unwrap()];
        let grads = params.clone();
        opt.step(&mut params, &grads).unwrap();
        assert_eq!(params[0].values(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_grad_leaves_params_unchanged() {
        let mut opt = OptimizerState::new(0.5, 0.0);
        let mut params = vec![Mat::from_rows(&[vec![1.0, 2.0]]).unwrap()];
        let grads = vec![Mat::zeros(1, 2)];
        let before = params.clone();
        opt.step(&mut params, &grads).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn quadratic_descent_is_monotone() {
        // Loss 0.5*p^2, grad = p; closed form p_{k+1} = (1 - eta) p_k.
        let eta = 0.3;
        let mut opt = OptimizerState::new(eta, 0.0);
        let mut params = vec![Mat::from_rows(&[vec![4.0]]).unwrap()];
        let mut prev = params[0].get(0, 0).abs();
        for _ in 0..2 {
            let grads = params.clone();
            opt.step(&mut params, &grads).unwrap();
            let cur = params[0].get(0, 0).abs();
            assert!(cur < prev);
            prev = cur;
        }
        // Matches the closed form exactly.
        assert!((params[0].get(0, 0) - 4.0 * (1.0 - eta) * (1.0 - eta)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut opt = OptimizerState::<f64>::new(0.1, 0.0);
        let mut params = vec![Mat::zeros(2, 2)];
        let grads = vec![Mat::zeros(2, 3)];
        assert!(opt.step(&mut params, &grads).is_err());
    }
}
