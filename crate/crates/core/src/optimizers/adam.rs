//! Bias-corrected Adam.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(deny_unknown_fields)]
pub struct AdamConfig<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    /// Iteration cap for full-batch [`crate::optimizers::optimize`].
    pub max_epochs: usize,
    /// Mini-batch size used by the ensemble trainer; `0` means full batch.
    pub batch_size: usize,
}

impl<T: Scalar> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(1e-3),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            max_epochs: 1000,
            batch_size: 128,
        }
    }
}

impl<T: Scalar> AdamConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: T| b > T::zero() && b < T::one();
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(ClsmError::config("beta1 and beta2 must lie in (0, 1)"));
        }
        if !(self.learning_rate > T::zero()) || !(self.epsilon > T::zero()) {
            return Err(ClsmError::config("learning_rate and epsilon must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T> {
    #[serde(with = "crate::serde_util::array1")]
    pub first_moment: Array1<T>,
    #[serde(with = "crate::serde_util::array1")]
    pub second_moment: Array1<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n_params: usize) -> Self {
        Self {
            first_moment: Array1::zeros(n_params),
            second_moment: Array1::zeros(n_params),
            step: 0,
        }
    }

    /// Applies one update to `theta` in place.
    pub fn update(&mut self, theta: &mut Array1<T>, gradient: ArrayView1<'_, T>, cfg: &AdamConfig<T>) -> Result<()> {
        let n = theta.len();
        if gradient.len() != n || self.first_moment.len() != n {
            return Err(ClsmError::Dimension {
                expected: n,
                found: if gradient.len() != n { gradient.len() } else { self.first_moment.len() },
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let c1 = one - cfg.beta1.powi(t);
        let c2 = one - cfg.beta2.powi(t);
        for j in 0..n {
            let g = gradient[j];
            let m = cfg.beta1 * self.first_moment[j] + (one - cfg.beta1) * g;
            let v = cfg.beta2 * self.second_moment[j] + (one - cfg.beta2) * g * g;
            self.first_moment[j] = m;
            self.second_moment[j] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            theta[j] = theta[j] - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step<T: Scalar>(
    theta: ArrayView1<'_, T>,
    gradient: ArrayView1<'_, T>,
    state: &AdamState<T>,
    cfg: &AdamConfig<T>,
) -> Result<(Array1<T>, AdamState<T>)> {
    let mut theta = theta.to_owned();
    let mut state = state.clone();
    state.update(&mut theta, gradient, cfg)?;
    Ok((theta, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let cfg = AdamConfig::<f64>::default();
        let (theta, state) = adam_step(array![1.0, -2.0].view(), array![0.0, 0.0].view(), &AdamState::new(2), &cfg).unwrap();
        assert_eq!(theta, array![1.0, -2.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { learning_rate: 0.01, ..AdamConfig::<f64>::default() };
        let (theta, _) = adam_step(array![0.0].view(), array![1.0].view(), &AdamState::new(1), &cfg).unwrap();
        // m_hat = v_hat = 1 at t = 1
        let expected = -0.01 / (1.0 + 1e-8);
        assert!((theta[0] - expected).abs() < 1e-15);
        let (neg, _) = adam_step(array![0.0].view(), array![-1.0].view(), &AdamState::new(1), &cfg).unwrap();
        assert_eq!(neg[0], -theta[0]);
    }

    #[test]
    fn validates_betas() {
        let bad = AdamConfig { beta1: 1.0, ..AdamConfig::<f64>::default() };
        assert!(bad.validate().is_err());
        assert!(AdamConfig::<f64>::default().validate().is_ok());
    }
}
