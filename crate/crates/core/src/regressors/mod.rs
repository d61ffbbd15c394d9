//! Specialized-model families: linear feature-library models and fully connected networks.

pub mod linear;
pub mod mlp;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;

pub use linear::{linear_objective, predict_linear, LinearModel};
pub use mlp::{mlp_weighted_loss_grad, predict_mlp, Activation, DenseLayer, MlpModel};

/// Loss value with its derivatives with respect to the flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLossReport<T> {
    pub loss: T,
    pub gradient: Array1<T>,
    pub hessian: Option<Array2<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Mlp,
}

/// One trained specialist. Linear models consume feature-library rows, networks consume
/// standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Specialist<T> {
    Linear(LinearModel<T>),
    Mlp(MlpModel<T>),
}

impl<T: Scalar> Specialist<T> {
    pub fn family(&self) -> Family {
        match self {
            Specialist::Linear(_) => Family::Linear,
            Specialist::Mlp(_) => Family::Mlp,
        }
    }

    pub fn predict(&self, inputs: ArrayView2<'_, T>) -> Result<Array1<T>> {
        match self {
            Specialist::Linear(m) => m.predict(inputs),
            Specialist::Mlp(m) => m.predict(inputs),
        }
    }

    pub fn params(&self) -> Array1<T> {
        match self {
            Specialist::Linear(m) => m.beta.clone(),
            Specialist::Mlp(m) => m.params(),
        }
    }

    pub fn set_params(&mut self, theta: ArrayView1<'_, T>) -> Result<()> {
        match self {
            Specialist::Linear(m) => {
                if theta.len() != m.beta.len() {
                    return Err(crate::error::ClsmError::Dimension {
                        expected: m.beta.len(),
                        found: theta.len(),
                    });
                }
                m.beta.assign(&theta);
                Ok(())
            }
            Specialist::Mlp(m) => m.set_params(theta),
        }
    }

    pub fn objective(
        &self,
        inputs: ArrayView2<'_, T>,
        targets: ArrayView1<'_, T>,
        weights: ArrayView1<'_, T>,
    ) -> Result<WeightedLossReport<T>> {
        match self {
            Specialist::Linear(m) => m.objective(inputs, targets, weights),
            Specialist::Mlp(m) => m.loss_grad(inputs, targets, weights),
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel<T>> {
        match self {
            Specialist::Linear(m) => Some(m),
            Specialist::Mlp(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn json_carries_family_tag() {
        let s = Specialist::Linear(LinearModel { beta: array![1.0, -2.0], lambda: 0.1, unpenalized: Some(1) });
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["family"], "linear");
        let back: Specialist<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);

        let m = Specialist::Mlp(MlpModel::<f64>::zeros(&[2, 3, 1], Activation::Tanh).unwrap());
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["family"], "mlp");
        assert_eq!(v["layer_sizes"], serde_json::json!([2, 3, 1]));
        let back: Specialist<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
