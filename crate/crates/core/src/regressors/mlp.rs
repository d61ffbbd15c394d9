//! Fully connected networks with an affine output layer and manual backpropagation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::WeightedLossReport;
use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-z).exp()),
            Activation::Relu => z.max(T::zero()),
        }
    }

    /// Derivative expressed through the activation output `a = sigma(z)`.
    fn derivative_from_output<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Sigmoid => a * (T::one() - a),
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// `out x in` weight matrix and bias of length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> DenseLayer<T> {
    fn forward(&self, input: ArrayView2<'_, T>) -> Array2<T> {
        input.dot(&self.weights.t()) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    /// Hidden layers followed by the single-output affine layer.
    pub layers: Vec<DenseLayer<T>>,
    pub activation: Activation,
}

impl<T: Scalar> MlpModel<T> {
    /// Validates that layer shapes chain and end in a single output.
    pub fn from_layers(layers: Vec<DenseLayer<T>>, activation: Activation) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| ClsmError::config("network needs at least an output layer"))?;
        if last.weights.nrows() != 1 {
            return Err(ClsmError::Dimension {
                expected: 1,
                found: last.weights.nrows(),
            });
        }
        for l in &layers {
            if l.bias.len() != l.weights.nrows() {
                return Err(ClsmError::Dimension {
                    expected: l.weights.nrows(),
                    found: l.bias.len(),
                });
            }
        }
        for pair in layers.windows(2) {
            if pair[1].weights.ncols() != pair[0].weights.nrows() {
                return Err(ClsmError::Dimension {
                    expected: pair[0].weights.nrows(),
                    found: pair[1].weights.ncols(),
                });
            }
        }
        Ok(Self { layers, activation })
    }

    /// Glorot-uniform weights, zero biases. `sizes` runs from input width to the output width 1.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(ClsmError::config("layer sizes need an input and an output width, all > 0"));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_fn((fan_out, fan_in), |_| T::lit(rng.random_range(-limit..limit))),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self::from_layers(layers, activation)
    }

    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer {
                weights: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Self::from_layers(layers, activation)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(|l| l.weights.nrows()))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Array1<T> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        Array1::from(out)
    }

    pub fn set_params(&mut self, theta: ArrayView1<'_, T>) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(ClsmError::Dimension {
                expected: self.n_params(),
                found: theta.len(),
            });
        }
        let mut it = theta.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = it.next().expect("length checked");
            }
            for b in l.bias.iter_mut() {
                *b = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn check_width(&self, x: ArrayView2<'_, T>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(ClsmError::Dimension {
                expected: self.input_width(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input first; the final entry is the `S x 1` output.
    fn forward_all(&self, x: ArrayView2<'_, T>) -> Vec<Array2<T>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let n_hidden = self.hidden_layers();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts[li].view());
            if li < n_hidden {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
        self.check_width(x)?;
        let out = self.forward_all(x).pop().expect("output layer");
        Ok(out.column(0).to_owned())
    }

    /// `(1/S) sum_i w_i (y_i - yhat_i)^2` and its gradient in [`MlpModel::params`] order.
    pub fn loss_grad(
        &self,
        x: ArrayView2<'_, T>,
        targets: ArrayView1<'_, T>,
        weights: ArrayView1<'_, T>,
    ) -> Result<WeightedLossReport<T>> {
        self.check_width(x)?;
        let s = x.nrows();
        if targets.len() != s || weights.len() != s {
            return Err(ClsmError::Dimension {
                expected: s,
                found: if targets.len() != s { targets.len() } else { weights.len() },
            });
        }
        let acts = self.forward_all(x);
        let out = acts.last().expect("output layer").column(0);
        let inv_s = T::one() / T::from_count(s.max(1));
        let two = T::lit(2.0);
        let mut loss = T::zero();
        // Weights this small only feed subnormals into backpropagation; their gradient is dropped.
        let cutoff = T::min_positive_value().sqrt();
        let mut delta = Array2::<T>::zeros((s, 1));
        for i in 0..s {
            let r = out[i] - targets[i];
            loss = loss + weights[i] * r * r;
            if weights[i] >= cutoff {
                delta[[i, 0]] = two * inv_s * weights[i] * r;
            }
        }
        loss = loss * inv_s;

        let mut grads: Vec<(Array2<T>, Array1<T>)> = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let input = &acts[li];
            let gw = delta.t().dot(input);
            let gb = delta.sum_axis(Axis(0));
            grads.push((gw, gb));
            if li > 0 {
                let mut back = delta.dot(&self.layers[li].weights);
                let act = self.activation;
                back.zip_mut_with(input, |d, &a| *d = *d * act.derivative_from_output(a));
                delta = back;
            }
        }
        grads.reverse();
        let mut gradient = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            gradient.extend(gw.iter().copied());
            gradient.extend(gb.iter().copied());
        }
        Ok(WeightedLossReport {
            loss,
            gradient: Array1::from(gradient),
            hessian: None,
        })
    }
}

pub fn predict_mlp<T: Scalar>(m: &MlpModel<T>, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
    m.predict(x)
}

pub fn mlp_weighted_loss_grad<T: Scalar>(
    m: &MlpModel<T>,
    x: ArrayView2<'_, T>,
    targets: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
) -> Result<WeightedLossReport<T>> {
    m.loss_grad(x, targets, weights)
}

#[derive(Serialize, Deserialize)]
struct MlpDoc<T> {
    activation: Activation,
    layer_sizes: Vec<usize>,
    parameters: Vec<T>,
}

impl<T: Scalar> Serialize for MlpModel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MlpDoc {
            activation: self.activation,
            layer_sizes: self.layer_sizes(),
            parameters: self.params().to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for MlpModel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = MlpDoc::<T>::deserialize(deserializer)?;
        let mut m = MlpModel::zeros(&doc.layer_sizes, doc.activation).map_err(serde::de::Error::custom)?;
        m.set_params(ArrayView1::from(&doc.parameters))
            .map_err(serde::de::Error::custom)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let m = MlpModel::<f64>::zeros(&[3, 4, 1], Activation::Tanh).unwrap();
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        assert_eq!(m.predict(x.view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn single_tanh_unit() {
        let layers = vec![
            DenseLayer { weights: array![[1.0]], bias: array![0.0] },
            DenseLayer { weights: array![[1.0]], bias: array![0.0] },
        ];
        let m = MlpModel::from_layers(layers, Activation::Tanh).unwrap();
        let y = m.predict(array![[0.0], [0.7]].view()).unwrap();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 0.7f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn one_two_one_matches_scalar_forward() {
        let layers = vec![
            DenseLayer { weights: array![[0.3], [-0.2]], bias: array![0.1, 0.05] },
            DenseLayer { weights: array![[0.7, -0.4]], bias: array![0.02] },
        ];
        let m = MlpModel::from_layers(layers, Activation::Tanh).unwrap();
        for &x in &[-1.5, 0.0, 0.4, 2.0] {
            let h1 = (0.3 * x + 0.1f64).tanh();
            let h2 = (-0.2 * x + 0.05f64).tanh();
            let want = 0.7 * h1 - 0.4 * h2 + 0.02;
            let got = m.predict(array![[x]].view()).unwrap()[0];
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MlpModel::<f64>::random(&[2, 3, 1], Activation::Tanh, &mut rng).unwrap();
        let x = array![[0.1, 0.2], [-0.3, 1.0], [2.0, -1.0]];
        let y = array![1.0, -1.0, 0.5];
        let r = m.loss_grad(x.view(), y.view(), Array1::zeros(3).view()).unwrap();
        assert_eq!(r.loss, 0.0);
        assert!(r.gradient.iter().all(|&g| g == 0.0));
        let r = m.loss_grad(x.view(), y.view(), Array1::ones(3).view()).unwrap();
        let pred = m.predict(x.view()).unwrap();
        let mse = (&pred - &y).mapv(|v| v * v).mean().unwrap();
        assert!((r.loss - mse).abs() < 1e-15);
    }

    #[test]
    fn params_round_trip_and_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = MlpModel::<f64>::random(&[3, 5, 4, 1], Activation::Tanh, &mut rng).unwrap();
        assert_eq!(m.n_params(), 3 * 5 + 5 + 5 * 4 + 4 + 4 + 1);
        assert_eq!(m.hidden_layers(), 2);
        let mut other = MlpModel::<f64>::zeros(&[3, 5, 4, 1], Activation::Tanh).unwrap();
        other.set_params(m.params().view()).unwrap();
        assert_eq!(other, m);
        let json = serde_json::to_string(&m).unwrap();
        let back: MlpModel<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_shapes() {
        let layers = vec![
            DenseLayer { weights: array![[1.0, 2.0]], bias: array![0.0] },
            DenseLayer { weights: array![[1.0, 1.0]], bias: array![0.0] },
        ];
        assert!(MlpModel::from_layers(layers, Activation::Tanh).is_err());
        let m = MlpModel::<f64>::zeros(&[2, 1], Activation::Tanh).unwrap();
        assert!(m.predict(array![[1.0]].view()).is_err());
    }
}
