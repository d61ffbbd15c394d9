//! Linear models over a feature library with a smoothed l1 penalty.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WeightedLossReport;
use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

/// Smoothing constant in `sqrt(b^2 + mu)`, the differentiable stand-in for `|b|`.
pub const SMOOTH_ABS_MU: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    /// One coefficient per feature column; the bias enters as the coefficient of the bias column.
    #[serde(rename = "coefficients", with = "crate::serde_util::array1")]
    pub beta: Array1<T>,
    pub lambda: T,
    /// Column excluded from the penalty (the bias feature).
    #[serde(default)]
    pub unpenalized: Option<usize>,
}

impl<T: Scalar> LinearModel<T> {
    pub fn zeros(n_features: usize, lambda: T, unpenalized: Option<usize>) -> Self {
        Self {
            beta: Array1::zeros(n_features),
            lambda,
            unpenalized,
        }
    }

    /// Coefficients drawn from `U(-scale, scale)`.
    pub fn random<R: Rng + ?Sized>(
        n_features: usize,
        lambda: T,
        unpenalized: Option<usize>,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let beta = (0..n_features)
            .map(|_| T::lit(rng.random_range(-scale..scale)))
            .collect();
        Self {
            beta,
            lambda,
            unpenalized,
        }
    }

    pub fn n_params(&self) -> usize {
        self.beta.len()
    }

    pub fn predict(&self, features: ArrayView2<'_, T>) -> Result<Array1<T>> {
        if features.ncols() != self.beta.len() {
            return Err(ClsmError::Dimension {
                expected: self.beta.len(),
                found: features.ncols(),
            });
        }
        Ok(features.dot(&self.beta))
    }

    fn penalized(&self, j: usize) -> bool {
        self.unpenalized != Some(j)
    }

    /// Weighted data misfit plus `lambda * sum sqrt(b_j^2 + mu)` over penalized columns, with
    /// exact gradient and Hessian.
    pub fn objective(
        &self,
        features: ArrayView2<'_, T>,
        targets: ArrayView1<'_, T>,
        weights: ArrayView1<'_, T>,
    ) -> Result<WeightedLossReport<T>> {
        let s = features.nrows();
        if targets.len() != s || weights.len() != s {
            return Err(ClsmError::Dimension {
                expected: s,
                found: if targets.len() != s { targets.len() } else { weights.len() },
            });
        }
        let pred = self.predict(features)?;
        let inv_s = T::one() / T::from_count(s.max(1));
        let two = T::lit(2.0);
        let residuals = &targets - &pred;
        let wr = &residuals * &weights;
        let mut loss = residuals.iter().zip(wr.iter()).fold(T::zero(), |acc, (&r, &q)| acc + r * q) * inv_s;
        let mut gradient = features.t().dot(&wr) * (-two * inv_s);

        let mut weighted = features.to_owned();
        for (mut row, &w) in weighted.axis_iter_mut(Axis(0)).zip(weights.iter()) {
            row.mapv_inplace(|v| v * w);
        }
        let mut hessian: Array2<T> = features.t().dot(&weighted) * (two * inv_s);

        let mu = T::lit(SMOOTH_ABS_MU);
        for (j, &b) in self.beta.iter().enumerate() {
            if !self.penalized(j) {
                continue;
            }
            let root = (b * b + mu).sqrt();
            loss = loss + self.lambda * root;
            gradient[j] = gradient[j] + self.lambda * b / root;
            hessian[[j, j]] = hessian[[j, j]] + self.lambda * mu / (root * root * root);
        }
        // exact symmetry for downstream factorization
        for i in 0..hessian.nrows() {
            for j in (i + 1)..hessian.ncols() {
                let m = (hessian[[i, j]] + hessian[[j, i]]) / two;
                hessian[[i, j]] = m;
                hessian[[j, i]] = m;
            }
        }
        Ok(WeightedLossReport {
            loss,
            gradient,
            hessian: Some(hessian),
        })
    }

    /// Coefficients with magnitude below `threshold` shown as zero; storage is untouched.
    pub fn thresholded(&self, threshold: T) -> Array1<T> {
        self.beta.mapv(|b| if b.abs() < threshold { T::zero() } else { b })
    }
}

/// Free-function form of [`LinearModel::predict`].
pub fn predict_linear<T: Scalar>(m: &LinearModel<T>, features: ArrayView2<'_, T>) -> Result<Array1<T>> {
    m.predict(features)
}

pub fn linear_objective<T: Scalar>(
    m: &LinearModel<T>,
    features: ArrayView2<'_, T>,
    targets: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
) -> Result<WeightedLossReport<T>> {
    m.objective(features, targets, weights)
}
