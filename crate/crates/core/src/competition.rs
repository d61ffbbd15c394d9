//! Competitive per-observation weighting.
//!
//! Every model `k` is scored on every observation `i` by its squared error. The raw weight
//! `alpha[i][k]` is a softmax of `-kappa * se[i][k] / c_i`, where `c_i` is the row's best error
//! (floored at `c_floor`), so each row sums to one and the best model receives the largest share.
//! Raw weights are then averaged over each observation's neighborhood (`alpha_bar`) and the
//! weight used in training is `alpha_hat = alpha * alpha_bar^gamma`, which suppresses isolated
//! points won against the consensus of their neighbors.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::dataset::format_float;
use crate::error::{ClsmError, Result};
use crate::neighbors::NeighborIndex;
use crate::scalar::Scalar;

/// Exponents below this are clamped before `exp`.
pub const MIN_EXPONENT: f64 = -700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(deny_unknown_fields)]
pub struct CompetitionConfig<T> {
    pub kappa: T,
    pub gamma: T,
    /// `None` selects `ceil(0.02 * S)` clamped to `[3, 50]`.
    #[serde(default)]
    pub n_neighbors: Option<usize>,
    pub c_floor: T,
}

impl<T: Scalar> Default for CompetitionConfig<T> {
    fn default() -> Self {
        Self {
            kappa: T::lit(5.0),
            gamma: T::lit(2.0),
            n_neighbors: None,
            c_floor: T::lit(1e-12),
        }
    }
}

impl<T: Scalar> CompetitionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= T::zero()) || !self.kappa.is_finite() {
            return Err(ClsmError::config("kappa must be finite and >= 0"));
        }
        if !(self.gamma >= T::zero()) || !self.gamma.is_finite() {
            return Err(ClsmError::config("gamma must be finite and >= 0"));
        }
        if !(self.c_floor > T::zero()) {
            return Err(ClsmError::config("c_floor must be > 0"));
        }
        if self.n_neighbors == Some(0) {
            return Err(ClsmError::config("n_neighbors must be >= 1"));
        }
        Ok(())
    }
}

/// `se[i][k] = (y_i - yhat_{i,k})^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredErrorMatrix<T> {
    se: Array2<T>,
}

impl<T: Scalar> SquaredErrorMatrix<T> {
    pub fn new(se: Array2<T>) -> Result<Self> {
        if se.ncols() == 0 {
            return Err(ClsmError::config("squared error matrix needs at least one model column"));
        }
        if se.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(ClsmError::NonFinite("squared errors must be finite and non-negative".into()));
        }
        Ok(Self { se })
    }

    /// Builds the matrix from targets (length S) and per-model predictions (S x Q).
    pub fn from_predictions(targets: ArrayView1<'_, T>, predictions: ArrayView2<'_, T>) -> Result<Self> {
        if predictions.nrows() != targets.len() {
            return Err(ClsmError::Dimension {
                expected: targets.len(),
                found: predictions.nrows(),
            });
        }
        let mut se = predictions.to_owned();
        Zip::from(se.rows_mut()).and(targets).for_each(|mut row, &y| {
            row.mapv_inplace(|p| (y - p) * (y - p));
        });
        Self::new(se)
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.se.view()
    }

    pub fn n_obs(&self) -> usize {
        self.se.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.se.ncols()
    }

    /// Row-wise `c_i = max(min_k se[i][k], floor)`.
    pub fn best_errors(&self, floor: T) -> Array1<T> {
        self.se
            .rows()
            .into_iter()
            .map(|row| row.iter().copied().fold(T::infinity(), T::min).max(floor))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WeightMatrix<T> {
    pub alpha: Array2<T>,
    pub alpha_bar: Array2<T>,
    pub alpha_hat: Array2<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn compute(se: &SquaredErrorMatrix<T>, idx: &NeighborIndex, cfg: &CompetitionConfig<T>) -> Result<Self> {
        let alpha = compute_raw_weights(se, cfg);
        let alpha_bar = smooth_weights(alpha.view(), idx)?;
        let alpha_hat = combine_weights(alpha.view(), alpha_bar.view(), cfg.gamma);
        Ok(Self {
            alpha,
            alpha_bar,
            alpha_hat,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.alpha.ncols()
    }

    /// Writes one of the three arrays as CSV with columns `m0..m{Q-1}`.
    pub fn write_csv<W: Write>(&self, which: WeightKind, writer: W) -> Result<()> {
        let m = match which {
            WeightKind::Raw => &self.alpha,
            WeightKind::Smoothed => &self.alpha_bar,
            WeightKind::Combined => &self.alpha_hat,
        };
        let mut w = std::io::BufWriter::new(writer);
        let header: Vec<String> = (0..m.ncols()).map(|k| format!("m{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Raw,
    Smoothed,
    Combined,
}

/// Softmax over models of `-kappa * se / c_i`, shifted by the row maximum before exponentiation.
pub fn compute_raw_weights<T: Scalar>(se: &SquaredErrorMatrix<T>, cfg: &CompetitionConfig<T>) -> Array2<T> {
    let c = se.best_errors(cfg.c_floor);
    let min_exp = T::lit(MIN_EXPONENT);
    let mut alpha = Array2::zeros(se.se.raw_dim());
    Zip::from(alpha.rows_mut())
        .and(se.se.rows())
        .and(&c)
        .for_each(|mut out, row, &ci| {
            let exps: Vec<T> = row.iter().map(|&e| -cfg.kappa * e / ci).collect();
            let top = exps.iter().copied().fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for (o, &x) in out.iter_mut().zip(&exps) {
                *o = (x - top).max(min_exp).exp();
                total = total + *o;
            }
            out.mapv_inplace(|v| v / total);
        });
    alpha
}

/// Neighborhood mean of each model's raw weight.
pub fn smooth_weights<T: Scalar>(alpha: ArrayView2<'_, T>, idx: &NeighborIndex) -> Result<Array2<T>> {
    if idx.n_obs() != alpha.nrows() {
        return Err(ClsmError::Dimension {
            expected: alpha.nrows(),
            found: idx.n_obs(),
        });
    }
    let n = T::from_count(idx.n_neighbors());
    let mut out = Array2::zeros(alpha.raw_dim());
    for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        for &j in idx.row(i) {
            row.zip_mut_with(&alpha.row(j), |acc, &a| *acc = *acc + a);
        }
        row.mapv_inplace(|v| v / n);
    }
    Ok(out)
}

/// Elementwise `alpha * alpha_bar^gamma`, with `0^0 = 1`.
pub fn combine_weights<T: Scalar>(alpha: ArrayView2<'_, T>, alpha_bar: ArrayView2<'_, T>, gamma: T) -> Array2<T> {
    let mut out = alpha.to_owned();
    Zip::from(&mut out).and(alpha_bar).for_each(|a, &b| {
        let factor = if gamma == T::zero() { T::one() } else { b.powf(gamma) };
        *a = *a * factor;
    });
    out
}

/// `(1/S) * sum_i w_i r_i^2`.
pub fn weighted_mse<T: Scalar>(residuals: ArrayView1<'_, T>, weights: ArrayView1<'_, T>) -> Result<T> {
    if residuals.len() != weights.len() {
        return Err(ClsmError::Dimension {
            expected: residuals.len(),
            found: weights.len(),
        });
    }
    if residuals.is_empty() {
        return Ok(T::zero());
    }
    let total = residuals
        .iter()
        .zip(weights.iter())
        .fold(T::zero(), |acc, (&r, &w)| acc + w * r * r);
    Ok(total / T::from_count(residuals.len()))
}

/// Row-wise argmax with ties resolved toward the lower model index.
pub fn assign_regimes<T: Scalar>(alpha_bar: ArrayView2<'_, T>) -> Vec<usize> {
    alpha_bar
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
