//! Newton steps with a randomly jittered Hessian diagonal and componentwise step saturation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClsmError, Result};
use crate::linalg::{ldlt_solve, pseudo_solve};
use crate::scalar::Scalar;

/// Fresh jitter draws attempted after the first failed factorization.
pub const MAX_JITTER_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig<T> {
    /// Ceiling of the uniform diagonal jitter. `None` uses `1e-6 * (1 + max|diag H|)` per step.
    #[serde(default)]
    pub eps_max: Option<T>,
    /// Bound on `|delta_j|` for every parameter.
    pub clip_limit: T,
    pub max_iters: usize,
    pub grad_tol: T,
}

impl<T: Scalar> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            eps_max: None,
            clip_limit: T::lit(0.5),
            max_iters: 200,
            grad_tol: T::lit(1e-8),
        }
    }
}

impl<T: Scalar> NewtonConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.eps_max {
            if !(e >= T::zero()) || !e.is_finite() {
                return Err(ClsmError::config("eps_max must be finite and >= 0"));
            }
        }
        if !(self.clip_limit > T::zero()) {
            return Err(ClsmError::config("clip_limit must be > 0"));
        }
        if !(self.grad_tol > T::zero()) {
            return Err(ClsmError::config("grad_tol must be > 0"));
        }
        Ok(())
    }

    pub fn jitter_ceiling(&self, hessian: ArrayView2<'_, T>) -> T {
        self.eps_max.unwrap_or_else(|| {
            let diag = hessian.diag().iter().fold(T::zero(), |m, v| m.max(v.abs()));
            T::lit(1e-6) * (T::one() + diag)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep<T> {
    pub theta: Array1<T>,
    /// Applied change, so that `theta = theta_prev - delta`.
    pub delta: Array1<T>,
    /// Diagonal jitter of the successful (or final) attempt.
    pub jitter: Array1<T>,
    /// True when every factorization failed and the pseudo-inverse was used.
    pub used_pseudo_solve: bool,
}

/// Componentwise saturation to `[-limit, limit]`.
pub fn clip<T: Scalar>(delta: &mut Array1<T>, limit: T) {
    delta.mapv_inplace(|d| d.max(-limit).min(limit));
}

fn sample_jitter<T: Scalar, R: Rng + ?Sized>(n: usize, ceiling: T, rng: &mut R) -> Array1<T> {
    let hi = ceiling.to_f64_lossy();
    (0..n)
        .map(|_| if hi > 0.0 { T::lit(rng.random_range(0.0..hi)) } else { T::zero() })
        .collect()
}

pub fn newton_step<T: Scalar, R: Rng + ?Sized>(
    theta: ArrayView1<'_, T>,
    gradient: ArrayView1<'_, T>,
    hessian: ArrayView2<'_, T>,
    cfg: &NewtonConfig<T>,
    rng: &mut R,
) -> Result<NewtonStep<T>> {
    let n = theta.len();
    if gradient.len() != n || hessian.nrows() != n || hessian.ncols() != n {
        return Err(ClsmError::Dimension {
            expected: n,
            found: if gradient.len() != n { gradient.len() } else { hessian.nrows() },
        });
    }
    let ceiling = cfg.jitter_ceiling(hessian);
    let mut jitter = Array1::zeros(n);
    let mut solved = None;
    let mut modified = Array2::zeros((n, n));
    for _ in 0..=MAX_JITTER_RETRIES {
        jitter = sample_jitter(n, ceiling, rng);
        modified.assign(&hessian);
        for j in 0..n {
            modified[[j, j]] = modified[[j, j]] + jitter[j];
        }
        if let Some(d) = ldlt_solve(modified.view(), gradient) {
            solved = Some(d);
            break;
        }
    }
    let used_pseudo_solve = solved.is_none();
    let mut delta = match solved {
        Some(d) => d,
        None => pseudo_solve(modified.view(), gradient, T::epsilon() * T::from_count(n.max(1)) * T::lit(16.0)),
    };
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(ClsmError::Singular {
            attempts: MAX_JITTER_RETRIES + 1,
        });
    }
    clip(&mut delta, cfg.clip_limit);
    let theta = &theta - &delta;
    Ok(NewtonStep {
        theta,
        delta,
        jitter,
        used_pseudo_solve,
    })
}
