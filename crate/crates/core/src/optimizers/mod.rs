//! Parameter optimizers: the jittered, clipped Newton method and Adam.

pub mod adam;
pub mod newton;

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClsmError, Result};
use crate::regressors::WeightedLossReport;
use crate::scalar::Scalar;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use newton::{clip, newton_step, NewtonConfig, NewtonStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig<T> {
    Newton(NewtonConfig<T>),
    Adam(AdamConfig<T>),
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerConfig::Newton(c) => c.validate(),
            OptimizerConfig::Adam(c) => c.validate(),
        }
    }

    pub fn max_iters(&self) -> usize {
        match self {
            OptimizerConfig::Newton(c) => c.max_iters,
            OptimizerConfig::Adam(c) => c.max_epochs,
        }
    }

    pub fn with_max_iters(&self, iters: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            OptimizerConfig::Newton(c) => c.max_iters = iters,
            OptimizerConfig::Adam(c) => c.max_epochs = iters,
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome<T> {
    /// Lowest-loss parameters seen, including the starting point.
    pub theta: Array1<T>,
    pub loss: T,
    pub iterations: usize,
    /// Gradient infinity-norm fell below tolerance.
    pub converged: bool,
}

/// Iterates the configured optimizer until `max_iters` or `|g|_inf < grad_tol` and returns the
/// best-seen parameters. A non-finite loss aborts with the iteration number.
pub fn optimize<T, F, R>(mut objective: F, theta0: Array1<T>, cfg: &OptimizerConfig<T>, rng: &mut R) -> Result<OptimizeOutcome<T>>
where
    T: Scalar,
    F: FnMut(&Array1<T>) -> Result<WeightedLossReport<T>>,
    R: Rng + ?Sized,
{
    let mut theta = theta0;
    let mut adam_state = match cfg {
        OptimizerConfig::Adam(_) => Some(AdamState::new(theta.len())),
        OptimizerConfig::Newton(_) => None,
    };
    let grad_tol = match cfg {
        OptimizerConfig::Newton(c) => c.grad_tol,
        OptimizerConfig::Adam(_) => T::zero(),
    };
    let max_iters = cfg.max_iters();
    let mut best: Option<(Array1<T>, T)> = None;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let report = objective(&theta)?;
        if !report.loss.is_finite() || report.gradient.iter().any(|g| !g.is_finite()) {
            return Err(ClsmError::NonFinite(format!("objective at iteration {iterations}")));
        }
        if best.as_ref().is_none_or(|(_, l)| report.loss < *l) {
            best = Some((theta.clone(), report.loss));
        }
        let gnorm = report.gradient.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if gnorm < grad_tol {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        match cfg {
            OptimizerConfig::Newton(c) => {
                let hessian = report
                    .hessian
                    .as_ref()
                    .ok_or_else(|| ClsmError::config("Newton optimizer needs an objective with a Hessian"))?;
                theta = newton_step(theta.view(), report.gradient.view(), hessian.view(), c, rng)?.theta;
            }
            OptimizerConfig::Adam(c) => {
                adam_state
                    .as_mut()
                    .expect("adam state")
                    .update(&mut theta, report.gradient.view(), c)?;
            }
        }
        iterations += 1;
    }
    let (theta, loss) = best.expect("objective evaluated at least once");
    Ok(OptimizeOutcome {
        theta,
        loss,
        iterations,
        converged,
    })
}
