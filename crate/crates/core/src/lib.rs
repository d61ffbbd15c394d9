//! Competitive learning of specialized regression models.
//!
//! A set of `Q` regressors is trained concurrently on one dataset. Each observation is shared
//! out among the models according to how well each one predicts it, the shares are smoothed over
//! neighborhoods in input space, and every model then minimizes its own weighted loss. Models end
//! up specializing on distinct functional regimes, which makes piecewise laws (switched dynamics,
//! regime-dependent trends) recoverable as a set of compact equations.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate root
//! fix it to `f64`, with `*F32` variants for single precision.
//!
//! ```no_run
//! use clsm::{problems, run_trials, report_equations, EnsembleConfig, Family, TrainingSet};
//!
//! let bench = problems::gen_piecewise_sinusoid::<f64>(0)?;
//! let set = TrainingSet::new(bench.data, bench.features, Family::Linear)?;
//! let mut cfg = EnsembleConfig::linear(2, 2e-3);
//! cfg.trials = 5;
//! let fit = run_trials(&set, &cfg)?;
//! println!("{}", report_equations(&fit, clsm::DISPLAY_THRESHOLD)?);
//! # Ok::<(), clsm::ClsmError>(())
//! ```

pub mod competition;
pub mod dataset;
pub mod error;
pub mod features;
pub mod linalg;
pub mod neighbors;
pub mod optimizers;
pub mod problems;
pub mod regressors;
pub mod scalar;
mod serde_util;
pub mod trainer;

pub use competition::{
    assign_regimes, combine_weights, compute_raw_weights, smooth_weights, weighted_mse, WeightKind,
};
pub use dataset::{load_dataset, standardize, Observation};
pub use error::{ClsmError, Result};
pub use features::{build_feature_library, Factor, FeatureSpec, Term};
pub use neighbors::{default_neighbor_count, NeighborIndex, SelfPolicy};
pub use optimizers::{adam_step, newton_step, optimize, OptimizeOutcome};
pub use regressors::{Activation, Family};
pub use scalar::Scalar;
pub use trainer::{
    composite_mse, composite_predict, fit_ensemble, report_equations, run_trials, Breakpoint, EquationReport,
    ModelEquation, PredictMode, DISPLAY_THRESHOLD,
};

pub type Dataset = dataset::Dataset<f64>;
pub type ScalingParams = dataset::ScalingParams<f64>;
pub type FeatureMatrix = features::FeatureMatrix<f64>;
pub type CompetitionConfig = competition::CompetitionConfig<f64>;
pub type SquaredErrorMatrix = competition::SquaredErrorMatrix<f64>;
pub type WeightMatrix = competition::WeightMatrix<f64>;
pub type LinearModel = regressors::LinearModel<f64>;
pub type MlpModel = regressors::MlpModel<f64>;
pub type Specialist = regressors::Specialist<f64>;
pub type WeightedLossReport = regressors::WeightedLossReport<f64>;
pub type NewtonConfig = optimizers::NewtonConfig<f64>;
pub type AdamConfig = optimizers::AdamConfig<f64>;
pub type AdamState = optimizers::AdamState<f64>;
pub type OptimizerConfig = optimizers::OptimizerConfig<f64>;
pub type ModelConfig = trainer::ModelConfig<f64>;
pub type EnsembleConfig = trainer::EnsembleConfig<f64>;
pub type TrainingSet = trainer::TrainingSet<f64>;
pub type FitResult = trainer::FitResult<f64>;

pub type DatasetF32 = dataset::Dataset<f32>;
pub type EnsembleConfigF32 = trainer::EnsembleConfig<f32>;
pub type TrainingSetF32 = trainer::TrainingSet<f32>;
pub type FitResultF32 = trainer::FitResult<f32>;
