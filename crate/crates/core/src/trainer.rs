//! Concurrent competitive training of `Q` specialists.
//!
//! Each outer iteration predicts with every model, recomputes the competitive weights and then
//! runs a few optimizer steps per model on its weighted loss with the weights held fixed. Models
//! are optimized in parallel with independent random streams, so results do not depend on the
//! thread schedule.

use std::fmt;
use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competition::{assign_regimes, CompetitionConfig, SquaredErrorMatrix, WeightMatrix};
use crate::dataset::{format_float, Dataset, ScalingParams};
use crate::error::{ClsmError, Result};
use crate::features::FeatureSpec;
use crate::neighbors::{default_neighbor_count, nearest, NeighborIndex, SelfPolicy};
use crate::optimizers::{optimize, AdamConfig, AdamState, NewtonConfig, OptimizerConfig};
use crate::regressors::{Activation, Family, LinearModel, MlpModel, Specialist};
use crate::scalar::Scalar;

/// Coefficients below this magnitude are omitted from equation reports.
pub const DISPLAY_THRESHOLD: f64 = 3e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig<T> {
    Linear {
        lambda: T,
        #[serde(default = "default_init_scale")]
        init_scale: f64,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        activation: Activation,
    },
}

fn default_init_scale() -> f64 {
    0.1
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

impl<T: Scalar> ModelConfig<T> {
    pub fn family(&self) -> Family {
        match self {
            ModelConfig::Linear { .. } => Family::Linear,
            ModelConfig::Mlp { .. } => Family::Mlp,
        }
    }

    pub fn default_linear() -> Self {
        ModelConfig::Linear {
            lambda: T::lit(1e-3),
            init_scale: default_init_scale(),
        }
    }

    pub fn default_mlp() -> Self {
        ModelConfig::Mlp {
            hidden: default_hidden(),
            activation: Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig<T> {
    pub q_models: usize,
    pub model: ModelConfig<T>,
    #[serde(default)]
    pub competition: CompetitionConfig<T>,
    pub optimizer: OptimizerConfig<T>,
    pub outer_iters: usize,
    /// Optimizer steps per model per outer iteration; `None` means 5 (Newton) or 50 (Adam).
    #[serde(default)]
    pub inner_steps: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Outer iterations with unchanged labels and a flat loss required to stop early.
    pub patience: usize,
    /// Relative composite-loss change treated as flat.
    pub loss_tol: T,
}

impl<T: Scalar> EnsembleConfig<T> {
    pub fn linear(q_models: usize, lambda: T) -> Self {
        Self {
            q_models,
            model: ModelConfig::Linear {
                lambda,
                init_scale: default_init_scale(),
            },
            competition: CompetitionConfig::default(),
            optimizer: OptimizerConfig::Newton(NewtonConfig::default()),
            outer_iters: 300,
            inner_steps: None,
            trials: 1,
            seed: 0,
            patience: 10,
            loss_tol: T::lit(1e-6),
        }
    }

    pub fn mlp(q_models: usize, hidden: Vec<usize>) -> Self {
        Self {
            q_models,
            model: ModelConfig::Mlp {
                hidden,
                activation: Activation::Tanh,
            },
            competition: CompetitionConfig::default(),
            optimizer: OptimizerConfig::Adam(AdamConfig::default()),
            outer_iters: 200,
            inner_steps: None,
            trials: 1,
            seed: 0,
            patience: 10,
            loss_tol: T::lit(1e-6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_models == 0 {
            return Err(ClsmError::config("q_models must be >= 1"));
        }
        if self.trials == 0 {
            return Err(ClsmError::config("trials must be >= 1"));
        }
        if self.outer_iters == 0 {
            return Err(ClsmError::config("outer_iters must be >= 1"));
        }
        if self.inner_steps == Some(0) {
            return Err(ClsmError::config("inner_steps must be >= 1"));
        }
        if !(self.loss_tol >= T::zero()) {
            return Err(ClsmError::config("loss_tol must be >= 0"));
        }
        self.competition.validate()?;
        self.optimizer.validate()?;
        match &self.model {
            ModelConfig::Linear { lambda, init_scale } => {
                if !(*lambda >= T::zero()) || !lambda.is_finite() {
                    return Err(ClsmError::config("lambda must be finite and >= 0"));
                }
                if !(*init_scale > 0.0) || !init_scale.is_finite() {
                    return Err(ClsmError::config("init_scale must be finite and > 0"));
                }
            }
            ModelConfig::Mlp { hidden, .. } => {
                if hidden.contains(&0) {
                    return Err(ClsmError::config("hidden layer sizes must be >= 1"));
                }
                if matches!(self.optimizer, OptimizerConfig::Newton(_)) {
                    return Err(ClsmError::config(
                        "optimizer: the mlp family has no Hessian; use kind \"adam\"",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn effective_inner_steps(&self) -> usize {
        self.inner_steps.unwrap_or(match self.optimizer {
            OptimizerConfig::Newton(_) => 5,
            OptimizerConfig::Adam(_) => 50,
        })
    }
}

/// Observations together with the matrices each family consumes.
#[derive(Debug, Clone)]
pub struct TrainingSet<T> {
    data: Dataset<T>,
    features: Option<FeatureSpec>,
    family: Family,
    scaling: ScalingParams<T>,
    standardized: Array2<T>,
    model_inputs: Array2<T>,
}

impl<T: Scalar> TrainingSet<T> {
    /// Linear models read the feature library evaluated on raw inputs; networks read
    /// standardized inputs. Neighborhoods are always built in standardized input space.
    pub fn new(data: Dataset<T>, features: Option<FeatureSpec>, family: Family) -> Result<Self> {
        let scaling = ScalingParams::fit(data.inputs());
        let standardized = scaling.apply(data.inputs());
        let model_inputs = match family {
            Family::Linear => {
                let spec = features
                    .as_ref()
                    .ok_or_else(|| ClsmError::config("features: the linear family needs a feature library"))?;
                spec.eval_matrix(data.inputs())?
            }
            Family::Mlp => standardized.clone(),
        };
        Ok(Self {
            data,
            features,
            family,
            scaling,
            standardized,
            model_inputs,
        })
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn features(&self) -> Option<&FeatureSpec> {
        self.features.as_ref()
    }

    pub fn n_obs(&self) -> usize {
        self.data.n_obs()
    }

    pub fn model_inputs(&self) -> ArrayView2<'_, T> {
        self.model_inputs.view()
    }

    pub fn standardized_inputs(&self) -> ArrayView2<'_, T> {
        self.standardized.view()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitResult<T> {
    pub models: Vec<Specialist<T>>,
    pub weights: WeightMatrix<T>,
    pub labels: Vec<usize>,
    /// Hard-assignment composite MSE after every weight computation.
    pub loss_history: Vec<T>,
    pub trial_seed: u64,
    /// Training MSE of every trial run by `run_trials` (`None` for failed trials).
    pub trial_mse: Vec<Option<T>>,
    pub iterations: usize,
    pub converged: bool,
    pub config: EnsembleConfig<T>,
    pub features: Option<FeatureSpec>,
    pub scaling: ScalingParams<T>,
    pub n_neighbors: usize,
    /// Raw training inputs, used to route new points to regimes.
    #[serde(with = "crate::serde_util::array2")]
    pub inputs: Array2<T>,
}

impl<T: Scalar> FitResult<T> {
    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn family(&self) -> Family {
        self.config.model.family()
    }

    /// Hard-assignment composite MSE on the training data.
    pub fn training_mse(&self) -> T {
        *self.loss_history.last().expect("non-empty loss history")
    }

    pub fn regime_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_models()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(reader))?)
    }

    /// `index,label,abar_0..abar_{Q-1},y_hat` with hard composite predictions at the training inputs.
    pub fn write_assignments_csv<W: Write>(&self, writer: W) -> Result<()> {
        let y_hat = composite_predict(self, self.inputs.view(), PredictMode::Hard)?;
        let mut w = std::io::BufWriter::new(writer);
        let mut header = vec!["index".to_string(), "label".to_string()];
        header.extend((0..self.n_models()).map(|k| format!("abar_{k}")));
        header.push("y_hat".into());
        writeln!(w, "{}", header.join(","))?;
        for (i, row) in self.weights.alpha_bar.rows().into_iter().enumerate() {
            let mut cells = vec![i.to_string(), self.labels[i].to_string()];
            cells.extend(row.iter().map(|&v| format_float(v)));
            cells.push(format_float(y_hat[i]));
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    fn model_inputs(&self, raw: ArrayView2<'_, T>) -> Result<Array2<T>> {
        match self.family() {
            Family::Linear => self
                .features
                .as_ref()
                .ok_or_else(|| ClsmError::config("linear fit without a feature library"))?
                .eval_matrix(raw),
            Family::Mlp => Ok(self.scaling.apply(raw)),
        }
    }
}

fn predict_all<T: Scalar>(models: &[Specialist<T>], inputs: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let cols = models
        .par_iter()
        .map(|m| m.predict(inputs))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Array2::zeros((inputs.nrows(), models.len()));
    for (k, c) in cols.into_iter().enumerate() {
        out.column_mut(k).assign(&c);
    }
    Ok(out)
}

fn hard_mse<T: Scalar>(se: &SquaredErrorMatrix<T>, labels: &[usize]) -> T {
    let v = se.view();
    let total: T = labels.iter().enumerate().map(|(i, &l)| v[[i, l]]).sum();
    total / T::from_count(labels.len().max(1))
}

fn model_stream(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    rng
}

fn init_model<T: Scalar>(set: &TrainingSet<T>, cfg: &ModelConfig<T>, rng: &mut ChaCha8Rng) -> Result<Specialist<T>> {
    match cfg {
        ModelConfig::Linear { lambda, init_scale } => {
            let unpenalized = set.features.as_ref().and_then(FeatureSpec::bias_index);
            Ok(Specialist::Linear(LinearModel::random(
                set.model_inputs.ncols(),
                *lambda,
                unpenalized,
                *init_scale,
                rng,
            )))
        }
        ModelConfig::Mlp { hidden, activation } => {
            let mut sizes = vec![set.model_inputs.ncols()];
            sizes.extend(hidden);
            sizes.push(1);
            Ok(Specialist::Mlp(MlpModel::random(&sizes, *activation, rng)?))
        }
    }
}

/// Per-model mutable training state owned by one worker at a time.
struct Worker<T> {
    model: Specialist<T>,
    rng: ChaCha8Rng,
    adam: Option<AdamState<T>>,
    order: Vec<usize>,
    cursor: usize,
}

impl<T: Scalar> Worker<T> {
    fn train(&mut self, set: &TrainingSet<T>, weights: ArrayView1<'_, T>, cfg: &EnsembleConfig<T>) -> Result<()> {
        let steps = cfg.effective_inner_steps();
        match (&mut self.model, &cfg.optimizer) {
            (Specialist::Mlp(m), OptimizerConfig::Adam(adam)) => {
                let state = self.adam.get_or_insert_with(|| AdamState::new(m.n_params()));
                let s = set.n_obs();
                let batch = if adam.batch_size == 0 { s } else { adam.batch_size.min(s) };
                let mut theta = m.params();
                for _ in 0..steps {
                    if self.cursor + batch > self.order.len() {
                        self.order.shuffle(&mut self.rng);
                        self.cursor = 0;
                    }
                    let idx = &self.order[self.cursor..self.cursor + batch];
                    self.cursor += batch;
                    let x = set.model_inputs.select(Axis(0), idx);
                    let y = set.data.targets().select(Axis(0), idx);
                    let w = weights.select(Axis(0), idx);
                    m.set_params(theta.view())?;
                    let report = m.loss_grad(x.view(), y.view(), w.view())?;
                    if !report.loss.is_finite() || report.gradient.iter().any(|g| !g.is_finite()) {
                        return Err(ClsmError::NonFinite("network loss during training".into()));
                    }
                    state.update(&mut theta, report.gradient.view(), adam)?;
                }
                m.set_params(theta.view())
            }
            (model, opt) => {
                let x = set.model_inputs.view();
                let y = set.data.targets();
                let inner = opt.with_max_iters(steps);
                let template = model.clone();
                let out = optimize(
                    |theta: &Array1<T>| {
                        let mut m = template.clone();
                        m.set_params(theta.view())?;
                        m.objective(x, y, weights)
                    },
                    model.params(),
                    &inner,
                    &mut self.rng,
                )?;
                model.set_params(out.theta.view())
            }
        }
    }
}

/// One competitive training run from the given seed.
pub fn fit_ensemble<T: Scalar>(set: &TrainingSet<T>, cfg: &EnsembleConfig<T>, seed: u64) -> Result<FitResult<T>> {
    cfg.validate()?;
    if cfg.model.family() != set.family {
        return Err(ClsmError::config(format!(
            "family: training set prepared for {:?} but config requests {:?}",
            set.family,
            cfg.model.family()
        )));
    }
    let s = set.n_obs();
    let q = cfg.q_models;
    let n_neighbors = cfg.competition.n_neighbors.unwrap_or_else(|| default_neighbor_count(s));
    let index = NeighborIndex::build(set.standardized.view(), n_neighbors, SelfPolicy::Include)?;

    let mut workers = (0..q)
        .map(|k| {
            let mut rng = model_stream(seed, k);
            let model = init_model(set, &cfg.model, &mut rng)?;
            Ok(Worker {
                model,
                rng,
                adam: None,
                order: (0..s).collect(),
                cursor: usize::MAX / 2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let targets = set.data.targets();
    let evaluate = |workers: &[Worker<T>]| -> Result<(WeightMatrix<T>, Vec<usize>, T)> {
        let models: Vec<Specialist<T>> = workers.iter().map(|w| w.model.clone()).collect();
        let preds = predict_all(&models, set.model_inputs.view())?;
        let se = SquaredErrorMatrix::from_predictions(targets, preds.view())?;
        let weights = WeightMatrix::compute(&se, &index, &cfg.competition)?;
        let labels = assign_regimes(weights.alpha_bar.view());
        let mse = hard_mse(&se, &labels);
        Ok((weights, labels, mse))
    };

    let mut loss_history = Vec::with_capacity(cfg.outer_iters + 1);
    let mut prev_labels: Option<Vec<usize>> = None;
    let mut stable = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.outer_iters {
        let (weights, labels, mse) = evaluate(&workers)?;
        let flat = loss_history
            .last()
            .is_some_and(|&prev: &T| (mse - prev).abs() <= cfg.loss_tol * prev.abs().max(T::min_positive_value()));
        if prev_labels.as_ref() == Some(&labels) && flat {
            stable += 1;
        } else {
            stable = 0;
        }
        loss_history.push(mse);
        if stable >= cfg.patience {
            converged = true;
            break;
        }
        workers
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(k, w)| w.train(set, weights.alpha_hat.column(k), cfg))?;
        prev_labels = Some(labels);
        iterations += 1;
    }
    let (weights, labels, mse) = evaluate(&workers)?;
    if !converged {
        loss_history.push(mse);
    }
    Ok(FitResult {
        models: workers.into_iter().map(|w| w.model).collect(),
        weights,
        labels,
        loss_history,
        trial_seed: seed,
        trial_mse: vec![Some(mse)],
        iterations,
        converged,
        config: cfg.clone(),
        features: set.features.clone(),
        scaling: set.scaling.clone(),
        n_neighbors,
        inputs: set.data.inputs().to_owned(),
    })
}

/// Runs `cfg.trials` fits with seeds `cfg.seed, cfg.seed + 1, ...` and keeps the lowest
/// training MSE (earliest trial on ties). Failed trials are skipped.
pub fn run_trials<T: Scalar>(set: &TrainingSet<T>, cfg: &EnsembleConfig<T>) -> Result<FitResult<T>> {
    cfg.validate()?;
    let outcomes: Vec<Result<FitResult<T>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| fit_ensemble(set, cfg, cfg.seed.wrapping_add(t)))
        .collect();
    let mut failures = Vec::new();
    let mut trial_mse = Vec::with_capacity(outcomes.len());
    let mut best: Option<FitResult<T>> = None;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(fit) => {
                let mse = fit.training_mse();
                trial_mse.push(Some(mse));
                if best.as_ref().is_none_or(|b| mse < b.training_mse()) {
                    best = Some(fit);
                }
            }
            Err(e) if e.is_config() => return Err(e),
            Err(e) => {
                trial_mse.push(None);
                failures.push(format!("trial {t} (seed {}): {e}", cfg.seed.wrapping_add(t as u64)));
            }
        }
    }
    let mut best = best.ok_or(ClsmError::AllTrialsFailed(failures))?;
    best.trial_mse = trial_mse;
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    /// Model that owns the nearest training observation.
    #[default]
    Hard,
    /// Blend weighted by raw weights averaged over the nearest training observations.
    Soft,
}

/// Predicts at raw inputs `x_new` (same columns as the training data).
pub fn composite_predict<T: Scalar>(fit: &FitResult<T>, x_new: ArrayView2<'_, T>, mode: PredictMode) -> Result<Array1<T>> {
    if x_new.ncols() != fit.inputs.ncols() {
        return Err(ClsmError::Dimension {
            expected: fit.inputs.ncols(),
            found: x_new.ncols(),
        });
    }
    let preds = predict_all(&fit.models, fit.model_inputs(x_new)?.view())?;
    let reference = fit.scaling.apply(fit.inputs.view());
    let query = fit.scaling.apply(x_new);
    let q = fit.n_models();
    let out: Vec<T> = (0..x_new.nrows())
        .into_par_iter()
        .map(|i| {
            if q == 1 {
                return preds[[i, 0]];
            }
            match mode {
                PredictMode::Hard => {
                    let j = nearest(reference.view(), query.row(i), 1, None)[0];
                    preds[[i, fit.labels[j]]]
                }
                PredictMode::Soft => {
                    let nn = nearest(reference.view(), query.row(i), fit.n_neighbors, None);
                    let weights = fit.weights.alpha.select(Axis(0), &nn).mean_axis(Axis(0)).expect("neighbors");
                    weights.dot(&preds.row(i))
                }
            }
        })
        .collect();
    Ok(Array1::from(out))
}

pub fn composite_mse<T: Scalar>(fit: &FitResult<T>, data: &Dataset<T>, mode: PredictMode) -> Result<T> {
    let pred = composite_predict(fit, data.inputs(), mode)?;
    let r = &data.targets() - &pred;
    Ok(r.dot(&r) / T::from_count(data.n_obs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEquation {
    pub model: usize,
    pub n_obs: usize,
    /// `(feature name, coefficient)` for every coefficient at or above the display threshold.
    pub terms: Vec<(String, f64)>,
}

impl ModelEquation {
    pub fn coefficient(&self, name: &str) -> f64 {
        self.terms.iter().find(|(n, _)| n == name).map_or(0.0, |(_, c)| *c)
    }
}

/// Regime boundaries along one input variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub variable: String,
    /// Midpoints between adjacent runs of equal labels after sorting by the variable.
    pub run_midpoints: Vec<f64>,
    /// Single threshold that best separates the labels.
    pub dominant_split: Option<f64>,
    /// Fraction of observations on the wrong side of `dominant_split`.
    pub split_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationReport {
    pub threshold: f64,
    pub equations: Vec<ModelEquation>,
    pub counts: Vec<usize>,
    pub breakpoints: Vec<Breakpoint>,
}

impl EquationReport {
    pub fn is_global(&self) -> bool {
        self.equations.len() == 1
    }

    pub fn breakpoint(&self, variable: &str) -> Option<&Breakpoint> {
        self.breakpoints.iter().find(|b| b.variable == variable)
    }
}

impl fmt::Display for EquationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_global() {
            writeln!(f, "global model ({} observations)", self.counts[0])?;
        } else {
            writeln!(f, "{} specialized models", self.equations.len())?;
        }
        writeln!(f, "coefficients with |value| < {:e} omitted", self.threshold)?;
        for eq in &self.equations {
            let rhs = if eq.terms.is_empty() {
                "0".to_string()
            } else {
                eq.terms
                    .iter()
                    .map(|(name, c)| if name == "bias" { format!("{c:+.6}") } else { format!("{c:+.6} {name}") })
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(f, "model {} ({} observations): y = {rhs}", eq.model, eq.n_obs)?;
        }
        if !self.is_global() {
            for b in &self.breakpoints {
                match b.dominant_split {
                    Some(v) => write!(f, "breakpoint {} = {v:.6} (misassigned {:.2}%)", b.variable, 100.0 * b.split_error)?,
                    None => write!(f, "breakpoint {}: none", b.variable)?,
                }
                if b.run_midpoints.len() > 1 {
                    write!(f, ", {} label changes", b.run_midpoints.len())?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Sorts by `x` and scans for label changes.
pub fn scan_breakpoints(variable: &str, x: &[f64], labels: &[usize], n_labels: usize) -> Breakpoint {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut run_midpoints = Vec::new();
    let mut run_max = f64::NAN;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        run_max = if run_max.is_nan() { x[a] } else { run_max.max(x[a]) };
        if labels[a] != labels[b] {
            run_midpoints.push(0.5 * (run_max + x[b]));
            run_max = f64::NAN;
        }
    }

    let s = order.len();
    let mut total = vec![0usize; n_labels];
    for &l in labels {
        total[l] += 1;
    }
    let mut below = vec![0usize; n_labels];
    let mut best: Option<(usize, f64)> = None;
    for w in order.windows(2) {
        below[labels[w[0]]] += 1;
        if x[w[0]] == x[w[1]] {
            continue;
        }
        let keep_below = below.iter().copied().max().unwrap_or(0);
        let keep_above = (0..n_labels).map(|k| total[k] - below[k]).max().unwrap_or(0);
        let errors = s - keep_below - keep_above;
        if best.is_none_or(|(e, _)| errors < e) {
            best = Some((errors, 0.5 * (x[w[0]] + x[w[1]])));
        }
    }
    let (split_error, dominant_split) = match best {
        Some((e, v)) if n_labels > 1 && total.iter().filter(|&&c| c > 0).count() > 1 => (e as f64 / s as f64, Some(v)),
        _ => (0.0, None),
    };
    Breakpoint {
        variable: variable.to_string(),
        run_midpoints,
        dominant_split,
        split_error,
    }
}

/// Thresholded coefficient table of a linear fit with per-variable breakpoints.
pub fn report_equations<T: Scalar>(fit: &FitResult<T>, threshold: f64) -> Result<EquationReport> {
    let spec = match (fit.family(), &fit.features) {
        (Family::Linear, Some(spec)) => spec,
        (Family::Linear, None) => return Err(ClsmError::config("linear fit without a feature library")),
        (Family::Mlp, _) => return Err(ClsmError::UnsupportedFamily("mlp".into())),
    };
    let names = spec.names();
    let counts = fit.regime_counts();
    let equations = fit
        .models
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let lin = m
                .as_linear()
                .ok_or_else(|| ClsmError::UnsupportedFamily("mlp".into()))?;
            let terms = names
                .iter()
                .zip(lin.beta.iter())
                .map(|(n, &b)| (n.clone(), b.to_f64_lossy()))
                .filter(|(_, b)| b.abs() >= threshold)
                .collect();
            Ok(ModelEquation {
                model: k,
                n_obs: counts[k],
                terms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let breakpoints = spec
        .variables()
        .iter()
        .enumerate()
        .map(|(j, var)| {
            let x: Vec<f64> = fit.inputs.column(j).iter().map(|v| v.to_f64_lossy()).collect();
            scan_breakpoints(var, &x, &fit.labels, fit.n_models())
        })
        .collect();
    Ok(EquationReport {
        threshold,
        equations,
        counts,
        breakpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_piecewise_sinusoid;
    use ndarray::array;

    #[test]
    fn scan_finds_single_change() {
        let x = [0.0, 3.0, 1.0, 2.0];
        let labels = [0, 1, 0, 1];
        let b = scan_breakpoints("t", &x, &labels, 2);
        assert_eq!(b.run_midpoints, vec![1.5]);
        assert_eq!(b.dominant_split, Some(1.5));
        assert_eq!(b.split_error, 0.0);
    }

    #[test]
    fn dominant_split_ignores_isolated_flips() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let mut labels: Vec<usize> = x.iter().map(|&v| usize::from(v > 9.5)).collect();
        labels[3] = 1;
        let b = scan_breakpoints("x", &x, &labels, 2);
        assert_eq!(b.run_midpoints.len(), 3);
        assert_eq!(b.dominant_split, Some(9.5));
        assert!((b.split_error - 0.05).abs() < 1e-12);
    }

    #[test]
    fn single_label_has_no_split() {
        let b = scan_breakpoints("x", &[1.0, 2.0], &[0, 0], 2);
        assert!(b.run_midpoints.is_empty());
        assert_eq!(b.dominant_split, None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnsembleConfig::<f64>::linear(0, 1e-3);
        assert!(cfg.validate().is_err());
        cfg.q_models = 2;
        assert!(cfg.validate().is_ok());
        let mut mlp = EnsembleConfig::<f64>::mlp(2, vec![4]);
        mlp.optimizer = OptimizerConfig::Newton(NewtonConfig::default());
        assert!(mlp.validate().is_err());
        assert_eq!(EnsembleConfig::<f64>::mlp(1, vec![4]).effective_inner_steps(), 50);
        assert_eq!(cfg.effective_inner_steps(), 5);
    }

    #[test]
    fn report_rejects_mlp() {
        let data = Dataset::new(array![[0.0], [1.0], [2.0], [3.0]], array![0.0, 1.0, 0.5, 0.2]).unwrap();
        let set = TrainingSet::new(data, None, Family::Mlp).unwrap();
        let mut cfg = EnsembleConfig::<f64>::mlp(1, vec![3]);
        cfg.outer_iters = 2;
        cfg.inner_steps = Some(2);
        let fit = fit_ensemble(&set, &cfg, 0).unwrap();
        assert!(matches!(report_equations(&fit, DISPLAY_THRESHOLD), Err(ClsmError::UnsupportedFamily(_))));
    }

    #[test]
    fn linear_family_needs_features() {
        let data = Dataset::new(array![[0.0], [1.0]], array![0.0, 1.0]).unwrap();
        assert!(TrainingSet::new(data, None, Family::Linear).is_err());
    }

    #[test]
    fn single_model_report_is_global_and_predictions_agree() {
        let b = gen_piecewise_sinusoid::<f64>(3).unwrap();
        let set = TrainingSet::new(b.data, b.features, Family::Linear).unwrap();
        let mut cfg = EnsembleConfig::linear(1, 1e-3);
        cfg.outer_iters = 20;
        let fit = fit_ensemble(&set, &cfg, 5).unwrap();
        let report = report_equations(&fit, DISPLAY_THRESHOLD).unwrap();
        assert!(report.is_global());
        assert!(report.to_string().contains("global model"));
        let hard = composite_predict(&fit, set.data().inputs(), PredictMode::Hard).unwrap();
        let soft = composite_predict(&fit, set.data().inputs(), PredictMode::Soft).unwrap();
        assert_eq!(hard, soft);
    }
}
