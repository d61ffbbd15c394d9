//! Command-line front end: benchmark generation, ensemble fitting, reports and loss landscapes.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use clsm::problems::{self, Benchmark, Subset};
use clsm::trainer::ModelConfig;
use clsm::{
    composite_mse, report_equations, run_trials, Activation, ClsmError, CompetitionConfig, Dataset, EnsembleConfig, Family,
    FeatureSpec, FitResult, OptimizerConfig, PredictMode, TrainingSet, DISPLAY_THRESHOLD,
};
use serde::{Deserialize, Serialize};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

pub const PROBLEMS: [&str; 5] = ["sinusoid", "oscillator1", "oscillator2", "flame_surrogate", "landscape_demo"];

#[derive(Debug, Parser)]
#[command(name = "clsm", version, about = "Competitive learning of specialized models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a benchmark dataset with its ground truth and feature library.
    Generate(GenerateArgs),
    /// Fit an ensemble from a JSON run configuration.
    Fit(FitArgs),
    /// Tabulate the per-sample and mean loss of the demo function over a grid of mu.
    Landscape(LandscapeArgs),
    /// Print the discovered-equation report of a saved fit.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// One of sinusoid, oscillator1, oscillator2, flame_surrogate, landscape_demo.
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Sample count for flame_surrogate.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base training seed; overrides the config's `seed`
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of models; overrides `q_models`
    #[arg(long)]
    pub q: Option<usize>,
    /// Number of restarts; overrides `trials`
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// all, neg or nonneg.
    #[arg(long, default_value = "all")]
    pub subset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 601)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A `fit.json` written by `fit`.
    pub fit: PathBuf,
    #[arg(long, default_value_t = DISPLAY_THRESHOLD)]
    pub threshold: f64,
    /// Also write `report.txt` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Training(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Training(_) => EXIT_TRAINING,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Training(m) => write!(f, "training failed: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ClsmError> for CliError {
    fn from(e: ClsmError) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else if matches!(e, ClsmError::Io(_)) {
            CliError::Other(e.into())
        } else {
            CliError::Training(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Feature library in a run config: a built-in name or an explicit `{variables, terms}` document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureChoice {
    Named(String),
    Explicit(FeatureSpec),
}

impl FeatureChoice {
    fn resolve(&self) -> CliResult<FeatureSpec> {
        match self {
            FeatureChoice::Explicit(spec) => Ok(spec.clone()),
            FeatureChoice::Named(name) => match name.as_str() {
                "trig" => Ok(FeatureSpec::trig_library()),
                "oscillator" => Ok(FeatureSpec::oscillator_library()),
                other => Err(CliError::Config(format!(
                    "features: unknown library {other:?} (expected \"trig\", \"oscillator\" or an object)"
                ))),
            },
        }
    }
}

/// JSON schema of `fit --config`. Relative paths are resolved against the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in problem to generate; mutually exclusive with `data`.
    #[serde(default)]
    pub problem: Option<String>,
    /// CSV dataset with header `x1,...,xn,y`.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Generator seed when `problem` is set.
    #[serde(default)]
    pub data_seed: u64,
    /// Defaults to the problem's library, or `spec.json` beside `data`.
    #[serde(default)]
    pub features: Option<FeatureChoice>,
    /// Holds out this fraction of the data and reports the composite test MSE.
    #[serde(default)]
    pub test_fraction: Option<f64>,
    pub q_models: usize,
    pub family: Family,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub init_scale: Option<f64>,
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub activation: Option<Activation>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub n_neighbors: Option<usize>,
    #[serde(default)]
    pub c_floor: Option<f64>,
    #[serde(default)]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default)]
    pub outer_iters: Option<usize>,
    #[serde(default)]
    pub inner_steps: Option<usize>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default)]
    pub loss_tol: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn ensemble(&self) -> CliResult<EnsembleConfig> {
        let mut cfg = match self.family {
            Family::Linear => {
                if self.hidden.is_some() || self.activation.is_some() {
                    return Err(CliError::Config("hidden/activation: only valid for the mlp family".into()));
                }
                let mut c = EnsembleConfig::linear(self.q_models, self.lambda.unwrap_or(1e-3));
                if let (Some(s), ModelConfig::Linear { init_scale, .. }) = (self.init_scale, &mut c.model) {
                    *init_scale = s;
                }
                c
            }
            Family::Mlp => {
                if self.lambda.is_some() || self.init_scale.is_some() {
                    return Err(CliError::Config("lambda/init_scale: only valid for the linear family".into()));
                }
                let mut c = EnsembleConfig::mlp(self.q_models, self.hidden.clone().unwrap_or_else(|| vec![32, 32]));
                if let (Some(a), ModelConfig::Mlp { activation, .. }) = (self.activation, &mut c.model) {
                    *activation = a;
                }
                c
            }
        };
        let defaults = CompetitionConfig::default();
        cfg.competition = CompetitionConfig {
            kappa: self.kappa.unwrap_or(defaults.kappa),
            gamma: self.gamma.unwrap_or(defaults.gamma),
            n_neighbors: self.n_neighbors,
            c_floor: self.c_floor.unwrap_or(defaults.c_floor),
        };
        if let Some(opt) = &self.optimizer {
            cfg.optimizer = opt.clone();
        }
        if let Some(n) = self.outer_iters {
            cfg.outer_iters = n;
        }
        cfg.inner_steps = self.inner_steps;
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        if let Some(p) = self.patience {
            cfg.patience = p;
        }
        if let Some(t) = self.loss_tol {
            cfg.loss_tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sidecar describing the columns and candidate library of a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSpec {
    pub problem: String,
    pub seed: u64,
    pub n_obs: usize,
    pub variables: Vec<String>,
    pub features: Option<FeatureSpec>,
}

pub fn generate_problem(problem: &str, seed: u64, samples: Option<usize>) -> CliResult<Benchmark<f64>> {
    if samples.is_some() && problem != "flame_surrogate" {
        return Err(CliError::Config("samples: only flame_surrogate has a configurable sample count".into()));
    }
    let b = match problem {
        "sinusoid" => problems::gen_piecewise_sinusoid(seed)?,
        "oscillator1" => problems::gen_oscillator1()?,
        "oscillator2" => problems::gen_oscillator2()?,
        "flame_surrogate" => {
            problems::gen_flame_surrogate(seed, samples.unwrap_or(problems::flame::DEFAULT_SAMPLES))?
        }
        "landscape_demo" => problems::gen_landscape_demo(seed)?,
        other => {
            return Err(CliError::Config(format!(
                "problem: unknown name {other:?} (expected one of {})",
                PROBLEMS.join(", ")
            )))
        }
    };
    Ok(b)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Other(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

fn create_file(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| CliError::Other(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Other(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<Vec<PathBuf>> {
    let b = generate_problem(&args.problem, args.seed, args.samples)?;
    create_dir(&args.out)?;
    let data_path = args.out.join("data.csv");
    b.data.write_csv(create_file(&data_path)?)?;
    let truth_path = args.out.join("truth.json");
    write_json(&truth_path, &b.truth)?;
    let spec_path = args.out.join("spec.json");
    write_json(
        &spec_path,
        &DataSpec {
            problem: args.problem.clone(),
            seed: args.seed,
            n_obs: b.data.n_obs(),
            variables: b.truth.variables.clone(),
            features: b.features.clone(),
        },
    )?;
    Ok(vec![data_path, truth_path, spec_path])
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Dataset, default feature library and display names for a run config.
fn load_run_data(cfg: &RunConfig, base: &Path) -> CliResult<(Dataset, Option<FeatureSpec>, Vec<String>)> {
    let (data, default_features, variables) = match (&cfg.problem, &cfg.data) {
        (Some(_), Some(_)) => return Err(CliError::Config("problem/data: give exactly one".into())),
        (None, None) => return Err(CliError::Config("problem/data: one of them is required".into())),
        (Some(name), None) => {
            let b = generate_problem(name, cfg.data_seed, None)?;
            (b.data, b.features, b.truth.variables)
        }
        (None, Some(path)) => {
            let path = resolve(base, path);
            let data = Dataset::load_csv(&path).map_err(|e| match e {
                ClsmError::Io(io) => CliError::Config(format!("data: cannot read {}: {io}", path.display())),
                other => CliError::Config(format!("data: {other}")),
            })?;
            let sidecar = path.with_file_name("spec.json");
            let spec: Option<DataSpec> = if sidecar.exists() {
                let text = fs::read_to_string(&sidecar)?;
                Some(serde_json::from_str(&text).map_err(|e| CliError::Config(format!("spec.json: {e}")))?)
            } else {
                None
            };
            let variables = spec
                .as_ref()
                .map(|s| s.variables.clone())
                .filter(|v| v.len() == data.n_vars())
                .unwrap_or_else(|| (1..=data.n_vars()).map(|i| format!("x{i}")).collect());
            (data, spec.and_then(|s| s.features), variables)
        }
    };
    let features = match &cfg.features {
        Some(choice) => Some(choice.resolve()?),
        None => default_features,
    };
    Ok((data, features, variables))
}

pub struct FitOutput {
    pub fit: FitResult,
    pub report: String,
    pub files: Vec<PathBuf>,
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<FitOutput> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(q) = args.q {
        cfg.q_models = q;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = match (&args.out, &cfg.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => resolve(&base, o),
        (None, None) => PathBuf::from("."),
    };
    let ensemble = cfg.ensemble()?;
    let threshold = cfg.threshold.unwrap_or(DISPLAY_THRESHOLD);
    if !(threshold >= 0.0) {
        return Err(CliError::Config("threshold: must be >= 0".into()));
    }
    let (data, features, variables) = load_run_data(&cfg, &base)?;
    let (train, test) = match cfg.test_fraction {
        None => (data, None),
        Some(f) if f > 0.0 && f < 1.0 => {
            let (a, b) = data.split(f, cfg.data_seed)?;
            (a, Some(b))
        }
        Some(_) => return Err(CliError::Config("test_fraction: must lie in (0, 1)".into())),
    };
    let features = if ensemble.model.family() == Family::Mlp { None } else { features };
    let set = TrainingSet::new(train, features, ensemble.model.family())?;
    let fit = run_trials(&set, &ensemble)?;

    create_dir(&out)?;
    let fit_path = out.join("fit.json");
    fit.to_json_writer(create_file(&fit_path)?)?;
    let assign_path = out.join("assignments.csv");
    fit.write_assignments_csv(create_file(&assign_path)?)?;
    let mut report = fit_summary(&fit, threshold, &variables)?;
    if let Some(test) = &test {
        let hard = composite_mse(&fit, test, PredictMode::Hard)?;
        let soft = composite_mse(&fit, test, PredictMode::Soft)?;
        writeln!(report, "test mse ({} observations): hard {hard:.6e}, soft {soft:.6e}", test.n_obs()).ok();
    }
    let report_path = out.join("report.txt");
    fs::write(&report_path, &report)?;
    Ok(FitOutput {
        fit,
        report,
        files: vec![fit_path, assign_path, report_path],
    })
}

/// Training summary plus, for linear fits, the thresholded equations and breakpoints.
pub fn fit_summary(fit: &FitResult, threshold: f64, variables: &[String]) -> CliResult<String> {
    let mut s = String::new();
    let trials: Vec<String> = fit
        .trial_mse
        .iter()
        .map(|m| m.map_or_else(|| "failed".to_string(), |v| format!("{v:.6e}")))
        .collect();
    writeln!(
        s,
        "trial seed {} selected; training mse {:.6e}; {} outer iterations{}",
        fit.trial_seed,
        fit.training_mse(),
        fit.iterations,
        if fit.converged { " (converged)" } else { "" }
    )
    .ok();
    writeln!(s, "trial training mse: [{}]", trials.join(", ")).ok();
    match fit.family() {
        Family::Linear => {
            write!(s, "{}", report_equations(fit, threshold)?).ok();
        }
        Family::Mlp => {
            let counts = fit.regime_counts();
            if fit.n_models() == 1 {
                writeln!(s, "global model ({} observations)", counts[0]).ok();
            } else {
                writeln!(s, "{} specialized models", fit.n_models()).ok();
            }
            for (k, &n) in counts.iter().enumerate() {
                let medians: Vec<String> = (0..fit.inputs.ncols())
                    .map(|j| {
                        let mut v: Vec<f64> =
                            (0..fit.labels.len()).filter(|&i| fit.labels[i] == k).map(|i| fit.inputs[[i, j]]).collect();
                        v.sort_by(f64::total_cmp);
                        let name = variables.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
                        match v.get(v.len() / 2) {
                            Some(m) => format!("{name} {m:.6}"),
                            None => format!("{name} -"),
                        }
                    })
                    .collect();
                writeln!(s, "model {k} ({n} observations): median {}", medians.join(", ")).ok();
            }
        }
    }
    Ok(s)
}

pub fn cmd_landscape(args: &LandscapeArgs) -> CliResult<PathBuf> {
    let subset: Subset = args.subset.parse().map_err(|e: ClsmError| CliError::Config(format!("subset: {e}")))?;
    if args.points == 0 {
        return Err(CliError::Config("points: must be >= 1".into()));
    }
    let grid = problems::landscape::mu_grid(args.mu_min, args.mu_max, args.points);
    let land = problems::loss_landscape(&grid, subset, args.seed)?;
    create_dir(&args.out)?;
    let path = args.out.join("landscape.csv");
    land.write_csv(create_file(&path)?)?;
    Ok(path)
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<String> {
    let file = File::open(&args.fit)
        .map_err(|e| CliError::Config(format!("fit: cannot read {}: {e}", args.fit.display())))?;
    let fit = FitResult::from_json_reader(file).map_err(|e| CliError::Config(format!("fit: {e}")))?;
    let variables: Vec<String> = match &fit.features {
        Some(f) => f.variables().to_vec(),
        None => (1..=fit.inputs.ncols()).map(|i| format!("x{i}")).collect(),
    };
    let report = fit_summary(&fit, args.threshold, &variables)?;
    if let Some(out) = &args.out {
        create_dir(out)?;
        fs::write(out.join("report.txt"), &report)?;
    }
    Ok(report)
}

/// Sizes the global rayon pool from `CLSM_THREADS` (unset or 0 = one thread per core).
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let n = match value {
        None | Some("") => 0,
        Some(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("CLSM_THREADS: expected a count, got {v:?}")))?,
    };
    // A pool may already exist when embedded; thread sizing is then left as is.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads(std::env::var("CLSM_THREADS").ok().as_deref())?;
    match cli.command {
        Command::Generate(a) => {
            for p in cmd_generate(&a)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Fit(a) => {
            let out = cmd_fit(&a)?;
            print!("{}", out.report);
            for p in out.files {
                println!("wrote {}", p.display());
            }
        }
        Command::Landscape(a) => {
            println!("wrote {}", cmd_landscape(&a)?.display());
        }
        Command::Report(a) => print!("{}", cmd_report(&a)?),
    }
    Ok(())
}
