//! One-parameter loss landscapes of `f(x; mu) = sin(mu x) + x cos(8x) + exp(0.1x) + 1.2 tanh(x)`,
//! where data is generated with `mu = -1` on `x < 0` and `mu = 2` on `x >= 0`.

use std::io::Write;

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::truth::{coefficients, Benchmark, GroundTruth, RegimeTruth};
use crate::dataset::Dataset;
use crate::error::{ClsmError, Result};
use crate::regressors::WeightedLossReport;

pub const X_RANGE: (f64, f64) = (-3.0, 3.0);
pub const N_SAMPLES: usize = 200;
pub const MU_NEGATIVE: f64 = -1.0;
pub const MU_NONNEGATIVE: f64 = 2.0;

pub fn demo_function(x: f64, mu: f64) -> f64 {
    (mu * x).sin() + x * (8.0 * x).cos() + (0.1 * x).exp() + 1.2 * x.tanh()
}

pub fn true_mu(x: f64) -> f64 {
    if x < 0.0 {
        MU_NEGATIVE
    } else {
        MU_NONNEGATIVE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    All,
    Negative,
    NonNegative,
}

impl Subset {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Subset::All => true,
            Subset::Negative => x < 0.0,
            Subset::NonNegative => x >= 0.0,
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = ClsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Subset::All),
            "neg" | "negative" => Ok(Subset::Negative),
            "nonneg" | "nonnegative" => Ok(Subset::NonNegative),
            other => Err(ClsmError::config(format!("unknown subset {other:?}; expected all, neg or nonneg"))),
        }
    }
}

/// Noiseless samples at `x ~ U(-3, 3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSamples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn demo_samples(seed: u64) -> DemoSamples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..N_SAMPLES).map(|_| rng.random_range(X_RANGE.0..X_RANGE.1)).collect();
    let y = x.iter().map(|&x| demo_function(x, true_mu(x))).collect();
    DemoSamples { x, y }
}

impl DemoSamples {
    pub fn restrict(&self, subset: Subset) -> DemoSamples {
        let (x, y) = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(x, _)| subset.contains(**x))
            .map(|(x, y)| (*x, *y))
            .unzip();
        DemoSamples { x, y }
    }

    /// Mean squared error in `mu` with its exact first and second derivatives.
    pub fn mu_objective(&self, mu: f64) -> WeightedLossReport<f64> {
        let s = self.x.len().max(1) as f64;
        let (mut loss, mut grad, mut hess) = (0.0, 0.0, 0.0);
        for (&x, &y) in self.x.iter().zip(&self.y) {
            let r = y - demo_function(x, mu);
            let d1 = x * (mu * x).cos();
            let d2 = -x * x * (mu * x).sin();
            loss += r * r;
            grad += -2.0 * r * d1;
            hess += 2.0 * (d1 * d1 - r * d2);
        }
        WeightedLossReport {
            loss: loss / s,
            gradient: array![grad / s],
            hessian: Some(array![[hess / s]]),
        }
    }
}

/// Per-sample losses `l_i(mu)` (grid rows x sample columns) and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLandscape {
    pub mu: Vec<f64>,
    pub sample_x: Vec<f64>,
    pub per_sample: Array2<f64>,
    pub mean: Vec<f64>,
}

impl LossLandscape {
    /// Grid value with the smallest mean loss (first one on ties).
    pub fn argmin_mu(&self) -> f64 {
        let mut best = 0;
        for (i, &v) in self.mean.iter().enumerate() {
            if v < self.mean[best] {
                best = i;
            }
        }
        self.mu[best]
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let mut header = vec!["mu".to_string(), "mean_loss".to_string()];
        header.extend((0..self.sample_x.len()).map(|j| format!("l{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (i, mu) in self.mu.iter().enumerate() {
            let mut cells = vec![format!("{mu:?}"), format!("{:?}", self.mean[i])];
            cells.extend(self.per_sample.row(i).iter().map(|v| format!("{v:?}")));
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn mu_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    super::ode::uniform_grid(min, max, n)
}

pub fn loss_landscape(mu_grid: &[f64], subset: Subset, seed: u64) -> Result<LossLandscape> {
    if mu_grid.is_empty() {
        return Err(ClsmError::config("mu grid is empty"));
    }
    let samples = demo_samples(seed).restrict(subset);
    let n = samples.x.len();
    let mut per_sample = Array2::zeros((mu_grid.len(), n));
    for (i, &mu) in mu_grid.iter().enumerate() {
        for (j, (&x, &y)) in samples.x.iter().zip(&samples.y).enumerate() {
            let r = y - demo_function(x, mu);
            per_sample[[i, j]] = r * r;
        }
    }
    let mean = per_sample
        .rows()
        .into_iter()
        .map(|r| if n == 0 { 0.0 } else { r.sum() / n as f64 })
        .collect();
    Ok(LossLandscape {
        mu: mu_grid.to_vec(),
        sample_x: samples.x,
        per_sample,
        mean,
    })
}

/// The demo samples as a dataset (`x1 = x`, `y`) with the generating `mu` per regime.
pub fn gen_landscape_demo(seed: u64) -> Result<Benchmark<f64>> {
    let s = demo_samples(seed);
    let n = s.x.len();
    let inputs = Array2::from_shape_vec((n, 1), s.x.clone()).expect("n x 1");
    let labels = s.x.iter().map(|&x| usize::from(x >= 0.0)).collect();
    Ok(Benchmark {
        data: Dataset::new(inputs, Array1::from(s.y))?,
        features: None,
        truth: GroundTruth {
            problem: "landscape_demo".into(),
            description: "y = sin(mu x) + x cos(8x) + exp(0.1x) + 1.2 tanh(x), mu = -1 for x < 0, 2 otherwise".into(),
            variables: vec!["x".into()],
            parameters: coefficients(&[("x_min", X_RANGE.0), ("x_max", X_RANGE.1)]),
            regimes: vec![
                RegimeTruth {
                    name: "x<0".into(),
                    condition: "x < 0".into(),
                    coefficients: coefficients(&[("mu", MU_NEGATIVE)]),
                },
                RegimeTruth {
                    name: "x>=0".into(),
                    condition: "x >= 0".into(),
                    coefficients: coefficients(&[("mu", MU_NONNEGATIVE)]),
                },
            ],
            labels,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_recover_generating_mu() {
        let grid = mu_grid(-3.0, 3.0, 601);
        let step = 0.01 + 1e-12;
        let neg = loss_landscape(&grid, Subset::Negative, 0).unwrap();
        assert!((neg.argmin_mu() - MU_NEGATIVE).abs() <= step);
        let pos = loss_landscape(&grid, Subset::NonNegative, 0).unwrap();
        assert!((pos.argmin_mu() - MU_NONNEGATIVE).abs() <= step);
    }

    #[test]
    fn generating_mu_gives_zero_loss() {
        let s = demo_samples(4);
        let (x, y) = (s.x[0], s.y[0]);
        assert_eq!(y - demo_function(x, true_mu(x)), 0.0);
    }

    #[test]
    fn single_point_grid() {
        let l = loss_landscape(&[0.5], Subset::All, 1).unwrap();
        assert_eq!(l.mean.len(), 1);
        assert_eq!(l.per_sample.dim(), (1, N_SAMPLES));
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
        assert!(loss_landscape(&[], Subset::All, 1).is_err());
    }

    #[test]
    fn mu_derivatives_match_differences() {
        let s = demo_samples(2).restrict(Subset::Negative);
        let h = 1e-5;
        for &mu in &[-2.0, -0.3, 1.1] {
            let r = s.mu_objective(mu);
            let g_fd = (s.mu_objective(mu + h).loss - s.mu_objective(mu - h).loss) / (2.0 * h);
            let h_fd = (s.mu_objective(mu + h).gradient[0] - s.mu_objective(mu - h).gradient[0]) / (2.0 * h);
            assert!((r.gradient[0] - g_fd).abs() < 1e-6 * (1.0 + g_fd.abs()));
            assert!((r.hessian.unwrap()[[0, 0]] - h_fd).abs() < 1e-5 * (1.0 + h_fd.abs()));
        }
    }
}
