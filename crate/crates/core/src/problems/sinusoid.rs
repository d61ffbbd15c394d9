//! Piecewise sinusoid: `0.2 sin x` for `x <= 0`, `0.1 x cos x` for `x > 0`, with Gaussian noise.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::truth::{coefficients, Benchmark, GroundTruth, RegimeTruth};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::features::FeatureSpec;
use crate::scalar::Scalar;

pub const X_MIN: f64 = -30.0;
pub const X_MAX: f64 = 30.0;
pub const X_STEP: f64 = 0.05;
/// Noise variance.
pub const NOISE_VARIANCE: f64 = 0.01;

pub fn piecewise_sinusoid(x: f64) -> f64 {
    if x <= 0.0 {
        0.2 * x.sin()
    } else {
        0.1 * x * x.cos()
    }
}

pub fn n_points() -> usize {
    ((X_MAX - X_MIN) / X_STEP).round() as usize + 1
}

pub fn gen_piecewise_sinusoid<T: Scalar>(seed: u64) -> Result<Benchmark<T>> {
    gen_piecewise_sinusoid_with_noise(seed, NOISE_VARIANCE)
}

pub fn gen_piecewise_sinusoid_with_noise<T: Scalar>(seed: u64, variance: f64) -> Result<Benchmark<T>> {
    let n = n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, variance.sqrt()).expect("variance is non-negative");
    let xs: Vec<f64> = (0..n).map(|i| X_MIN + X_STEP * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| piecewise_sinusoid(x) + noise.sample(&mut rng)).collect();
    let labels = xs.iter().map(|&x| usize::from(x > 0.0)).collect();
    let inputs = Array2::from_shape_fn((n, 1), |(i, _)| T::lit(xs[i]));
    let targets = Array1::from_iter(ys.iter().map(|&y| T::lit(y)));
    let truth = GroundTruth {
        problem: "sinusoid".into(),
        description: "y = 0.2 sin(x) for x <= 0, 0.1 x cos(x) for x > 0, plus N(0, 0.01) noise".into(),
        variables: vec!["x".into()],
        parameters: coefficients(&[("noise_variance", variance), ("x_step", X_STEP)]),
        regimes: vec![
            RegimeTruth {
                name: "x<=0".into(),
                condition: "x <= 0".into(),
                coefficients: coefficients(&[("sin(x)", 0.2)]),
            },
            RegimeTruth {
                name: "x>0".into(),
                condition: "x > 0".into(),
                coefficients: coefficients(&[("x*cos(x)", 0.1)]),
            },
        ],
        labels,
    };
    Ok(Benchmark {
        data: Dataset::new(inputs, targets)?,
        features: Some(FeatureSpec::trig_library()),
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn noiseless_values() {
        assert_eq!(piecewise_sinusoid(0.0), 0.0);
        assert!((piecewise_sinusoid(-FRAC_PI_2) + 0.2).abs() < 1e-15);
        assert!((piecewise_sinusoid(PI) + 0.1 * PI).abs() < 1e-15);
    }

    #[test]
    fn grid_and_noise_level() {
        let b = gen_piecewise_sinusoid::<f64>(7).unwrap();
        assert_eq!(b.data.n_obs(), 1201);
        let x = b.data.inputs();
        assert_eq!(x[[0, 0]], -30.0);
        assert_eq!(x[[600, 0]], 0.0);
        assert!((x[[1200, 0]] - 30.0).abs() < 1e-12);
        let resid: Vec<f64> = (0..1201)
            .map(|i| b.data.targets()[i] - piecewise_sinusoid(x[[i, 0]]))
            .collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / 1201.0;
        assert!((var - 0.01).abs() < 0.002, "{var}");
        assert_eq!(b.truth.labels.iter().filter(|&&l| l == 0).count(), 601);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = gen_piecewise_sinusoid::<f64>(3).unwrap();
        let b = gen_piecewise_sinusoid::<f64>(3).unwrap();
        let c = gen_piecewise_sinusoid::<f64>(4).unwrap();
        assert_eq!(a.data, b.data);
        assert_ne!(a.data, c.data);
    }
}
