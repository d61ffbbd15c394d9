//! Analytic laminar-flame-speed surrogate over pressure, temperature and equivalence ratio.
//!
//! `s_L(p, T, phi) = A(p, T) * g(phi)` with
//!
//! * `A(p, T) = 0.38 * (T / 300)^1.75 * p^-0.3` (m/s, `p` in atm, `T` in K)
//! * lean side `phi < 1`: `g = 1 - 1.6 (1 - phi) - 1.2 (1 - phi)^2`
//! * rich side `phi >= 1`: `g = exp(-2.2 (phi - 1))`
//!
//! Both branches equal 1 at stoichiometry, `g` rises on the lean side and falls on the rich
//! side, so the peak (and the change of functional form) sits at `phi = 1`.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::truth::{coefficients, Benchmark, GroundTruth, RegimeTruth};
use crate::dataset::Dataset;
use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

pub const P_RANGE: (f64, f64) = (1.0, 10.0);
pub const T_RANGE: (f64, f64) = (300.0, 600.0);
pub const PHI_RANGE: (f64, f64) = (0.6, 1.4);
pub const NOISE_VARIANCE: f64 = 1e-6;
pub const TEST_FRACTION: f64 = 0.4;
pub const DEFAULT_SAMPLES: usize = 4150;

pub fn amplitude(p: f64, t: f64) -> f64 {
    0.38 * (t / 300.0).powf(1.75) * p.powf(-0.3)
}

pub fn lean_shape(phi: f64) -> f64 {
    let d = 1.0 - phi;
    1.0 - 1.6 * d - 1.2 * d * d
}

pub fn rich_shape(phi: f64) -> f64 {
    (-2.2 * (phi - 1.0)).exp()
}

pub fn shape(phi: f64) -> f64 {
    if phi < 1.0 {
        lean_shape(phi)
    } else {
        rich_shape(phi)
    }
}

pub fn shape_derivative(phi: f64) -> f64 {
    if phi < 1.0 {
        1.6 + 2.4 * (1.0 - phi)
    } else {
        -2.2 * rich_shape(phi)
    }
}

pub fn flame_speed(p: f64, t: f64, phi: f64) -> f64 {
    amplitude(p, t) * shape(phi)
}

/// Uniform samples of `(p, T, phi)` over the operating box with noisy flame speeds.
pub fn gen_flame_surrogate<T: Scalar>(seed: u64, n_samples: usize) -> Result<Benchmark<T>> {
    if n_samples < 100 {
        return Err(ClsmError::config(format!("flame surrogate needs at least 100 samples, got {n_samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_VARIANCE.sqrt()).expect("positive variance");
    let mut inputs = Array2::zeros((n_samples, 3));
    let mut targets = Array1::zeros(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let p = rng.random_range(P_RANGE.0..=P_RANGE.1);
        let t = rng.random_range(T_RANGE.0..=T_RANGE.1);
        let phi = rng.random_range(PHI_RANGE.0..=PHI_RANGE.1);
        inputs[[i, 0]] = T::lit(p);
        inputs[[i, 1]] = T::lit(t);
        inputs[[i, 2]] = T::lit(phi);
        targets[i] = T::lit(flame_speed(p, t, phi) + noise.sample(&mut rng));
        labels.push(usize::from(phi >= 1.0));
    }
    let truth = GroundTruth {
        problem: "flame_surrogate".into(),
        description: "s_L = 0.38 (T/300)^1.75 p^-0.3 g(phi); g = 1 - 1.6(1-phi) - 1.2(1-phi)^2 for phi < 1, exp(-2.2(phi-1)) otherwise".into(),
        variables: vec!["p".into(), "T".into(), "phi".into()],
        parameters: coefficients(&[
            ("noise_variance", NOISE_VARIANCE),
            ("test_fraction", TEST_FRACTION),
            ("phi_boundary", 1.0),
        ]),
        regimes: vec![
            RegimeTruth {
                name: "lean".into(),
                condition: "phi < 1".into(),
                coefficients: coefficients(&[]),
            },
            RegimeTruth {
                name: "rich".into(),
                condition: "phi >= 1".into(),
                coefficients: coefficients(&[]),
            },
        ],
        labels,
    };
    Ok(Benchmark {
        data: Dataset::new(inputs, targets)?,
        features: None,
        truth,
    })
}
