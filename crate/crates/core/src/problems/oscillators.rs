//! Damped oscillators with switching dynamics, sampled as SINDy-style regression data.
//!
//! Inputs are `(y, ydot, t)`, the target is the acceleration `yddot`.

use ndarray::{Array1, Array2};

use super::ode::{uniform_grid, OdeSystem, Trajectory};
use super::truth::{coefficients, Benchmark, GroundTruth, RegimeTruth};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::features::FeatureSpec;
use crate::scalar::Scalar;

/// How the regression target is obtained from the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMode {
    /// Right-hand side evaluated at each stored state.
    #[default]
    ExactRhs,
    /// Second-order finite differences of the stored velocity.
    CentralDifference,
}

/// `m yddot = -c ydot - k y + F(t)` with `F(t) = slope * t` for `t <= force_until`, else 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampForcedOscillator {
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub force_slope: f64,
    pub force_until: f64,
}

impl RampForcedOscillator {
    pub const BENCHMARK: Self = Self {
        m: 0.75,
        c: 0.05,
        k: 2.4,
        force_slope: 2.0,
        force_until: 2.0,
    };

    pub fn forced(&self, t: f64) -> bool {
        t <= self.force_until
    }

    pub fn acceleration(&self, t: f64, y: f64, v: f64) -> f64 {
        let force = if self.forced(t) { self.force_slope * t } else { 0.0 };
        (-self.c * v - self.k * y + force) / self.m
    }
}

impl<T: Scalar> OdeSystem<T, 2> for RampForcedOscillator {
    fn rhs(&self, t: T, s: &[T; 2]) -> [T; 2] {
        [
            s[1],
            T::lit(self.acceleration(t.to_f64_lossy(), s[0].to_f64_lossy(), s[1].to_f64_lossy())),
        ]
    }
}

/// Primary spring/damper everywhere, an extra pair engaged when `y > delta`, and a ramp force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementSwitchedOscillator {
    pub m: f64,
    pub c1: f64,
    pub k1: f64,
    pub c2: f64,
    pub k2: f64,
    pub delta: f64,
    pub force_slope: f64,
}

impl DisplacementSwitchedOscillator {
    pub const BENCHMARK: Self = Self {
        m: 1.0,
        c1: 0.25,
        k1: 10.0,
        c2: 0.15,
        k2: 5.0,
        delta: 0.25,
        force_slope: 0.1,
    };

    pub fn engaged(&self, y: f64) -> bool {
        y > self.delta
    }

    pub fn acceleration(&self, t: f64, y: f64, v: f64) -> f64 {
        let base = -self.c1 * v - self.k1 * y + self.force_slope * t;
        let extra = if self.engaged(y) {
            -(self.c2 * v + self.k2 * (y - self.delta))
        } else {
            0.0
        };
        (base + extra) / self.m
    }
}

impl<T: Scalar> OdeSystem<T, 2> for DisplacementSwitchedOscillator {
    fn rhs(&self, t: T, s: &[T; 2]) -> [T; 2] {
        [
            s[1],
            T::lit(self.acceleration(t.to_f64_lossy(), s[0].to_f64_lossy(), s[1].to_f64_lossy())),
        ]
    }
}

fn trajectory_dataset<T: Scalar>(tr: &Trajectory<T>, mode: TargetMode) -> Result<Dataset<T>> {
    let n = tr.len();
    let inputs = Array2::from_shape_fn((n, 3), |(i, j)| match j {
        0 => tr.states[i][0],
        1 => tr.states[i][1],
        _ => tr.t[i],
    });
    let targets = match mode {
        TargetMode::ExactRhs => Array1::from(tr.accelerations.clone()),
        TargetMode::CentralDifference => Array1::from(tr.differenced_accelerations()),
    };
    Dataset::new(inputs, targets)
}

pub const OSCILLATOR1_POINTS: usize = 500;
pub const OSCILLATOR2_POINTS: usize = 200;
pub const T_END: f64 = 10.0;

pub fn gen_oscillator1<T: Scalar>() -> Result<Benchmark<T>> {
    gen_oscillator1_with(TargetMode::ExactRhs)
}

pub fn gen_oscillator1_with<T: Scalar>(mode: TargetMode) -> Result<Benchmark<T>> {
    let sys = RampForcedOscillator::BENCHMARK;
    let grid = uniform_grid::<T>(0.0, T_END, OSCILLATOR1_POINTS);
    let tr = Trajectory::integrate(&sys, [T::lit(2.0), T::zero()], &grid)?;
    let labels = tr.t.iter().map(|t| usize::from(!sys.forced(t.to_f64_lossy()))).collect();
    let damping = -sys.c / sys.m;
    let stiffness = -sys.k / sys.m;
    let truth = GroundTruth {
        problem: "oscillator1".into(),
        description: "m yddot = -c ydot - k y + F(t), F(t) = 2t for t <= 2 and 0 otherwise".into(),
        variables: vec!["y".into(), "ydot".into(), "t".into()],
        parameters: coefficients(&[
            ("m", sys.m),
            ("c", sys.c),
            ("k", sys.k),
            ("force_slope", sys.force_slope),
            ("force_until", sys.force_until),
            ("y0", 2.0),
            ("ydot0", 0.0),
        ]),
        regimes: vec![
            RegimeTruth {
                name: "forced".into(),
                condition: "t <= 2".into(),
                coefficients: coefficients(&[("ydot", damping), ("y", stiffness), ("t", sys.force_slope / sys.m)]),
            },
            RegimeTruth {
                name: "free".into(),
                condition: "t > 2".into(),
                coefficients: coefficients(&[("ydot", damping), ("y", stiffness)]),
            },
        ],
        labels,
    };
    Ok(Benchmark {
        data: trajectory_dataset(&tr, mode)?,
        features: Some(FeatureSpec::oscillator_library()),
        truth,
    })
}

pub fn gen_oscillator2<T: Scalar>() -> Result<Benchmark<T>> {
    gen_oscillator2_with(TargetMode::ExactRhs)
}

pub fn gen_oscillator2_with<T: Scalar>(mode: TargetMode) -> Result<Benchmark<T>> {
    let sys = DisplacementSwitchedOscillator::BENCHMARK;
    let grid = uniform_grid::<T>(0.0, T_END, OSCILLATOR2_POINTS);
    let tr = Trajectory::integrate(&sys, [T::one(), T::zero()], &grid)?;
    let labels = tr
        .states
        .iter()
        .map(|s| usize::from(sys.engaged(s[0].to_f64_lossy())))
        .collect();
    let m = sys.m;
    let truth = GroundTruth {
        problem: "oscillator2".into(),
        description: "yddot = -(c1 ydot + k1 y)/m + 0.1 t/m - [(c2 ydot + k2 (y - delta))/m] U(y - delta)".into(),
        variables: vec!["y".into(), "ydot".into(), "t".into()],
        parameters: coefficients(&[
            ("m", sys.m),
            ("c1", sys.c1),
            ("k1", sys.k1),
            ("c2", sys.c2),
            ("k2", sys.k2),
            ("delta", sys.delta),
            ("force_slope", sys.force_slope),
            ("y0", 1.0),
            ("ydot0", 0.0),
        ]),
        regimes: vec![
            RegimeTruth {
                name: "primary".into(),
                condition: "y <= delta".into(),
                coefficients: coefficients(&[
                    ("ydot", -sys.c1 / m),
                    ("y", -sys.k1 / m),
                    ("t", sys.force_slope / m),
                ]),
            },
            RegimeTruth {
                name: "engaged".into(),
                condition: "y > delta".into(),
                coefficients: coefficients(&[
                    ("ydot", -(sys.c1 + sys.c2) / m),
                    ("y", -(sys.k1 + sys.k2) / m),
                    ("t", sys.force_slope / m),
                    ("bias", sys.k2 * sys.delta / m),
                ]),
            },
        ],
        labels,
    };
    Ok(Benchmark {
        data: trajectory_dataset(&tr, mode)?,
        features: Some(FeatureSpec::oscillator_library()),
        truth,
    })
}
