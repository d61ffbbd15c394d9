//! Benchmark generators.

pub mod flame;
pub mod landscape;
pub mod ode;
pub mod oscillators;
pub mod sinusoid;
pub mod truth;

pub use flame::gen_flame_surrogate;
pub use landscape::{gen_landscape_demo, loss_landscape, LossLandscape, Subset};
pub use ode::{integrate_rk4, uniform_grid, OdeSystem, Trajectory};
pub use oscillators::{gen_oscillator1, gen_oscillator2, TargetMode};
pub use sinusoid::gen_piecewise_sinusoid;
pub use truth::{Benchmark, GroundTruth, RegimeTruth};
