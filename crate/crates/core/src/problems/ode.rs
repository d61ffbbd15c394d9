//! Fixed-grid classical Runge-Kutta integration and second-order trajectories.

use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

/// First-order system `dx/dt = f(t, x)` of fixed dimension `D`.
pub trait OdeSystem<T, const D: usize> {
    fn rhs(&self, t: T, state: &[T; D]) -> [T; D];
}

impl<T, F, const D: usize> OdeSystem<T, D> for F
where
    F: Fn(T, &[T; D]) -> [T; D],
{
    fn rhs(&self, t: T, state: &[T; D]) -> [T; D] {
        self(t, state)
    }
}

fn axpy<T: Scalar, const D: usize>(x: &[T; D], h: T, k: &[T; D]) -> [T; D] {
    let mut out = *x;
    for (o, &v) in out.iter_mut().zip(k) {
        *o = *o + h * v;
    }
    out
}

/// Classical four-stage RK4 on the supplied grid; the returned states align with `t_grid`.
pub fn integrate_rk4<T: Scalar, S: OdeSystem<T, D> + ?Sized, const D: usize>(
    sys: &S,
    y0: [T; D],
    t_grid: &[T],
) -> Result<Vec<[T; D]>> {
    if t_grid.is_empty() {
        return Err(ClsmError::config("time grid is empty"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ClsmError::config("time grid must be strictly increasing"));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(ClsmError::NonFinite("initial state".into()));
    }
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    let mut states = Vec::with_capacity(t_grid.len());
    let mut y = y0;
    states.push(y);
    for w in t_grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = sys.rhs(t, &y);
        let k2 = sys.rhs(t + half * h, &axpy(&y, half * h, &k1));
        let k3 = sys.rhs(t + half * h, &axpy(&y, half * h, &k2));
        let k4 = sys.rhs(t + h, &axpy(&y, h, &k3));
        for j in 0..D {
            y[j] = y[j] + h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ClsmError::NonFinite(format!("state blew up at t = {}", w[1])));
        }
        states.push(y);
    }
    Ok(states)
}

/// `n` evenly spaced points from `start` to `end` inclusive.
pub fn uniform_grid<T: Scalar>(start: f64, end: f64, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::lit(start)],
        _ => (0..n)
            .map(|i| T::lit(start + (end - start) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Sampled `(y, ydot)` states of a second-order system with accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub t: Vec<T>,
    pub states: Vec<[T; 2]>,
    pub accelerations: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Integrates and evaluates the acceleration exactly from the right-hand side at every sample.
    pub fn integrate<S: OdeSystem<T, 2> + ?Sized>(sys: &S, y0: [T; 2], t_grid: &[T]) -> Result<Self> {
        let states = integrate_rk4(sys, y0, t_grid)?;
        let accelerations = t_grid.iter().zip(&states).map(|(&t, s)| sys.rhs(t, s)[1]).collect();
        Ok(Self {
            t: t_grid.to_vec(),
            states,
            accelerations,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Accelerations from second-order differences of the stored velocities: central inside,
    /// one-sided three-point at the ends.
    pub fn differenced_accelerations(&self) -> Vec<T> {
        let n = self.len();
        let v: Vec<T> = self.states.iter().map(|s| s[1]).collect();
        if n < 3 {
            return self.accelerations.clone();
        }
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let four = T::lit(4.0);
        (0..n)
            .map(|i| {
                if i == 0 {
                    let h = self.t[1] - self.t[0];
                    (-three * v[0] + four * v[1] - v[2]) / (two * h)
                } else if i == n - 1 {
                    let h = self.t[n - 1] - self.t[n - 2];
                    (three * v[n - 1] - four * v[n - 2] + v[n - 3]) / (two * h)
                } else {
                    (v[i + 1] - v[i - 1]) / (self.t[i + 1] - self.t[i - 1])
                }
            })
            .collect()
    }
}
