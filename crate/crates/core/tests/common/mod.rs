//! Independent oracles and reusable property checks shared by the integration and acceptance suites.
#![allow(dead_code)]

use clsm::competition;
use clsm::problems::ode::integrate_rk4;
use clsm::regressors::{LinearModel, MlpModel, WeightedLossReport};
use clsm::*;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn dense_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs())).unwrap();
        if piv != col {
            for k in 0..n {
                m.swap([col, k], [piv, k]);
            }
            x.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = m[[r, col]] / m[[col, col]];
            for k in col..n {
                m[[r, k]] -= f * m[[col, k]];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for k in (r + 1)..n {
            acc -= m[[r, k]] * x[k];
        }
        x[r] = acc / m[[r, r]];
    }
    x
}

/// Underdamped `m y'' + c y' + k y = 0` from `y(0) = y0, y'(0) = 0`.
pub fn damped_oscillator(m: f64, c: f64, k: f64, y0: f64, t: f64) -> (f64, f64) {
    let zeta_w = c / (2.0 * m);
    let wd = (k / m - zeta_w * zeta_w).sqrt();
    let a = y0;
    let b = zeta_w * y0 / wd;
    let e = (-zeta_w * t).exp();
    let y = e * (a * (wd * t).cos() + b * (wd * t).sin());
    let v = e * ((-a * wd + b * -zeta_w) * (wd * t).sin() + (b * wd - zeta_w * a) * (wd * t).cos());
    (y, v)
}

pub fn random_se(rng: &mut ChaCha8Rng, s: usize, q: usize) -> SquaredErrorMatrix {
    let data = Array2::from_shape_fn((s, q), |_| {
        let e: f64 = rng.random_range(-8.0..2.0);
        10f64.powf(e)
    });
    SquaredErrorMatrix::new(data).unwrap()
}

/// Rows of alpha sum to one and the row minimum of the squared error carries the maximum weight.
pub fn check_row_stochastic(n_matrices: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for m in 0..n_matrices {
        let s = r.random_range(1..40);
        let q = r.random_range(1..6);
        let se = random_se(&mut r, s, q);
        let cfg = CompetitionConfig {
            kappa: r.random_range(0.0..50.0),
            ..Default::default()
        };
        let alpha = competition::compute_raw_weights(&se, &cfg);
        for i in 0..s {
            let row = alpha.row(i);
            let sum: f64 = row.sum();
            worst = worst.max((sum - 1.0).abs());
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
                return Err(format!("matrix {m} row {i}: sum {sum}"));
            }
            let se_row = se.view().row(i).to_owned();
            let best = (0..q).min_by(|&a, &b| se_row[a].total_cmp(&se_row[b])).unwrap();
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if row[best] < top {
                return Err(format!("matrix {m} row {i}: winner {best} weight {} < {top}", row[best]));
            }
        }
    }
    Ok(format!("{n_matrices} matrices, max |row sum - 1| = {worst:.1e}"))
}

/// `kappa -> inf` concentrates on the winner; `kappa = 0` spreads uniformly.
pub fn check_kappa_limits(seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..100 {
        let q = r.random_range(2..6);
        let se = random_se(&mut r, 10, q);
        let uniform = competition::compute_raw_weights(&se, &CompetitionConfig { kappa: 0.0, ..Default::default() });
        if uniform.iter().any(|&a| (a - 1.0 / q as f64).abs() > 1e-15) {
            return Err("kappa = 0 is not uniform".into());
        }
        let hard = competition::compute_raw_weights(&se, &CompetitionConfig { kappa: 1e6, ..Default::default() });
        for i in 0..10 {
            let row = se.view().row(i).to_owned();
            let best = (0..q).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            let ties = row.iter().filter(|&&v| v == row[best]).count();
            if ties == 1 && (hard[[i, best]] - 1.0).abs() > 1e-12 {
                return Err(format!("kappa = 1e6 row {i}: winner weight {}", hard[[i, best]]));
            }
        }
    }
    Ok("uniform at kappa = 0, one-hot at kappa = 1e6".into())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences of loss (gradient) and analytic gradient (Hessian).
pub fn fd_compare<F: Fn(&Array1<f64>) -> WeightedLossReport<f64>>(f: F, theta: &Array1<f64>, h: f64) -> (f64, f64) {
    let base = f(theta);
    let mut g_err = 0.0f64;
    let mut h_err = 0.0f64;
    for j in 0..theta.len() {
        let mut p = theta.clone();
        let mut m = theta.clone();
        p[j] += h;
        m[j] -= h;
        let (fp, fm) = (f(&p), f(&m));
        let g_fd = (fp.loss - fm.loss) / (2.0 * h);
        g_err = g_err.max(rel_err(base.gradient[j], g_fd));
        if let (Some(hp), Some(hm), Some(h0)) = (&fp.hessian, &fm.hessian, &base.hessian) {
            let _ = (hp, hm);
            for i in 0..theta.len() {
                let h_fd = (fp.gradient[i] - fm.gradient[i]) / (2.0 * h);
                h_err = h_err.max(rel_err(h0[[i, j]], h_fd));
            }
        }
    }
    (g_err, h_err)
}

pub fn check_finite_differences(seed: u64) -> Check {
    let mut r = rng(seed);
    let s = 60;
    let x: Array2<f64> = Array2::from_shape_fn((s, 1), |_| r.random_range(-3.0..3.0));
    let spec = FeatureSpec::trig_library();
    let feats = spec.eval_matrix(x.view()).unwrap();
    let y = Array1::from_shape_fn(s, |i| x[[i, 0]].sin() + r.random_range(-0.1..0.1));
    let w = Array1::from_shape_fn(s, |_| r.random_range(0.0..1.0));
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let beta = Array1::from_shape_fn(spec.len(), |_| r.random_range(-1.0..1.0));
        let model = LinearModel { beta: beta.clone(), lambda: 0.05, unpenalized: spec.bias_index() };
        let (g, h) = fd_compare(
            |b| LinearModel { beta: b.clone(), ..model.clone() }.objective(feats.view(), y.view(), w.view()).unwrap(),
            &beta,
            1e-5,
        );
        worst = (worst.0.max(g), worst.1.max(h));
    }
    let x3: Array2<f64> = Array2::from_shape_fn((40, 3), |_| r.random_range(-1.5..1.5));
    let y3 = Array1::from_shape_fn(40, |i| x3[[i, 0]] * x3[[i, 1]] - x3[[i, 2]]);
    let w3 = Array1::from_shape_fn(40, |_| r.random_range(0.0..1.0));
    let mut mlp_worst = 0.0f64;
    for _ in 0..3 {
        let net = MlpModel::<f64>::random(&[3, 6, 5, 1], Activation::Tanh, &mut r).unwrap();
        let theta = net.params();
        let (g, _) = fd_compare(
            |t| {
                let mut n = net.clone();
                n.set_params(t.view()).unwrap();
                n.loss_grad(x3.view(), y3.view(), w3.view()).unwrap()
            },
            &theta,
            1e-6,
        );
        mlp_worst = mlp_worst.max(g);
    }
    let msg = format!(
        "linear grad {:.1e}, linear Hessian {:.1e}, mlp grad {:.1e} (relative)",
        worst.0, worst.1, mlp_worst
    );
    if worst.0 <= 1e-4 && worst.1 <= 1e-4 && mlp_worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Unjittered, unclipped Newton delta equals a dense solve of `H delta = g`.
pub fn check_newton_oracle(seed: u64) -> Check {
    let mut r = rng(seed);
    let cfg = NewtonConfig {
        eps_max: Some(0.0),
        clip_limit: f64::INFINITY,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(1..9);
        let b = Array2::from_shape_fn((n, n), |_| r.random_range(-1.0..1.0));
        let h = b.t().dot(&b) + Array2::<f64>::eye(n) * 0.5;
        let g = Array1::from_shape_fn(n, |_| r.random_range(-2.0..2.0));
        let theta = Array1::from_shape_fn(n, |_| r.random_range(-1.0..1.0));
        let step = newton_step(theta.view(), g.view(), h.view(), &cfg, &mut r).map_err(|e| e.to_string())?;
        let oracle = dense_solve(&h, &g);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            worst = worst.max((step.delta[j] - oracle[j]).abs() / scale);
            if ((&theta - &oracle)[j] - step.theta[j]).abs() > 1e-10 * scale {
                return Err("theta' != theta - delta".into());
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("200 SPD systems, max scaled deviation {worst:.1e}"))
    } else {
        Err(format!("max scaled deviation {worst:.1e}"))
    }
}

pub fn check_clip(seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..1000 {
        let n = r.random_range(1..10);
        let orig: Array1<f64> = Array1::from_shape_fn(n, |_| r.random_range(-10.0..10.0));
        let limit = r.random_range(0.01..5.0);
        let mut d = orig.clone();
        clsm::optimizers::clip(&mut d, limit);
        for (a, b) in orig.iter().zip(d.iter()) {
            if b.abs() > limit || (a.signum() != b.signum() && *a != 0.0) || (a.abs() <= limit && a != b) {
                return Err(format!("clip({a}, {limit}) = {b}"));
            }
        }
    }
    Ok("1000 vectors: |delta| <= limit, signs kept, small entries untouched".into())
}

/// Observed order `log2(e(h) / e(h/2))` against the analytic damped oscillator.
pub fn rk4_observed_order() -> (f64, Vec<f64>) {
    let (m, c, k, y0, t_end) = (1.0, 0.2, 4.0, 1.0, 5.0);
    let sys = move |_t: f64, s: &[f64; 2]| [s[1], (-c * s[1] - k * s[0]) / m];
    let (y_true, v_true) = damped_oscillator(m, c, k, y0, t_end);
    let errors: Vec<f64> = [50usize, 100, 200, 400]
        .iter()
        .map(|&steps| {
            let grid: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
            let states = integrate_rk4(&sys, [y0, 0.0], &grid).unwrap();
            let last = states.last().unwrap();
            ((last[0] - y_true).powi(2) + (last[1] - v_true).powi(2)).sqrt()
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (orders.iter().sum::<f64>() / orders.len() as f64, orders)
}

pub fn check_rk4_order() -> Check {
    let (mean, orders) = rk4_observed_order();
    let msg = format!("observed orders {orders:.3?}");
    if orders.iter().all(|o| (3.8..=4.2).contains(o)) {
        Ok(msg)
    } else {
        Err(format!("{msg}, mean {mean:.3}"))
    }
}

pub fn check_standardize(seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let s = r.random_range(1..50);
        let v = r.random_range(1..5);
        let scale = 10f64.powf(r.random_range(-3.0..3.0));
        let x = Array2::from_shape_fn((s, v), |_| r.random_range(-1.0..1.0) * scale + 7.0);
        let p = ScalingParams::fit(x.view());
        let z = p.apply(x.view());
        let back = p.invert(z.view());
        for (a, b) in x.iter().zip(back.iter()) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    if worst <= 1e-12 {
        Ok(format!("200 datasets, max relative round-trip error {worst:.1e}"))
    } else {
        Err(format!("round-trip error {worst:.1e}"))
    }
}

/// Ordinary least squares through the normal equations.
pub fn ols(features: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    dense_solve(&features.t().dot(features), &features.t().dot(y))
}

/// With one model every weight is 1 and an unpenalized linear fit reduces to least squares.
pub fn check_collapse(seed: u64) -> Check {
    let mut r = rng(seed);
    let s = 150;
    let x: Array2<f64> = Array2::from_shape_fn((s, 1), |_| r.random_range(-4.0..4.0));
    let y = Array1::from_shape_fn(s, |i| 0.7 * x[[i, 0]].sin() - 0.2 * x[[i, 0]] + 0.1 + r.random_range(-0.05..0.05));
    let spec = FeatureSpec::parse(vec!["x".into()], &["x", "sin(x)", "cos(x)", "bias"]).unwrap();
    let data = clsm::Dataset::new(x, y.clone()).unwrap();
    let set = TrainingSet::new(data.clone(), Some(spec.clone()), Family::Linear).unwrap();
    let mut cfg = EnsembleConfig::linear(1, 0.0);
    cfg.optimizer = OptimizerConfig::Newton(NewtonConfig { eps_max: Some(0.0), clip_limit: 10.0, ..Default::default() });
    cfg.outer_iters = 20;
    let fit = run_trials(&set, &cfg).map_err(|e| e.to_string())?;
    let ones = |a: &Array2<f64>| a.iter().all(|&v| v == 1.0);
    if !(ones(&fit.weights.alpha) && ones(&fit.weights.alpha_bar) && ones(&fit.weights.alpha_hat)) {
        return Err("weights are not identically 1".into());
    }
    if fit.labels.iter().any(|&l| l != 0) {
        return Err("labels are not all 0".into());
    }
    let beta = &fit.models[0].as_linear().unwrap().beta;
    let oracle = ols(&spec.eval_matrix(data.inputs()).unwrap(), &y);
    let dev = beta.iter().zip(oracle.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let hard = composite_predict(&fit, data.inputs(), PredictMode::Hard).unwrap();
    let soft = composite_predict(&fit, data.inputs(), PredictMode::Soft).unwrap();
    let direct = fit.models[0].predict(spec.eval_matrix(data.inputs()).unwrap().view()).unwrap();
    if hard != direct || soft != direct {
        return Err("composite prediction differs from the single model".into());
    }
    if dev <= 1e-8 {
        Ok(format!("weights = 1, coefficients match least squares within {dev:.1e}"))
    } else {
        Err(format!("coefficients deviate from least squares by {dev:.1e}"))
    }
}

pub fn small_sinusoid_fit_config() -> EnsembleConfig {
    let mut cfg = EnsembleConfig::linear(2, 1.5e-3);
    cfg.optimizer = OptimizerConfig::Newton(NewtonConfig { eps_max: Some(5.0), clip_limit: 1.0, ..Default::default() });
    cfg.outer_iters = 60;
    cfg.trials = 3;
    cfg.seed = 11;
    cfg
}

/// Same seed, different thread counts: bitwise identical results and JSON.
pub fn check_determinism() -> Check {
    let b = problems::gen_piecewise_sinusoid::<f64>(4).map_err(|e| e.to_string())?;
    let set = TrainingSet::new(b.data, b.features, Family::Linear).unwrap();
    let cfg = small_sinusoid_fit_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_trials(&set, &cfg).unwrap())
    };
    let a = run(1);
    let b2 = run(4);
    let json = |f: &FitResult| {
        let mut v = Vec::new();
        f.to_json_writer(&mut v).unwrap();
        v
    };
    if a != b2 || json(&a) != json(&b2) {
        return Err("fits differ across runs".into());
    }

    let regen = problems::gen_piecewise_sinusoid::<f64>(4).unwrap();
    let again = problems::gen_piecewise_sinusoid::<f64>(4).unwrap();
    if regen.data != again.data {
        return Err("generator is not deterministic".into());
    }
    Ok("generator and 3-trial fit identical across 1 and 4 threads".into())
}
