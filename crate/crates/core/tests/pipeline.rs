mod common;

use clsm::*;

fn sinusoid_set(seed: u64) -> TrainingSet {
    let b = problems::gen_piecewise_sinusoid::<f64>(seed).unwrap();
    TrainingSet::new(b.data, b.features, Family::Linear).unwrap()
}

#[test]
fn single_model_collapses_to_least_squares() {
    println!("{}", common::check_collapse(9).unwrap());
}

#[test]
fn pipeline_is_seed_deterministic() {
    println!("{}", common::check_determinism().unwrap());
}

#[test]
fn run_trials_keeps_the_lowest_training_mse() {
    let set = sinusoid_set(2);
    let mut cfg = common::small_sinusoid_fit_config();
    cfg.trials = 5;
    let best = run_trials(&set, &cfg).unwrap();
    let singles: Vec<FitResult> = (0..5).map(|t| fit_ensemble(&set, &cfg, cfg.seed + t).unwrap()).collect();
    let mses: Vec<f64> = singles.iter().map(|f| f.training_mse()).collect();
    let min = mses.iter().copied().fold(f64::INFINITY, f64::min);
    let first = mses.iter().position(|&m| m == min).unwrap();
    assert_eq!(best.trial_seed, cfg.seed + first as u64);
    assert_eq!(best.trial_mse, mses.iter().map(|&m| Some(m)).collect::<Vec<_>>());
    assert_eq!(best.models, singles[first].models);
    assert_eq!(best.labels, singles[first].labels);
}

#[test]
fn fit_json_round_trip_reproduces_assignments() {
    let set = sinusoid_set(1);
    let fit = run_trials(&set, &common::small_sinusoid_fit_config()).unwrap();
    let mut json = Vec::new();
    fit.to_json_writer(&mut json).unwrap();
    let back = FitResult::from_json_reader(json.as_slice()).unwrap();
    assert_eq!(back, fit);

    let mut csv = Vec::new();
    fit.write_assignments_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let pred = composite_predict(&back, set.data().inputs(), PredictMode::Hard).unwrap();
    for (i, line) in text.lines().skip(1).enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0].parse::<usize>().unwrap(), i);
        assert_eq!(cells[1].parse::<usize>().unwrap(), fit.labels[i]);
        let y_hat: f64 = cells.last().unwrap().parse().unwrap();
        assert!((y_hat - pred[i]).abs() <= 1e-9, "row {i}");
    }
}

#[test]
fn hard_prediction_on_training_points_uses_their_labels() {
    let set = sinusoid_set(3);
    let fit = run_trials(&set, &common::small_sinusoid_fit_config()).unwrap();
    let feats = set.features().unwrap().eval_matrix(set.data().inputs()).unwrap();
    let per_model: Vec<_> = fit.models.iter().map(|m| m.predict(feats.view()).unwrap()).collect();
    let hard = composite_predict(&fit, set.data().inputs(), PredictMode::Hard).unwrap();
    for i in 0..set.n_obs() {
        assert_eq!(hard[i], per_model[fit.labels[i]][i]);
    }
}

#[test]
fn f32_pipeline_runs() {
    let b = problems::gen_oscillator2::<f32>().unwrap();
    let set = TrainingSetF32::new(b.data, b.features, Family::Linear).unwrap();
    let mut cfg = EnsembleConfigF32::linear(2, 1e-4);
    cfg.outer_iters = 20;
    let fit = run_trials(&set, &cfg).unwrap();
    assert!(fit.training_mse().is_finite());
    assert_eq!(fit.labels.len(), 200);
}

#[test]
fn mlp_ensemble_trains_and_reports_medians() {
    let b = problems::gen_flame_surrogate::<f64>(0, 400).unwrap();
    let set = TrainingSet::new(b.data.clone(), None, Family::Mlp).unwrap();
    let mut cfg = EnsembleConfig::mlp(2, vec![8, 8]);
    cfg.outer_iters = 10;
    let fit = run_trials(&set, &cfg).unwrap();
    assert!(fit.training_mse() < fit.loss_history[0]);
    assert!(matches!(report_equations(&fit, DISPLAY_THRESHOLD), Err(ClsmError::UnsupportedFamily(_))));
    let soft = composite_mse(&fit, &b.data, PredictMode::Soft).unwrap();
    assert!(soft.is_finite());
}

#[test]
fn family_mismatch_is_rejected() {
    let set = sinusoid_set(0);
    let cfg = EnsembleConfig::mlp(2, vec![4]);
    assert!(matches!(fit_ensemble(&set, &cfg, 0), Err(ClsmError::Config(_))));
}
