use std::time::Instant;

use causalcast_core::{Cadence, NormalizationParams, SupervisedWindows, TimeSeriesFrame, make_windows};
use causalcast_neural::{fit, Checkpoint, ForecastModel, ModelConfig, TrainConfig};
use ndarray::{Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn ar1_windows(samples: usize, lookback: usize, seed: u64) -> SupervisedWindows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let n = samples + lookback;
    let mut y = vec![0.0; n + 50];
    for t in 1..y.len() {
        y[t] = 0.9 * y[t - 1] + noise.sample(&mut rng);
    }
    let values = Array2::from_shape_vec((n, 1), y[50..].to_vec()).unwrap();
    let frame = TimeSeriesFrame::from_matrix(&["y"], values, Default::default(), Cadence::Daily).unwrap();
    make_windows(&frame, &["y"], "y", lookback, 1).unwrap()
}

fn empty_like(w: &SupervisedWindows) -> SupervisedWindows {
    SupervisedWindows::empty(w.features.clone(), w.target.clone(), w.lookback, w.horizon)
}

#[test]
fn ar1_training_reduces_loss() {
    let mut ratios: Vec<f64> = (0..5)
        .map(|seed| {
            let train = ar1_windows(200, 21, 10 + seed);
            let model = ForecastModel::init_seeded(ModelConfig::paper(1), seed).unwrap();
            let config = TrainConfig {
                max_epochs: 50,
                seed,
                ..TrainConfig::default()
            };
            let start = Instant::now();
            let (trained, history) = fit(&model, &train, &empty_like(&train), &config).unwrap();
            assert_eq!(history.epochs(), 50);
            let ratio = trained.mse(&train).unwrap() / history.initial_train_loss;
            println!("seed {seed}: ratio {ratio:.4} in {:.2?}", start.elapsed());
            ratio
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    assert!(ratios[2] < 0.25, "median ratio {}", ratios[2]);
}

#[test]
fn constant_zero_target_stays_optimal() {
    let config = ModelConfig {
        lookback: 5,
        ..ModelConfig::paper(2)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let inputs = Array3::from_shape_simple_fn((40, 5, 2), || normal.sample(&mut rng));
    let w = SupervisedWindows {
        inputs,
        targets: Array1::zeros(40),
        features: vec!["a".into(), "b".into()],
        target: "a".into(),
        lookback: 5,
        horizon: 1,
    };
    let model = ForecastModel::zeros(config).unwrap();
    let (trained, h) = fit(&model, &w, &w, &TrainConfig::default()).unwrap();
    assert_eq!(h.initial_train_loss, 0.0);
    assert!(h.train_loss.iter().all(|&l| l == 0.0));
    assert!(h.stopped_early);
    assert_eq!(h.epochs(), 11);
    assert_eq!(h.best_epoch, 1);
    assert_eq!(trained.mse(&w).unwrap(), 0.0);
}

#[test]
fn patience_zero_restores_first_epoch() {
    // Predictions start near -2 and training pulls them up towards +1, away
    // from the validation target -10.
    let mut train = ar1_windows(120, 4, 1);
    train.targets.fill(1.0);
    let mut val = train.clone();
    val.targets.fill(-10.0);
    let config = ModelConfig {
        lookback: 4,
        dropout: 0.0,
        ..ModelConfig::paper(1)
    };
    let mut model = ForecastModel::init_seeded(config, 3).unwrap();
    model.params.output.bias[0] = -2.0;
    let tc = TrainConfig {
        patience: 0,
        max_epochs: 30,
        min_delta: 0.0,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let (restored, h) = fit(&model, &train, &val, &tc).unwrap();
    assert_eq!(h.val_loss.len(), 2, "{:?}", h.val_loss);
    assert!(h.val_loss[1] > h.val_loss[0]);
    assert_eq!((h.epochs(), h.best_epoch, h.stopped_early), (2, 1, true));
    let one = TrainConfig { max_epochs: 1, ..tc };
    let (after_one, _) = fit(&model, &train, &val, &one).unwrap();
    assert_eq!(restored, after_one);
}

#[test]
fn fit_is_bit_reproducible() {
    let train = ar1_windows(80, 6, 5);
    let val = ar1_windows(20, 6, 6);
    let config = ModelConfig {
        lookback: 6,
        ..ModelConfig::paper(1)
    };
    let tc = TrainConfig {
        max_epochs: 4,
        batch_size: 16,
        seed: 11,
        ..TrainConfig::default()
    };
    let run = || {
        let m = ForecastModel::init_seeded(config, 11).unwrap();
        fit(&m, &train, &val, &tc).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let (c, _) = fit(
        &ForecastModel::init_seeded(config, 11).unwrap(),
        &train,
        &val,
        &TrainConfig { seed: 12, ..tc },
    )
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn empty_training_rejected() {
    let w = ar1_windows(10, 3, 0);
    let model = ForecastModel::init_seeded(ModelConfig { lookback: 3, ..ModelConfig::paper(1) }, 0).unwrap();
    assert!(matches!(
        fit(&model, &empty_like(&w), &w, &TrainConfig::default()),
        Err(causalcast_neural::Error::EmptyTraining)
    ));
}

#[test]
fn predict_shape_checked_and_deterministic() {
    let w = ar1_windows(30, 3, 0);
    let model = ForecastModel::init_seeded(ModelConfig { lookback: 3, ..ModelConfig::paper(1) }, 0).unwrap();
    let a = model.predict(&w).unwrap();
    assert_eq!(a, model.predict(&w).unwrap());
    let zero = ForecastModel::zeros(model.config).unwrap().predict(&w).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let bad = ar1_windows(30, 4, 0);
    assert!(model.predict(&bad).is_err());
}

#[test]
fn checkpoint_round_trip_predicts_identically() {
    let w = ar1_windows(30, 3, 7);
    let model = ForecastModel::init_seeded(ModelConfig { lookback: 3, ..ModelConfig::paper(1) }, 7).unwrap();
    let norm = NormalizationParams {
        names: vec!["y".into()],
        mean: vec![0.125],
        std: vec![1.0 / 3.0],
    };
    let ck = Checkpoint::new(model.clone(), vec!["y".into()], "y".into(), 1, Some(norm));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let a = model.predict(&w).unwrap();
    let b = back.model.predict(&w).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    let mut bad = ck.clone();
    bad.version = 99;
    assert!(Checkpoint::from_json(&bad.to_json().unwrap()).is_err());
}
