use causalcast_neural::{
    gru_step, lstm_step, parameter_count, AdamConfig, AdamState, DropoutMasks, ForecastParams,
    ModelConfig,
};
use ndarray::Array1;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(d: usize, h: usize, dropout: f64) -> ModelConfig {
    ModelConfig {
        n_features: d,
        lookback: 3,
        gru_units: h,
        lstm_units: h + 1,
        dense_units: 2,
        dropout,
    }
}

fn filled(config: &ModelConfig, values: &[f64]) -> ForecastParams {
    let mut p = ForecastParams::zeros(config);
    let mut k = 0;
    for t in p.slices_mut() {
        for v in t.iter_mut() {
            *v = values[k % values.len()];
            k += 1;
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adam_first_step_is_bounded_by_learning_rate(
        g in prop::collection::vec(prop_oneof![-1e3f64..-1e-6, 1e-6f64..1e3], 1..20),
        lr in 1e-5f64..1e-1,
    ) {
        let config = tiny(2, 2, 0.0);
        let adam = AdamConfig { lr, ..AdamConfig::default() };
        let mut state = AdamState::new(&config, adam);
        let mut params = ForecastParams::zeros(&config);
        let grads = filled(&config, &g);
        state.step(&mut params, &grads).unwrap();
        for (p, g) in params.slices().iter().zip(grads.slices()) {
            for (&p, &g) in p.iter().zip(g) {
                let want = -lr * g / (g.abs() + 1e-8);
                prop_assert!((p - want).abs() <= 1e-12 * lr);
                prop_assert!(p.abs() <= lr);
            }
        }
    }

    #[test]
    fn dropout_masks_take_two_values(rate in 0.0f64..0.9, seed in 0u64..1000, batch in 1usize..5) {
        let config = tiny(2, 3, rate);
        let masks = DropoutMasks::sample(&config, batch, &mut ChaCha8Rng::seed_from_u64(seed));
        let scale = 1.0 / (1.0 - rate);
        prop_assert!(masks.gru.iter().chain(masks.lstm.iter()).all(|&m| m == 0.0 || m == scale));
        prop_assert_eq!(masks.gru.dim(), (3 * batch, 3));
        prop_assert_eq!(masks.lstm.dim(), (batch, 4));
    }

    #[test]
    fn gru_state_stays_between_previous_state_and_candidate(
        w in prop::collection::vec(-3.0f64..3.0, 1..40),
        x in prop::collection::vec(-5.0f64..5.0, 2),
        h in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let p = filled(&tiny(2, 3, 0.0), &w);
        let next = gru_step(&p.gru, Array1::from(x).view(), Array1::from(h.clone()).view()).unwrap();
        for (n, h) in next.iter().zip(&h) {
            prop_assert!(n.abs() <= h.abs().max(1.0) + 1e-12);
        }
    }

    #[test]
    fn lstm_hidden_state_is_bounded(
        w in prop::collection::vec(-3.0f64..3.0, 1..40),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        h in prop::collection::vec(-1.0f64..1.0, 4),
        c in prop::collection::vec(-4.0f64..4.0, 4),
    ) {
        let p = filled(&tiny(2, 3, 0.0), &w);
        let (h_next, c_next) = lstm_step(
            &p.lstm,
            Array1::from(x).view(),
            Array1::from(h).view(),
            Array1::from(c.clone()).view(),
        )
        .unwrap();
        prop_assert!(h_next.iter().all(|v| v.abs() < 1.0));
        for (n, c) in c_next.iter().zip(&c) {
            prop_assert!(n.abs() <= c.abs() + 1.0);
        }
    }

    #[test]
    fn parameter_count_grows_by_one_gru_column_block(v in 1usize..200) {
        prop_assert_eq!(parameter_count(v + 1) - parameter_count(v), 3 * 64);
    }
}
