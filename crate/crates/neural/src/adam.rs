//! Adam optimizer over [`ForecastParams`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ForecastParams, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

/// Moment estimates with the same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: ForecastParams,
    pub v: ForecastParams,
}

impl AdamState {
    pub fn new(model: &ModelConfig, config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: ForecastParams::zeros(model),
            v: ForecastParams::zeros(model),
        }
    }

    /// One update. Nothing is modified when a gradient is non-finite or
    /// shapes disagree.
    pub fn step(&mut self, params: &mut ForecastParams, grads: &ForecastParams) -> Result<()> {
        let gs = grads.slices();
        let ms = self.m.slices();
        let ps = params.slices();
        if gs.len() != ms.len() || gs.iter().zip(&ms).zip(&ps).any(|((g, m), p)| g.len() != m.len() || p.len() != m.len()) {
            return Err(Error::Shape("gradient shapes do not match the optimizer state".into()));
        }
        if let Some(tensor) = gs.iter().position(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteGradient { tensor });
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for ((p, g), (m, v)) in params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()))
        {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_features: 1,
            lookback: 1,
            gru_units: 1,
            lstm_units: 1,
            dense_units: 1,
            dropout: 0.0,
        }
    }

    #[test]
    fn first_step_closed_form() {
        let c = cfg();
        let mut adam = AdamState::new(&c, AdamConfig::default());
        let mut p = ForecastParams::zeros(&c);
        let mut g = ForecastParams::zeros(&c);
        g.output.bias[0] = 0.5;
        g.dense.bias[0] = 500.0;
        adam.step(&mut p, &g).unwrap();
        assert_eq!(adam.t, 1);
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε).
        let expect = -1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((p.output.bias[0] - expect).abs() < 1e-18);
        assert!((p.output.bias[0] + 9.999_999_8e-4).abs() < 1e-12);
        assert!((p.dense.bias[0] - p.output.bias[0]).abs() < 1e-10);
        assert_eq!(p.gru.kernel[(0, 0)], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let c = cfg();
        let mut adam = AdamState::new(&c, AdamConfig::default());
        let mut p = ForecastParams::zeros(&c);
        p.lstm.bias.fill(0.3);
        let before = p.clone();
        let g = ForecastParams::zeros(&c);
        for _ in 0..5 {
            adam.step(&mut p, &g).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let c = cfg();
        let mut adam = AdamState::new(&c, AdamConfig::default());
        let mut p = ForecastParams::zeros(&c);
        let mut g = ForecastParams::zeros(&c);
        g.lstm.recurrent[(0, 2)] = f64::INFINITY;
        assert!(matches!(adam.step(&mut p, &g), Err(Error::NonFiniteGradient { tensor: 5 })));
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn second_moment_nonnegative() {
        let c = cfg();
        let mut adam = AdamState::new(&c, AdamConfig::default());
        let mut p = ForecastParams::zeros(&c);
        let mut g = ForecastParams::zeros(&c);
        for k in 0..20 {
            g.gru.kernel.fill(if k % 2 == 0 { -1.5 } else { 0.7 });
            adam.step(&mut p, &g).unwrap();
            assert!(adam.v.slices().iter().all(|s| s.iter().all(|&v| v >= 0.0)));
        }
    }
}
