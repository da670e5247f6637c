//! Batched forward pass and backpropagation through time.
//!
//! Activations are kept time-major: row `t·B + b` holds sample `b` at step `t`,
//! so each step of the recurrences reads a contiguous `B`-row block and all
//! input projections are single matrix products over the whole sequence.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, ArrayView3, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::sigmoid;
use crate::error::{Error, Result};
use crate::params::{ForecastParams, ModelConfig};

/// Inverted-dropout multipliers (`0` or `1 / (1 − rate)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    /// `(L·B) × H_gru`, time-major, applied to the GRU output sequence.
    pub gru: Array2<f64>,
    /// `B × H_lstm`, applied to the final LSTM hidden state.
    pub lstm: Array2<f64>,
}

impl DropoutMasks {
    /// Masks that keep every unit unscaled.
    pub fn ones(config: &ModelConfig, batch: usize) -> Self {
        Self {
            gru: Array2::ones((config.lookback * batch, config.gru_units)),
            lstm: Array2::ones((batch, config.lstm_units)),
        }
    }

    /// Independent Bernoulli masks at the configured rate.
    pub fn sample<R: Rng>(config: &ModelConfig, batch: usize, rng: &mut R) -> Self {
        let rate = config.dropout;
        let keep = 1.0 - rate;
        let scale = 1.0 / keep;
        let mut draw = || if rng.random::<f64>() < keep { scale } else { 0.0 };
        let gru = Array2::from_shape_simple_fn((config.lookback * batch, config.gru_units), &mut draw);
        let lstm = Array2::from_shape_simple_fn((batch, config.lstm_units), &mut draw);
        Self { gru, lstm }
    }

    fn check(&self, config: &ModelConfig, batch: usize) -> Result<()> {
        if self.gru.dim() != (config.lookback * batch, config.gru_units)
            || self.lstm.dim() != (batch, config.lstm_units)
        {
            return Err(Error::Shape("dropout masks do not match the batch".into()));
        }
        Ok(())
    }
}

/// Intermediates of a forward pass, consumed by [`ForecastModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `(L·B) × D`
    x: Array2<f64>,
    /// `((L+1)·B) × H`; block 0 is the zero initial state.
    gru_h: Array2<f64>,
    gru_z: Array2<f64>,
    gru_r: Array2<f64>,
    gru_cand: Array2<f64>,
    /// GRU outputs after dropout, `(L·B) × H_gru`.
    lstm_in: Array2<f64>,
    lstm_h: Array2<f64>,
    lstm_c: Array2<f64>,
    /// Post-activation gates `[i | f | g | o]`.
    lstm_gates: Array2<f64>,
    lstm_tanh_c: Array2<f64>,
    masks: Option<DropoutMasks>,
    dense_in: Array2<f64>,
    dense_pre: Array2<f64>,
    dense_out: Array2<f64>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// The GRU → dropout → LSTM → dropout → dense(ReLU) → linear forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub config: ModelConfig,
    pub params: ForecastParams,
}

fn rows(t: usize, b: usize) -> ndarray::Slice {
    ndarray::Slice::from(t * b..(t + 1) * b)
}

fn finite(a: &Array2<f64>, layer: &'static str, timestep: usize) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation { layer, timestep })
    }
}

impl ForecastModel {
    pub fn new(config: ModelConfig, params: ForecastParams) -> Result<Self> {
        config.validate()?;
        params.check(&config)?;
        Ok(Self { config, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        Self::new(config, ForecastParams::zeros(&config))
    }

    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            params: ForecastParams::init(&config, rng),
            config,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    /// Forward pass over a `B × L × D` batch. With `masks` the pass runs in
    /// training mode; without, dropout is the identity.
    pub fn forward(
        &self,
        inputs: ArrayView3<'_, f64>,
        masks: Option<&DropoutMasks>,
    ) -> Result<(Array1<f64>, ForwardCache)> {
        let c = &self.config;
        let (b, l, d) = inputs.dim();
        if l != c.lookback || d != c.n_features {
            return Err(Error::Shape(format!(
                "window is {l} × {d}, model expects {} × {}",
                c.lookback, c.n_features
            )));
        }
        if let Some(m) = masks {
            m.check(c, b)?;
        }
        let p = &self.params;
        let (hg, hl) = (c.gru_units, c.lstm_units);

        let x = inputs
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((l * b, d))
            .expect("contiguous reshape");

        // GRU
        let gru_bias = &p.gru.bias + &p.gru.recurrent_bias;
        let xw = x.dot(&p.gru.kernel) + &gru_bias;
        let u_zr = p.gru.recurrent.slice(s![.., ..2 * hg]);
        let u_h = p.gru.recurrent.slice(s![.., 2 * hg..]);
        let mut gru_h = Array2::zeros(((l + 1) * b, hg));
        let mut gru_z = Array2::zeros((l * b, hg));
        let mut gru_r = Array2::zeros((l * b, hg));
        let mut gru_cand = Array2::zeros((l * b, hg));
        for t in 0..l {
            let h_prev = gru_h.slice_axis(Axis(0), rows(t, b)).to_owned();
            let xw_t = xw.slice_axis(Axis(0), rows(t, b));
            let hu = h_prev.dot(&u_zr);
            let z = (&xw_t.slice(s![.., ..hg]) + &hu.slice(s![.., ..hg])).mapv(sigmoid);
            let r = (&xw_t.slice(s![.., hg..2 * hg]) + &hu.slice(s![.., hg..])).mapv(sigmoid);
            let rh = &r * &h_prev;
            let cand = (&xw_t.slice(s![.., 2 * hg..]) + &rh.dot(&u_h)).mapv(f64::tanh);
            let mut h = cand.clone();
            Zip::from(&mut h)
                .and(&z)
                .and(&h_prev)
                .for_each(|hv, &zv, &hp| *hv = (1.0 - zv) * hp + zv * *hv);
            finite(&h, "GRU", t)?;
            gru_h.slice_axis_mut(Axis(0), rows(t + 1, b)).assign(&h);
            gru_z.slice_axis_mut(Axis(0), rows(t, b)).assign(&z);
            gru_r.slice_axis_mut(Axis(0), rows(t, b)).assign(&r);
            gru_cand.slice_axis_mut(Axis(0), rows(t, b)).assign(&cand);
        }

        // Dropout on the GRU sequence, then LSTM.
        let mut lstm_in = gru_h.slice(s![b.., ..]).to_owned();
        if let Some(m) = masks {
            lstm_in *= &m.gru;
        }
        let yk = lstm_in.dot(&p.lstm.kernel) + &p.lstm.bias;
        let mut lstm_h = Array2::zeros(((l + 1) * b, hl));
        let mut lstm_c = Array2::zeros(((l + 1) * b, hl));
        let mut lstm_gates = Array2::zeros((l * b, 4 * hl));
        let mut lstm_tanh_c = Array2::zeros((l * b, hl));
        for t in 0..l {
            let h_prev = lstm_h.slice_axis(Axis(0), rows(t, b));
            let c_prev = lstm_c.slice_axis(Axis(0), rows(t, b));
            let mut a = h_prev.dot(&p.lstm.recurrent);
            a += &yk.slice_axis(Axis(0), rows(t, b));
            a.slice_mut(s![.., ..2 * hl]).mapv_inplace(sigmoid);
            a.slice_mut(s![.., 2 * hl..3 * hl]).mapv_inplace(f64::tanh);
            a.slice_mut(s![.., 3 * hl..]).mapv_inplace(sigmoid);
            let i = a.slice(s![.., ..hl]);
            let f = a.slice(s![.., hl..2 * hl]);
            let g = a.slice(s![.., 2 * hl..3 * hl]);
            let o = a.slice(s![.., 3 * hl..]);
            let c_new = &f * &c_prev + &i * &g;
            let tc = c_new.mapv(f64::tanh);
            let h_new = &o * &tc;
            finite(&h_new, "LSTM", t)?;
            finite(&c_new, "LSTM", t)?;
            lstm_h.slice_axis_mut(Axis(0), rows(t + 1, b)).assign(&h_new);
            lstm_c.slice_axis_mut(Axis(0), rows(t + 1, b)).assign(&c_new);
            lstm_tanh_c.slice_axis_mut(Axis(0), rows(t, b)).assign(&tc);
            lstm_gates.slice_axis_mut(Axis(0), rows(t, b)).assign(&a);
        }

        // Dropout on the final state, dense ReLU, linear output.
        let mut dense_in = lstm_h.slice_axis(Axis(0), rows(l, b)).to_owned();
        if let Some(m) = masks {
            dense_in *= &m.lstm;
        }
        let dense_pre = dense_in.dot(&p.dense.weights) + &p.dense.bias;
        let dense_out = dense_pre.mapv(|v| v.max(0.0));
        finite(&dense_out, "dense", l - 1)?;
        let pred = dense_out.dot(&p.output.weights).column(0).to_owned() + p.output.bias[0];
        if pred.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation {
                layer: "output",
                timestep: l - 1,
            });
        }
        let cache = ForwardCache {
            batch: b,
            x,
            gru_h,
            gru_z,
            gru_r,
            gru_cand,
            lstm_in,
            lstm_h,
            lstm_c,
            lstm_gates,
            lstm_tanh_c,
            masks: masks.cloned(),
            dense_in,
            dense_pre,
            dense_out,
        };
        Ok((pred, cache))
    }

    /// Gradients of `Σ_b d_pred[b] · pred[b]` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, d_pred: ArrayView1<'_, f64>) -> Result<ForecastParams> {
        let c = &self.config;
        let b = cache.batch;
        let l = c.lookback;
        let (hg, hl) = (c.gru_units, c.lstm_units);
        if d_pred.len() != b {
            return Err(Error::Shape(format!(
                "upstream gradient has length {}, batch is {b}",
                d_pred.len()
            )));
        }
        if cache.x.dim() != (l * b, c.n_features) || cache.lstm_h.ncols() != hl || cache.gru_h.ncols() != hg {
            return Err(Error::Shape("forward cache does not belong to this model".into()));
        }
        let p = &self.params;
        let mut g = ForecastParams::zeros(c);

        // Output and dense layers.
        let dp = d_pred.to_owned().insert_axis(Axis(1));
        g.output.weights = cache.dense_out.t().dot(&dp);
        g.output.bias[0] = d_pred.sum();
        let mut d_pre = dp.dot(&p.output.weights.t());
        Zip::from(&mut d_pre)
            .and(&cache.dense_pre)
            .for_each(|d, &z| if z <= 0.0 { *d = 0.0 });
        g.dense.weights = cache.dense_in.t().dot(&d_pre);
        g.dense.bias = d_pre.sum_axis(Axis(0));
        let mut dh = d_pre.dot(&p.dense.weights.t());
        if let Some(m) = &cache.masks {
            dh *= &m.lstm;
        }

        // LSTM through time.
        let mut dc = Array2::<f64>::zeros((b, hl));
        let mut da_all = Array2::<f64>::zeros((l * b, 4 * hl));
        for t in (0..l).rev() {
            let gates = cache.lstm_gates.slice_axis(Axis(0), rows(t, b));
            let tc = cache.lstm_tanh_c.slice_axis(Axis(0), rows(t, b));
            let c_prev = cache.lstm_c.slice_axis(Axis(0), rows(t, b));
            let h_prev = cache.lstm_h.slice_axis(Axis(0), rows(t, b));
            let mut da = da_all.slice_axis_mut(Axis(0), rows(t, b));
            for r in 0..b {
                let gr = gates.row(r);
                let mut dar = da.row_mut(r);
                for k in 0..hl {
                    let (i, f, gg, o) = (gr[k], gr[hl + k], gr[2 * hl + k], gr[3 * hl + k]);
                    let tck = tc[(r, k)];
                    let dhk = dh[(r, k)];
                    let d_o = dhk * tck;
                    let dck = dc[(r, k)] + dhk * o * (1.0 - tck * tck);
                    dar[k] = dck * gg * i * (1.0 - i);
                    dar[hl + k] = dck * c_prev[(r, k)] * f * (1.0 - f);
                    dar[2 * hl + k] = dck * i * (1.0 - gg * gg);
                    dar[3 * hl + k] = d_o * o * (1.0 - o);
                    dc[(r, k)] = dck * f;
                }
            }
            let da = da_all.slice_axis(Axis(0), rows(t, b));
            g.lstm.recurrent += &h_prev.t().dot(&da);
            dh = da.dot(&p.lstm.recurrent.t());
        }
        g.lstm.kernel = cache.lstm_in.t().dot(&da_all);
        g.lstm.bias = da_all.sum_axis(Axis(0));
        let mut d_gru_out = da_all.dot(&p.lstm.kernel.t());
        if let Some(m) = &cache.masks {
            d_gru_out *= &m.gru;
        }

        // GRU through time.
        let u_zr = p.gru.recurrent.slice(s![.., ..2 * hg]);
        let u_h = p.gru.recurrent.slice(s![.., 2 * hg..]);
        let mut dh = Array2::<f64>::zeros((b, hg));
        let mut da_all = Array2::<f64>::zeros((l * b, 3 * hg));
        let mut d_u_zr = Array2::<f64>::zeros((hg, 2 * hg));
        let mut d_u_h = Array2::<f64>::zeros((hg, hg));
        for t in (0..l).rev() {
            dh += &d_gru_out.slice_axis(Axis(0), rows(t, b));
            let z = cache.gru_z.slice_axis(Axis(0), rows(t, b));
            let r = cache.gru_r.slice_axis(Axis(0), rows(t, b));
            let cand = cache.gru_cand.slice_axis(Axis(0), rows(t, b));
            let h_prev = cache.gru_h.slice_axis(Axis(0), rows(t, b));
            let mut da_h = Array2::<f64>::zeros((b, hg));
            let mut d_z = Array2::<f64>::zeros((b, hg));
            let mut dh_prev = Array2::<f64>::zeros((b, hg));
            Zip::from(&mut da_h)
                .and(&mut dh_prev)
                .and(&dh)
                .and(&z)
                .and(&cand)
                .for_each(|dah, dhp, &dhv, &zv, &cv| {
                    *dah = dhv * zv * (1.0 - cv * cv);
                    *dhp = dhv * (1.0 - zv);
                });
            Zip::from(&mut d_z)
                .and(&dh)
                .and(&z)
                .and(&cand)
                .and(&h_prev)
                .for_each(|dz, &dhv, &zv, &cv, &hp| *dz = dhv * (cv - hp) * zv * (1.0 - zv));
            let rh = &r * &h_prev;
            d_u_h += &rh.t().dot(&da_h);
            let d_rh = da_h.dot(&u_h.t());
            let mut da_r = &d_rh * &h_prev;
            Zip::from(&mut da_r).and(&r).for_each(|d, &rv| *d *= rv * (1.0 - rv));
            dh_prev += &(&d_rh * &r);
            let da_zr = concatenate![Axis(1), d_z, da_r];
            d_u_zr += &h_prev.t().dot(&da_zr);
            dh_prev += &da_zr.dot(&u_zr.t());
            let mut block = da_all.slice_axis_mut(Axis(0), rows(t, b));
            block.slice_mut(s![.., ..2 * hg]).assign(&da_zr);
            block.slice_mut(s![.., 2 * hg..]).assign(&da_h);
            dh = dh_prev;
        }
        g.gru.recurrent.slice_mut(s![.., ..2 * hg]).assign(&d_u_zr);
        g.gru.recurrent.slice_mut(s![.., 2 * hg..]).assign(&d_u_h);
        g.gru.kernel = cache.x.t().dot(&da_all);
        g.gru.bias = da_all.sum_axis(Axis(0));
        g.gru.recurrent_bias = g.gru.bias.clone();
        g.make_standard();
        Ok(g)
    }

    /// Single-window forward pass (`L × D`).
    pub fn forward_window(
        &self,
        window: ArrayView2<'_, f64>,
        masks: Option<&DropoutMasks>,
    ) -> Result<(f64, ForwardCache)> {
        let (pred, cache) = self.forward(window.insert_axis(Axis(0)), masks)?;
        Ok((pred[0], cache))
    }

    /// Single-window backward pass.
    pub fn backward_window(&self, cache: &ForwardCache, d_pred: f64) -> Result<ForecastParams> {
        self.backward(cache, ndarray::aview1(&[d_pred]))
    }

    /// Evaluation-mode predictions for a `S × L × D` array, in chunks.
    pub fn predict_array(&self, inputs: ArrayView3<'_, f64>) -> Result<Array1<f64>> {
        const CHUNK: usize = 256;
        let n = inputs.dim().0;
        let mut out = Array1::zeros(n);
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let (pred, _) = self.forward(inputs.slice(s![start..end, .., ..]), None)?;
            out.slice_mut(s![start..end]).assign(&pred);
            start = end;
        }
        if n == 0 && (inputs.dim().1 != self.config.lookback || inputs.dim().2 != self.config.n_features) {
            return Err(Error::Shape("window shape does not match the model".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{gru_step, lstm_step};
    use ndarray::Array3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelConfig {
        ModelConfig {
            n_features: 3,
            lookback: 4,
            gru_units: 4,
            lstm_units: 5,
            dense_units: 6,
            dropout: 0.2,
        }
    }

    fn random_model(seed: u64) -> ForecastModel {
        let c = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ForecastParams::init(&c, &mut rng);
        for s in p.slices_mut() {
            for v in s.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        ForecastModel::new(c, p).unwrap()
    }

    fn random_inputs(b: usize, seed: u64) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_simple_fn((b, 4, 3), || rng.random_range(-1.5..1.5))
    }

    #[test]
    fn batched_forward_matches_cell_reference() {
        let m = random_model(3);
        let x = random_inputs(5, 4);
        let (pred, _) = m.forward(x.view(), None).unwrap();
        for s in 0..5 {
            let mut h = Array1::zeros(4);
            let mut hl = Array1::zeros(5);
            let mut cl = Array1::zeros(5);
            for t in 0..4 {
                h = gru_step(&m.params.gru, x.slice(s![s, t, ..]), h.view()).unwrap();
                let (a, b) = lstm_step(&m.params.lstm, h.view(), hl.view(), cl.view()).unwrap();
                hl = a;
                cl = b;
            }
            let dense = (hl.dot(&m.params.dense.weights) + &m.params.dense.bias).mapv(|v| v.max(0.0));
            let y = dense.dot(&m.params.output.weights.column(0)) + m.params.output.bias[0];
            assert!((y - pred[s]).abs() < 1e-13, "{y} vs {}", pred[s]);
        }
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = ForecastModel::zeros(tiny()).unwrap();
        let (pred, _) = m.forward(random_inputs(3, 1).view(), None).unwrap();
        assert!(pred.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let m = random_model(5);
        let masks = DropoutMasks::sample(&m.config, 2, &mut ChaCha8Rng::seed_from_u64(0));
        let (_, cache) = m.forward(random_inputs(2, 2).view(), Some(&masks)).unwrap();
        let g = m.backward(&cache, ndarray::aview1(&[0.0, 0.0])).unwrap();
        assert!(g.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn blocked_gru_path_has_zero_gru_gradient() {
        let m = random_model(6);
        let mut masks = DropoutMasks::sample(&m.config, 2, &mut ChaCha8Rng::seed_from_u64(1));
        masks.gru.fill(0.0);
        let (_, cache) = m.forward(random_inputs(2, 3).view(), Some(&masks)).unwrap();
        let g = m.backward(&cache, ndarray::aview1(&[1.0, -0.5])).unwrap();
        for s in &g.slices()[..4] {
            assert!(s.iter().all(|&v| v == 0.0));
        }
        assert!(g.lstm.bias.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = random_model(1);
        let bad = Array3::<f64>::zeros((2, 5, 3));
        assert!(matches!(m.forward(bad.view(), None), Err(Error::Shape(_))));
        let (_, cache) = m.forward(random_inputs(2, 1).view(), None).unwrap();
        assert!(m.backward(&cache, ndarray::aview1(&[1.0])).is_err());
    }

    #[test]
    fn non_finite_input_reported() {
        let m = random_model(2);
        let mut x = random_inputs(1, 0);
        x[(0, 2, 1)] = f64::NAN;
        assert!(matches!(
            m.forward(x.view(), None),
            Err(Error::NonFiniteActivation { layer: "GRU", timestep: 2 })
        ));
    }

    #[test]
    fn inverted_dropout_preserves_mean() {
        let c = ModelConfig {
            lookback: 1,
            ..tiny()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut total = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let m = DropoutMasks::sample(&c, 1000, &mut rng);
            total += m.lstm.sum();
            count += m.lstm.len();
        }
        let mean = total / count as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }
}
