//! Single-step recurrent cells on plain vectors.

use ndarray::{s, Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::params::{GruParams, LstmParams};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Shape(format!("{what} has length {got}, expected {want}")))
    }
}

/// One GRU step:
/// `z = σ(x W_z + h U_z + b_z)`, `r = σ(x W_r + h U_r + b_r)`,
/// `h̃ = tanh(x W_h + (r ⊙ h) U_h + b_h)`, `h' = (1 − z) ⊙ h + z ⊙ h̃`.
pub fn gru_step(p: &GruParams, x: ArrayView1<'_, f64>, h: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let units = p.recurrent.nrows();
    check("GRU input", x.len(), p.kernel.nrows())?;
    check("GRU state", h.len(), units)?;
    let bias = &p.bias + &p.recurrent_bias;
    let xw = x.dot(&p.kernel) + &bias;
    let hu = h.dot(&p.recurrent.slice(s![.., ..2 * units]));
    let z = (&xw.slice(s![..units]) + &hu.slice(s![..units])).mapv(sigmoid);
    let r = (&xw.slice(s![units..2 * units]) + &hu.slice(s![units..])).mapv(sigmoid);
    let rh = &r * &h;
    let cand = (&xw.slice(s![2 * units..]) + &rh.dot(&p.recurrent.slice(s![.., 2 * units..])))
        .mapv(f64::tanh);
    Ok((1.0 - &z) * &h + &z * &cand)
}

/// One LSTM step:
/// `i, f, o = σ(·)`, `g = tanh(·)`, `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.
pub fn lstm_step(
    p: &LstmParams,
    x: ArrayView1<'_, f64>,
    h: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let units = p.recurrent.nrows();
    check("LSTM input", x.len(), p.kernel.nrows())?;
    check("LSTM hidden state", h.len(), units)?;
    check("LSTM cell state", c.len(), units)?;
    let a = x.dot(&p.kernel) + h.dot(&p.recurrent) + &p.bias;
    let i = a.slice(s![..units]).mapv(sigmoid);
    let f = a.slice(s![units..2 * units]).mapv(sigmoid);
    let g = a.slice(s![2 * units..3 * units]).mapv(f64::tanh);
    let o = a.slice(s![3 * units..]).mapv(sigmoid);
    let c_next = &f * &c + &i * &g;
    let h_next = &o * &c_next.mapv(f64::tanh);
    Ok((h_next, c_next))
}
