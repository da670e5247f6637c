//! Vector autoregression fitted by per-equation least squares.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{dot, Qr};

/// Fitted VAR(p): `x_t = c + A_1 x_{t-1} + ... + A_p x_{t-p} + e_t`.
///
/// `coefs[l][(j, i)]` is the effect of variable `i` at lag `l + 1` on variable `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub order: usize,
    pub coefs: Vec<Array2<f64>>,
    pub intercept: Array1<f64>,
    /// Residual covariance `E^T E / n_eff`.
    pub sigma: Array2<f64>,
    pub n_eff: usize,
}

impl VarModel {
    pub fn n_vars(&self) -> usize {
        self.intercept.len()
    }
}

/// Information criterion for [`select_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoCriterion {
    Aic,
    Bic,
}

/// Column-major data matrix.
pub(crate) fn columns(data: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    data.columns().into_iter().map(|c| c.to_vec()).collect()
}

/// Intercept plus `order` lags of every variable in `vars`, over response rows
/// `first..n`. Lag blocks are laid out lag-major: lag 1 of each variable, then lag 2, ...
pub(crate) fn lag_design(
    cols: &[Vec<f64>],
    order: usize,
    first: usize,
    vars: impl Iterator<Item = usize> + Clone,
) -> Vec<Vec<f64>> {
    let n = cols[0].len();
    let rows = n - first;
    let mut design = vec![vec![1.0; rows]];
    for lag in 1..=order {
        for i in vars.clone() {
            design.push(cols[i][first - lag..n - lag].to_vec());
        }
    }
    design
}

fn check_samples(n: usize, n_vars: usize, order: usize, first: usize) -> Result<()> {
    let required = n_vars * order + 1;
    let available = n.saturating_sub(first);
    if n <= n_vars * order + 1 || available <= required {
        return Err(Error::InsufficientSamples {
            required,
            available,
        });
    }
    Ok(())
}

fn fit_rows(cols: &[Vec<f64>], order: usize, first: usize) -> Result<VarModel> {
    let v = cols.len();
    let n = cols[0].len();
    check_samples(n, v, order, first)?;
    let qr = Qr::factor(lag_design(cols, order, first, 0..v))?;
    let n_eff = n - first;
    let mut coefs = vec![Array2::zeros((v, v)); order];
    let mut intercept = Array1::zeros(v);
    let mut resid = Vec::with_capacity(v);
    for j in 0..v {
        let (b, e) = qr.solve(&cols[j][first..]);
        intercept[j] = b[0];
        for lag in 0..order {
            for i in 0..v {
                coefs[lag][(j, i)] = b[1 + lag * v + i];
            }
        }
        resid.push(e);
    }
    let mut sigma = Array2::zeros((v, v));
    for a in 0..v {
        for b in a..v {
            let s = dot(&resid[a], &resid[b]) / n_eff as f64;
            sigma[(a, b)] = s;
            sigma[(b, a)] = s;
        }
    }
    Ok(VarModel {
        order,
        coefs,
        intercept,
        sigma,
        n_eff,
    })
}

/// Fit a VAR of the given order to an `N × V` matrix (rows are time points).
pub fn fit_var(data: ArrayView2<'_, f64>, order: usize) -> Result<VarModel> {
    if order == 0 {
        return Err(Error::InvalidArgument("VAR order must be at least 1".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("data contains missing or non-finite values".into()));
    }
    let (n, v) = data.dim();
    check_samples(n, v, order, order)?;
    fit_rows(&columns(data), order, order)
}

fn log_det_spd(m: &Array2<f64>) -> f64 {
    // Cholesky; a non-positive pivot means a singular residual covariance.
    let k = m.nrows();
    let mut l = Array2::<f64>::zeros((k, k));
    let mut logdet = 0.0;
    for j in 0..k {
        let mut d = m[(j, j)];
        for c in 0..j {
            d -= l[(j, c)] * l[(j, c)];
        }
        if d <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        logdet += 2.0 * d.ln();
        for i in j + 1..k {
            let mut s = m[(i, j)];
            for c in 0..j {
                s -= l[(i, c)] * l[(j, c)];
            }
            l[(i, j)] = s / d;
        }
    }
    logdet
}

/// Order in `1..=max_order` minimizing the criterion, every candidate fitted on
/// the common sample (response rows `max_order..N`). Ties go to the smaller order.
pub fn select_order(
    data: ArrayView2<'_, f64>,
    max_order: usize,
    criterion: InfoCriterion,
) -> Result<usize> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("max_order must be at least 1".into()));
    }
    let (n, v) = data.dim();
    check_samples(n, v, max_order, max_order)?;
    let cols = columns(data);
    let t = (n - max_order) as f64;
    let mut best = (1, f64::INFINITY);
    for p in 1..=max_order {
        let model = fit_rows(&cols, p, max_order)?;
        let params = (p * v * v) as f64;
        let penalty = match criterion {
            InfoCriterion::Aic => 2.0 * params / t,
            InfoCriterion::Bic => t.ln() * params / t,
        };
        let value = log_det_spd(&model.sigma) + penalty;
        if value < best.1 {
            best = (p, value);
        }
    }
    Ok(best.0)
}
