//! Householder QR least squares over column-major designs.
//!
//! Regression designs here are tall and thin (thousands of rows, up to a few
//! hundred regressors); storing columns contiguously keeps every reflector
//! application a pair of contiguous dot/axpy sweeps.

use crate::error::{Error, Result};

/// Columns whose diagonal of `R` falls below this fraction of their original
/// norm are treated as linearly dependent on the preceding columns.
const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization `X = Q R` kept in compact Householder form.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    /// Householder vectors; `reflectors[j]` has length `n - j`.
    reflectors: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// Upper triangle of `R`, column by column: `r[j]` holds rows `0..=j`.
    r: Vec<Vec<f64>>,
    /// Indices (into the original design) of the columns that were kept.
    kept: Vec<usize>,
}

impl Qr {
    /// Factor a full-rank design; a dependent column is an error.
    pub fn factor(columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::factor_impl(columns, true)
    }

    /// Factor a design, silently dropping columns that are linearly dependent
    /// on earlier ones. Fitted values and residuals are unaffected.
    pub fn factor_dropping_dependent(columns: Vec<Vec<f64>>) -> Self {
        Self::factor_impl(columns, false).expect("lenient factorization cannot fail")
    }

    fn factor_impl(columns: Vec<Vec<f64>>, strict: bool) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        debug_assert!(columns.iter().all(|c| c.len() == n));
        let mut qr = Qr {
            n,
            reflectors: Vec::with_capacity(columns.len()),
            betas: Vec::with_capacity(columns.len()),
            r: Vec::with_capacity(columns.len()),
            kept: Vec::with_capacity(columns.len()),
        };
        for (idx, mut col) in columns.into_iter().enumerate() {
            let norm0 = dot(&col, &col).sqrt();
            // Project out the reflectors accumulated so far.
            qr.apply_qt(&mut col);
            let j = qr.kept.len();
            if j >= n {
                if strict {
                    return Err(Error::RankDeficient { column: idx });
                }
                continue;
            }
            let tail = &col[j..];
            let alpha_norm = dot(tail, tail).sqrt();
            if norm0 == 0.0 || alpha_norm <= RANK_TOL * norm0 {
                if strict {
                    return Err(Error::RankDeficient { column: idx });
                }
                continue;
            }
            let alpha = if tail[0] > 0.0 { -alpha_norm } else { alpha_norm };
            let mut v = tail.to_vec();
            v[0] -= alpha;
            let vtv = dot(&v, &v);
            let mut rcol = col[..j].to_vec();
            rcol.push(alpha);
            qr.reflectors.push(v);
            qr.betas.push(2.0 / vtv);
            qr.r.push(rcol);
            qr.kept.push(idx);
        }
        Ok(qr)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    /// Number of independent columns retained.
    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn kept_columns(&self) -> &[usize] {
        &self.kept
    }

    /// Overwrite `y` with `Q^T y`.
    fn apply_qt(&self, y: &mut [f64]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            let seg = &mut y[j..];
            let w = beta * dot(v, seg);
            axpy(-w, v, seg);
        }
    }

    /// Overwrite `y` with `Q y`.
    fn apply_q(&self, y: &mut [f64]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            let seg = &mut y[j..];
            let w = beta * dot(v, seg);
            axpy(-w, v, seg);
        }
    }

    /// Least-squares coefficients (over the kept columns) and residual vector.
    pub fn solve(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(y.len(), self.n, "response length differs from design rows");
        let k = self.rank();
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut coef = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = qty[i];
            for c in i + 1..k {
                s -= self.r[c][i] * coef[c];
            }
            coef[i] = s / self.r[i][i];
        }
        let mut resid = qty;
        resid[..k].iter_mut().for_each(|x| *x = 0.0);
        self.apply_q(&mut resid);
        (coef, resid)
    }

    /// Residual of `y` after projection onto the column space.
    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        let k = self.rank();
        let mut r = y.to_vec();
        self.apply_qt(&mut r);
        r[..k].iter_mut().for_each(|x| *x = 0.0);
        self.apply_q(&mut r);
        r
    }

    /// Residual sum of squares of `y`.
    pub fn rss(&self, y: &[f64]) -> f64 {
        let k = self.rank();
        let mut r = y.to_vec();
        self.apply_qt(&mut r);
        dot(&r[k..], &r[k..])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Sum of squared deviations from the mean.
pub(crate) fn centered_ss(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m) * (v - m)).sum()
}
