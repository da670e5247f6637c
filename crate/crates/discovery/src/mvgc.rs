//! Conditional (multivariate) Granger causality.
//!
//! For an ordered pair `cause -> effect`, the full regression of `effect` uses
//! `p` lags of every variable; the restricted one drops all lags of `cause`.
//! Both are fitted on the same rows `p..N`.

use causalcast_core::{CausalEdge, CausalGraph, Correction, LagSpan, TimeSeriesFrame};
use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::linalg::{centered_ss, Qr};
use crate::stats::{benjamini_hochberg, f_sf};
use crate::var::{columns, lag_design};

/// Residual sums below this fraction of the response's centered sum of squares
/// are treated as an exact fit.
const DEGENERATE_RSS: f64 = 1e-20;

/// Which statistic a caller wants to read off a [`GcResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    LikelihoodRatio,
    F,
}

/// Outcome of one conditional Granger causality test.
#[derive(Debug, Clone, PartialEq)]
pub struct GcResult {
    pub cause: usize,
    pub effect: usize,
    /// `N_eff · ln(RSS_R / RSS_F)`.
    pub lr: f64,
    /// `((RSS_R − RSS_F) / p) / (RSS_F / (N_eff − k_full))`.
    pub f: f64,
    pub df_num: usize,
    pub df_den: usize,
    /// Upper tail of `F(df_num, df_den)` at `f`.
    pub p_value: f64,
    pub rss_full: f64,
    pub rss_restricted: f64,
    pub n_eff: usize,
    /// The full model fitted the effect exactly; statistics are `+inf`, `p = 0`.
    pub degenerate: bool,
}

impl GcResult {
    pub fn statistic(&self, kind: StatisticKind) -> f64 {
        match kind {
            StatisticKind::LikelihoodRatio => self.lr,
            StatisticKind::F => self.f,
        }
    }
}

fn check_pair(v: usize, cause: usize, effect: usize) -> Result<()> {
    if cause >= v || effect >= v {
        return Err(Error::InvalidArgument(format!(
            "variable index out of range for {v} variables"
        )));
    }
    if cause == effect {
        return Err(Error::SameCauseEffect(cause));
    }
    Ok(())
}

fn check_data(data: ArrayView2<'_, f64>, order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidArgument("lag order must be at least 1".into()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "data contains missing or non-finite values".into(),
        ));
    }
    let (n, v) = data.dim();
    let k_full = v * order + 1;
    if n <= order || n - order <= k_full {
        return Err(Error::InsufficientSamples {
            required: k_full,
            available: n.saturating_sub(order),
        });
    }
    Ok(())
}

fn compare(
    cause: usize,
    effect: usize,
    order: usize,
    k_full: usize,
    y: &[f64],
    rss_full: f64,
    rss_restricted: f64,
) -> GcResult {
    let n_eff = y.len();
    let df_den = n_eff - k_full;
    let degenerate = rss_full <= 0.0 || rss_full <= DEGENERATE_RSS * centered_ss(y);
    // The restricted model is nested, so RSS_R >= RSS_F up to rounding.
    let rss_restricted = rss_restricted.max(rss_full);
    let (lr, f, p_value) = if degenerate {
        (f64::INFINITY, f64::INFINITY, 0.0)
    } else {
        let lr = (n_eff as f64 * (rss_restricted / rss_full).ln()).max(0.0);
        let f = ((rss_restricted - rss_full) / order as f64) / (rss_full / df_den as f64);
        (lr, f, f_sf(f, order as f64, df_den as f64))
    };
    GcResult {
        cause,
        effect,
        lr,
        f,
        df_num: order,
        df_den,
        p_value,
        rss_full,
        rss_restricted,
        n_eff,
        degenerate,
    }
}

/// Test whether `cause` Granger-causes `effect` given all other variables.
pub fn gc_test(
    data: ArrayView2<'_, f64>,
    cause: usize,
    effect: usize,
    order: usize,
) -> Result<GcResult> {
    let v = data.ncols();
    check_pair(v, cause, effect)?;
    check_data(data, order)?;
    let cols = columns(data);
    let full = Qr::factor(lag_design(&cols, order, order, 0..v))?;
    let restricted = Qr::factor(lag_design(
        &cols,
        order,
        order,
        (0..v).filter(|&i| i != cause),
    ))?;
    let y = &cols[effect][order..];
    Ok(compare(
        cause,
        effect,
        order,
        v * order + 1,
        y,
        full.rss(y),
        restricted.rss(y),
    ))
}

/// All `V·(V−1)` ordered-pair tests, in `(cause, effect)` order.
///
/// The full design is shared by every pair and each restricted design by every
/// effect of one cause, so only `V + 1` factorizations are needed.
pub fn gc_all_pairs(data: ArrayView2<'_, f64>, order: usize) -> Result<Vec<GcResult>> {
    let v = data.ncols();
    if v < 2 {
        return Ok(Vec::new());
    }
    check_data(data, order)?;
    let cols = columns(data);
    let k_full = v * order + 1;
    let full = Qr::factor(lag_design(&cols, order, order, 0..v))?;
    let rss_full: Vec<f64> = (0..v).map(|j| full.rss(&cols[j][order..])).collect();
    let mut out = Vec::with_capacity(v * (v - 1));
    for cause in 0..v {
        let restricted = Qr::factor(lag_design(
            &cols,
            order,
            order,
            (0..v).filter(|&i| i != cause),
        ))?;
        for effect in (0..v).filter(|&j| j != cause) {
            let y = &cols[effect][order..];
            out.push(compare(
                cause,
                effect,
                order,
                k_full,
                y,
                rss_full[effect],
                restricted.rss(y),
            ));
        }
    }
    Ok(out)
}

/// Run every pairwise conditional test on `frame`, correct the p-values and
/// keep edges with corrected `p <= alpha`. Edges carry the lag block `1-order`
/// and the F statistic.
pub fn mvgc_graph(
    frame: &TimeSeriesFrame,
    order: usize,
    alpha: f64,
    correction: Correction,
) -> Result<CausalGraph> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let names: Vec<String> = frame.names().iter().map(|s| s.to_string()).collect();
    let data = frame.complete_values()?;
    let tests = gc_all_pairs(data, order)?;
    let raw: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    let corrected = match correction {
        Correction::None => raw.clone(),
        Correction::BenjaminiHochberg => benjamini_hochberg(&raw),
    };
    let edges = tests
        .iter()
        .zip(&corrected)
        .filter(|(_, &q)| q <= alpha)
        .map(|(t, &q)| CausalEdge {
            p_corrected: q,
            ..CausalEdge::new(t.cause, t.effect, LagSpan::block(1, order), t.f, t.p_value)
        })
        .collect();
    Ok(CausalGraph::new(names, "mvgc", alpha, correction, edges)?)
}

/// Causes of `target` in `graph` plus `target` itself, in variable order.
pub fn feature_select(graph: &CausalGraph, target: &str) -> Result<Vec<String>> {
    Ok(graph.select_features(target)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn noisy(n: usize, v: usize, seed: u64) -> Array2<f64> {
        // Small deterministic pseudo-noise; enough for shape and algebra checks.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Array2::from_shape_fn((n, v), |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn same_cause_and_effect_rejected() {
        let x = noisy(100, 3, 1);
        assert!(matches!(gc_test(x.view(), 1, 1, 2), Err(Error::SameCauseEffect(1))));
    }

    #[test]
    fn all_pairs_agrees_with_single_tests() {
        let x = noisy(300, 4, 7);
        let all = gc_all_pairs(x.view(), 2).unwrap();
        assert_eq!(all.len(), 12);
        for r in &all {
            let one = gc_test(x.view(), r.cause, r.effect, 2).unwrap();
            assert!((one.f - r.f).abs() <= 1e-10 * one.f.max(1.0));
            assert!((one.p_value - r.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn statistics_consistent() {
        let x = noisy(250, 3, 3);
        let r = gc_test(x.view(), 0, 2, 3).unwrap();
        assert_eq!(r.n_eff, 247);
        assert_eq!(r.df_num, 3);
        assert_eq!(r.df_den, 247 - 10);
        assert!(r.lr >= 0.0 && r.f >= 0.0);
        let lr = 247.0 * (r.rss_restricted / r.rss_full).ln();
        assert!((r.lr - lr).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn exact_fit_flagged_degenerate() {
        let n = 100;
        let mut x = Array2::zeros((n, 2));
        let noise = noisy(n, 1, 5);
        for t in 0..n {
            x[(t, 0)] = noise[(t, 0)];
            if t > 0 {
                x[(t, 1)] = 0.5 * x[(t - 1, 0)];
            }
        }
        let r = gc_test(x.view(), 0, 1, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert!(r.f.is_infinite() && r.lr.is_infinite());
    }

    #[test]
    fn single_variable_has_no_pairs() {
        let x = noisy(50, 1, 2);
        assert!(gc_all_pairs(x.view(), 2).unwrap().is_empty());
    }
}
