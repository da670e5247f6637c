//! Linear partial correlation with Fisher-z significance.

use crate::error::{Error, Result};
use crate::linalg::{centered_ss, dot, Qr};
use crate::stats::normal_two_sided;

/// Residual sums below this fraction of the centered sum of squares count as zero.
const DEGENERATE_SS: f64 = 1e-20;

/// Outcome of a partial-correlation conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    /// Partial correlation in `[-1, 1]`.
    pub r: f64,
    /// Number of paired observations.
    pub n: usize,
    /// Effective number of conditioning columns (after dropping dependent ones).
    pub k: usize,
    pub p_value: f64,
    /// A residual vector vanished; `r` is reported as 0.
    pub degenerate: bool,
}

/// Partial correlation of `x` and `y` given the columns `z`, with a flag for
/// vanishing residual variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialCorrelation {
    pub r: f64,
    pub k: usize,
    pub degenerate: bool,
}

fn residual_corr(x: &[f64], y: &[f64], z: &[&[f64]]) -> Result<PartialCorrelation> {
    let n = x.len();
    if y.len() != n || z.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "x, y and conditioning columns differ in length".into(),
        ));
    }
    if n <= z.len() + 3 {
        return Err(Error::InsufficientSamples {
            required: z.len() + 4,
            available: n,
        });
    }
    let mut design = Vec::with_capacity(z.len() + 1);
    design.push(vec![1.0; n]);
    design.extend(z.iter().map(|c| c.to_vec()));
    let qr = Qr::factor_dropping_dependent(design);
    let k = qr.rank() - 1;
    let rx = qr.residuals(x);
    let ry = qr.residuals(y);
    let sxx = dot(&rx, &rx);
    let syy = dot(&ry, &ry);
    if sxx <= DEGENERATE_SS * centered_ss(x) || syy <= DEGENERATE_SS * centered_ss(y) || sxx == 0.0 || syy == 0.0 {
        return Ok(PartialCorrelation {
            r: 0.0,
            k,
            degenerate: true,
        });
    }
    let r = (dot(&rx, &ry) / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(PartialCorrelation {
        r,
        k,
        degenerate: false,
    })
}

/// Pearson correlation of the residuals of `x` and `y` after least-squares
/// regression on `[1, z]`.
pub fn parcorr(x: &[f64], y: &[f64], z: &[&[f64]]) -> Result<PartialCorrelation> {
    residual_corr(x, y, z)
}

/// Two-sided Fisher-z p-value for a partial correlation `r` from `n`
/// observations with `k` conditioning variables.
pub fn ci_pvalue(r: f64, n: usize, k: usize) -> Result<f64> {
    if n <= k + 3 {
        return Err(Error::InsufficientSamples {
            required: k + 4,
            available: n,
        });
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("correlation {r} outside [-1, 1]")));
    }
    if r.abs() >= 1.0 {
        return Ok(0.0);
    }
    let z = ((n - k - 3) as f64).sqrt() * r.abs().atanh();
    Ok(normal_two_sided(z))
}

/// Test `x ⊥ y | z`. A degenerate test reports `r = 0` and `p = 1`.
pub fn ci_test(x: &[f64], y: &[f64], z: &[&[f64]]) -> Result<CiTestResult> {
    let pc = residual_corr(x, y, z)?;
    let n = x.len();
    let p_value = if pc.degenerate {
        1.0
    } else {
        ci_pvalue(pc.r, n, pc.k)?
    };
    Ok(CiTestResult {
        r: pc.r,
        n,
        k: pc.k,
        p_value,
        degenerate: pc.degenerate,
    })
}
