//! Reference distributions and multiple-testing correction.

use statrs::function::beta::beta_reg;

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    // I_{d2 / (d2 + d1 f)}(d2/2, d1/2), written without the 1 - x cancellation.
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Two-sided standard normal tail `2 (1 - Phi(|z|))`.
pub fn normal_two_sided(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Benjamini-Hochberg adjusted p-values, returned in input order.
///
/// `q_(i) = min_{j >= i} p_(j) * m / j`, capped at 1.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let q = p[i] * m as f64 / (rank + 1) as f64;
        running = running.min(q);
        // Guard against p * m / m rounding below p.
        adjusted[i] = running.min(1.0).max(p[i]);
    }
    adjusted
}
