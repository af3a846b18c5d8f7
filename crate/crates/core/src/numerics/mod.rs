//! Numerical building blocks: quadrature, optimization, special functions
//! and double-double linear algebra.

pub mod dd;
pub mod optimize;
pub mod quad;
pub mod special;

/// Ordinary least-squares fit `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, rms_residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Log-log power-law fit `y = c x^p`. Returns `(p, c, rms_log_residual)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (p, lc, rms) = linear_fit(&lx, &ly);
    (p, lc.exp(), rms)
}
