//! Special functions not covered by `statrs`.

/// Confluent hypergeometric function `M(a, b, -z)` for `z >= 0` and `b > 0`.
///
/// Evaluated through Kummer's transformation `M(a, b, -z) = e^{-z} M(b - a, b, z)`.
/// The transformed series has terms of eventually constant sign, so it does
/// not suffer the alternating cancellation of the direct series. For very
/// large `z` the leading asymptotic expansion is used instead.
pub fn hyp1f1_neg(a: f64, b: f64, z: f64) -> f64 {
    debug_assert!(z >= 0.0 && b > 0.0);
    let c = b - a;
    let terminates = c <= 0.0 && c.fract() == 0.0;
    if z > 600.0 && !terminates {
        return asymptotic(a, b, z);
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 0.0f64;
    loop {
        term *= (c + k) / (b + k) * z / (k + 1.0);
        sum += term;
        k += 1.0;
        if term == 0.0 || (k > z && term.abs() <= 1e-17 * sum.abs()) || k > 5000.0 {
            break;
        }
    }
    // Split the exponential to avoid overflow of intermediate partial sums.
    sum * (-z).exp()
}

/// Leading terms of `M(a, b, -z) ~ Gamma(b)/Gamma(b-a) z^{-a} sum_k (a)_k (a-b+1)_k / k! z^{-k}`.
fn asymptotic(a: f64, b: f64, z: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let pref = gamma(b) / gamma(b - a) * z.powf(-a);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..30 {
        let kf = k as f64;
        let next = term * (a + kf) * (a - b + 1.0 + kf) / ((kf + 1.0) * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    pref * sum
}
