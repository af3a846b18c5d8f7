//! Derivative-free one-dimensional maximization.

/// Maximizes `f` over `t` in `[lo, hi]` (both positive) by golden-section
/// search in `ln t`.
///
/// The objective may return any partially ordered type, which lets callers
/// evaluate it in extended precision so that the location of a flat maximum
/// is resolved beyond the square root of the `f64` machine epsilon.
/// The search stops when the bracket width in `ln t` drops below `log_tol`.
pub fn golden_max_log<T, F>(f: F, lo: f64, hi: f64, log_tol: f64) -> f64
where
    T: PartialOrd,
    F: Fn(f64) -> T,
{
    assert!(lo > 0.0 && hi > lo, "golden_max_log needs 0 < lo < hi");
    golden_max(|u| f(u.exp()), lo.ln(), hi.ln(), log_tol).exp()
}

/// Maximizes a unimodal `f` over `[lo, hi]` by golden-section search and
/// returns the midpoint of the final bracket of width `tol`.
pub fn golden_max<T, F>(f: F, lo: f64, hi: f64, tol: f64) -> f64
where
    T: PartialOrd,
    F: Fn(f64) -> T,
{
    assert!(hi > lo, "golden_max needs lo < hi");
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
