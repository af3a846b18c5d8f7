//! Adaptive one- and two-dimensional quadrature.
//!
//! The base rule is the tanh-sinh (double-exponential) integrator from the
//! `quadrature` crate. It handles integrable endpoint singularities and kinks
//! placed at interval ends well, but has a fixed evaluation budget, so this
//! module wraps it in global adaptive bisection driven by the rule's own
//! error estimate.

use crate::error::{Error, Result};

/// Maximum number of subintervals before an integral is declared non-convergent.
const MAX_PIECES: usize = 4_000;

/// Tolerance specification for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Absolute error target.
    pub abs: f64,
    /// Relative error target (applied to the magnitude of the integral).
    pub rel: f64,
}

impl Tolerance {
    /// Absolute-only tolerance.
    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    /// Combined absolute and relative tolerance.
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]` to the requested tolerance.
///
/// Global adaptive strategy: the subinterval with the largest error estimate
/// is bisected until the summed estimate meets the target. Targets below the
/// rounding level of the integral are raised to that level. Non-finite
/// integrand values are reported as an error instead of being discarded.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonIntegrableCorrelation(format!(
            "infinite limits [{a}, {b}] passed to finite-interval quadrature"
        )));
    }
    let poisoned = std::cell::Cell::new(false);
    let rule = |lo: f64, hi: f64, target: f64| -> Result<Piece> {
        // Endpoint values may be singular (nodes can round onto an endpoint);
        // interior non-finite values mean the integrand is not integrable.
        let g = |x: f64| {
            let v = f(x);
            if !v.is_finite() && x > lo && x < hi {
                poisoned.set(true);
            }
            v
        };
        let out = quadrature::double_exponential::integrate(g, lo, hi, target.max(1e-300));
        if poisoned.get() {
            return Err(Error::NonIntegrableCorrelation(format!(
                "integrand is not finite on [{lo}, {hi}]"
            )));
        }
        Ok(Piece { lo, hi, value: out.integral, error: out.error_estimate.abs() })
    };

    let first = rule(a, b, tol.abs.max(1e-300))?;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(first);
    loop {
        let (mut value, mut error, mut magnitude) = (0.0, 0.0, 0.0);
        for p in heap.iter() {
            value += p.value;
            error += p.error;
            magnitude += p.value.abs();
        }
        let target = tol.abs.max(tol.rel * value.abs()).max(64.0 * f64::EPSILON * magnitude);
        if error <= target {
            return Ok(value);
        }
        if heap.len() >= MAX_PIECES {
            return Err(Error::NonIntegrableCorrelation(format!(
                "no convergence on [{a}, {b}]: error estimate {error:e} above target {target:e}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            return Err(Error::NonIntegrableCorrelation(format!(
                "interval [{}, {}] cannot be subdivided further",
                worst.lo, worst.hi
            )));
        }
        let sub_target = 0.25 * target;
        heap.push(rule(worst.lo, mid, sub_target)?);
        heap.push(rule(mid, worst.hi, sub_target)?);
    }
}

/// Integrates `f` over `[a, b]` with interior breakpoints where the integrand
/// may have kinks or rapid changes.
pub fn integrate_with_breaks<F>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let n_pieces = points.len() + 1;
    let piece_tol = Tolerance::new(tol.abs / n_pieces as f64, tol.rel);
    let mut lo = a;
    let mut total = 0.0;
    for hi in points.into_iter().chain(std::iter::once(b)) {
        total += integrate(&f, lo, hi, piece_tol)?;
        lo = hi;
    }
    Ok(total)
}

/// Integrates `f` over `[a, inf)` through the substitution `x = a + u / (1 - u)`.
pub fn integrate_to_infinity<F>(f: F, a: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let v = f(a + u / w) / (w * w);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrates `f(x, y)` over the rectangle `[x0, x1] x [y0, y1]` by nested
/// adaptive quadrature. `diagonal_kink` splits the inner integral at `y = x`
/// when the integrand is only piecewise smooth across the diagonal.
pub fn integrate_2d<F>(
    f: F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    diagonal_kink: bool,
    tol: Tolerance,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let inner_tol = Tolerance::new(tol.abs / (x1 - x0).abs().max(1e-300) * 0.1, tol.rel * 0.1);
    let failure = std::cell::RefCell::new(None);
    let outer = |x: f64| {
        let breaks: &[f64] = if diagonal_kink { &[x] } else { &[] };
        match integrate_with_breaks(|y| f(x, y), y0, y1, breaks, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let outer_breaks: Vec<f64> = if diagonal_kink { vec![y0, y1] } else { vec![] };
    let value = integrate_with_breaks(outer, x0, x1, &outer_breaks, tol)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}
