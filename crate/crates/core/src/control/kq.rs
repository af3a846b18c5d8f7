//! The short-time constant `K_{Q'}`.
//!
//! For stationary noise with finite spectral moments the single-run bound
//! `wc^2 dt^T Sigma^{-1} dt` tends to a constant `K_{Q'}` as `wc t -> 0`,
//! independent of where the `Q' - 1` pulses sit. Three independent routes
//! are provided:
//!
//! - [`kq_hankel_gaussian`]: product formula for Gaussian-cutoff spectra,
//!   `K = Gamma(gamma + m) / (A (m-1)! Gamma(gamma) Gamma(gamma + 1))` with
//!   `m = ceil(Q'/2)`, `gamma = (s+1)/2`, `A = alpha / (4 pi)`.
//! - [`kq_bruteforce`]: ratio `det C~ / det C` of the moment matrix
//!   `C_ij = (-1)^((i-j)/2) mu_((i+j)/2-1) / (i! j!)` (`i + j` even, 1-based)
//!   and its minor without the first row and column, with the determinants
//!   expanded over parity-compatible permutations.
//! - [`kq_numeric`]: the quadratic form itself in double-double arithmetic
//!   at three short times, extrapolated to zero.
//!
//! All routes work with the dimensionless moments
//! `mu_k = m_k / wc^(2k+2)`, so `K` does not depend on `wc`.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;
use twofloat::TwoFloat;

use crate::error::{ensure, Error, Result};
use crate::noise::{spectral_moment, NoiseModel};
use crate::numerics::dd::DdMatrix;
use crate::numerics::power_law_fit;

/// Default cap on the matrix size of the permutation enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// Closed form of `K_{Q'}` for the Gaussian-cutoff spectrum with exponent
/// `s` and strength `alpha`.
pub fn kq_hankel_gaussian(q_prime: usize, s: f64, alpha: f64) -> Result<f64> {
    ensure(q_prime >= 1, || "Q' must be at least 1".into())?;
    ensure(s > -1.0 && alpha > 0.0, || format!("need s > -1 and alpha > 0, got s = {s}, alpha = {alpha}"))?;
    let m = q_prime.div_ceil(2) as f64;
    let g = 0.5 * (s + 1.0);
    let a = alpha / (4.0 * std::f64::consts::PI);
    let ln_k = ln_gamma(g + m) - ln_gamma(m) - ln_gamma(g) - ln_gamma(g + 1.0) - a.ln();
    Ok(ln_k.exp())
}

/// Log-log slope of `K_{Q'}` against `Q'` over the even `Q'` in
/// `[q_min, q_max]`, from the closed form.
pub fn kq_growth_exponent(s: f64, alpha: f64, q_min: usize, q_max: usize) -> Result<f64> {
    let qs: Vec<usize> = (q_min.max(2)..=q_max).filter(|q| q % 2 == 0).collect();
    ensure(qs.len() >= 2, || format!("need at least two even Q' in [{q_min}, {q_max}]"))?;
    let x: Vec<f64> = qs.iter().map(|&q| q as f64).collect();
    let y = qs.iter().map(|&q| kq_hankel_gaussian(q, s, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(power_law_fit(&x, &y).0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Moment matrix `C` of size `Q' x Q'` from the dimensionless moments
/// `mu_0, mu_1, ...` (at least `Q'` of them).
pub fn moment_matrix(q_prime: usize, moments: &[f64]) -> Result<DMatrix<f64>> {
    ensure(q_prime >= 1, || "Q' must be at least 1".into())?;
    ensure(moments.len() >= q_prime, || format!("{q_prime} moments required, {} given", moments.len()))?;
    if let Some(k) = moments[..q_prime].iter().position(|m| !m.is_finite()) {
        return Err(Error::DivergentMoment { order: k });
    }
    Ok(DMatrix::from_fn(q_prime, q_prime, |r, c| {
        let (i, j) = (r + 1, c + 1);
        if (i + j) % 2 == 1 {
            return 0.0;
        }
        let sign = if ((i as i64 - j as i64) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * moments[(i + j) / 2 - 1] / (factorial(i) * factorial(j))
    }))
}

/// Visits all permutations of `items` (Heap's algorithm) with their signs.
fn for_each_permutation(items: &mut [usize], mut f: impl FnMut(&[usize], f64)) {
    let n = items.len();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    f(items, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            sign = -sign;
            f(items, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Leibniz determinant restricted to permutations that map every index to
/// one of the same parity; entries with `i + j` odd never contribute.
///
/// Such a permutation is a permutation of the odd indices times one of the
/// even indices, so the sum is enumerated class by class.
pub fn parity_compatible_determinant(m: &DMatrix<f64>, cap: usize) -> Result<f64> {
    ensure(m.is_square(), || "matrix must be square".into())?;
    let n = m.nrows();
    if n > cap {
        return Err(Error::CombinatorialOverflow { size: n, cap });
    }
    let mut det = 1.0;
    for parity in 0..2 {
        let idx: Vec<usize> = (0..n).filter(|i| i % 2 == parity).collect();
        let mut perm = idx.clone();
        let mut sum = 0.0;
        for_each_permutation(&mut perm, |p, sign| {
            sum += sign * idx.iter().zip(p).map(|(&r, &c)| m[(r, c)]).product::<f64>();
        });
        det *= sum;
    }
    Ok(det)
}

/// `K_{Q'}` from the moment matrix by two determinant evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KqBruteForce {
    /// Ratio of parity-compatible permutation expansions.
    pub enumerated: f64,
    /// Ratio of LU determinants.
    pub lu: f64,
}

/// `K_{Q'} = det C~ / det C` from the dimensionless moments.
pub fn kq_bruteforce(q_prime: usize, moments: &[f64], cap: usize) -> Result<KqBruteForce> {
    let c = moment_matrix(q_prime, moments)?;
    let minor = c.view((1, 1), (q_prime - 1, q_prime - 1)).into_owned();
    let det_c = parity_compatible_determinant(&c, cap)?;
    let det_minor = if q_prime == 1 { 1.0 } else { parity_compatible_determinant(&minor, cap)? };
    let lu_c = c.clone().lu().determinant();
    let lu_minor = if q_prime == 1 { 1.0 } else { minor.lu().determinant() };
    if det_c == 0.0 || lu_c == 0.0 {
        return Err(Error::SingularCovariance("moment matrix is singular".into()));
    }
    Ok(KqBruteForce { enumerated: det_minor / det_c, lu: lu_minor / lu_c })
}

/// Short-time extrapolation of the quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct KqNumeric {
    /// Extrapolated `K_{Q'}`.
    pub k: f64,
    /// Dimensionless run times `wc t` of the grid.
    pub grid: [f64; 3],
    /// `wc^2 dt^T Sigma^{-1} dt` on the grid.
    pub values: [f64; 3],
    /// Number of moments in the correlator series.
    pub terms: usize,
    /// Relative change of the result when the series length is halved.
    pub truncation_change: f64,
}

/// Default largest grid time `wc t`.
pub const DEFAULT_GRID_START: f64 = 0.4;

/// Minimal series length `Q'(Q'+1)/2 + 2`.
fn default_terms(q_prime: usize) -> usize {
    q_prime * (q_prime + 1) / 2 + 2
}

/// [`kq_numeric_with_moments`] with the dimensionless moments of `model`.
///
/// Models whose moments diverge (white and OU noise beyond order zero)
/// report [`Error::DivergentMoment`].
pub fn kq_numeric(model: &NoiseModel, fractions: &[f64], grid_start: f64) -> Result<KqNumeric> {
    let q_prime = fractions.len() + 1;
    let wc = model.omega_c();
    let terms = 2 * default_terms(q_prime);
    let moments = (0..terms)
        .map(|k| spectral_moment(model, k).map(|m| m / wc.powi(2 * k as i32 + 2)))
        .collect::<Result<Vec<_>>>()?;
    kq_numeric_with_moments(&moments, fractions, grid_start)
}

/// `K_{Q'}` as the zero-time limit of `wc^2 dt^T Sigma^{-1} dt`.
///
/// `Sigma(u)` at `u = wc t` is built from the correlator series
/// `C(tau) = sum_k (-1)^k mu_k (wc tau)^(2k) / (2k)!` with the segment
/// integrals done exactly, scaled by `diag(1/dt)` and solved in
/// double-double arithmetic. Values at `u0, u0/2, u0/4` are extrapolated by
/// two Richardson steps in `u^2`. The series uses `Q'(Q'+1)/2 + 2` terms and
/// is checked once against twice that length (when enough moments are
/// supplied); the longer series gives the result.
pub fn kq_numeric_with_moments(moments: &[f64], fractions: &[f64], grid_start: f64) -> Result<KqNumeric> {
    let q_prime = fractions.len() + 1;
    ensure(grid_start > 0.0 && grid_start <= 1.0, || format!("grid start must lie in (0, 1], got {grid_start}"))?;
    let mut bounds = vec![0.0];
    bounds.extend_from_slice(fractions);
    bounds.push(1.0);
    ensure(bounds.windows(2).all(|w| w[1] > w[0]), || format!("fractions must increase inside (0, 1): {fractions:?}"))?;
    let base = default_terms(q_prime);
    ensure(moments.len() >= base, || format!("{base} moments required, {} given", moments.len()))?;
    if let Some(k) = moments.iter().position(|m| !m.is_finite()) {
        if k < base {
            return Err(Error::DivergentMoment { order: k });
        }
    }
    let usable = moments.iter().take_while(|m| m.is_finite()).count();
    let terms = usable.min(2 * base);
    let grid = [grid_start, grid_start / 2.0, grid_start / 4.0];
    let short = extrapolate(&moments[..base], &bounds, grid)?;
    let long = extrapolate(&moments[..terms], &bounds, grid)?;
    let truncation_change = (long.0 / short.0 - 1.0).abs();
    if truncation_change > 1e-3 {
        return Err(Error::ExtrapolationUnstable(format!(
            "series length {base} gives {} but {terms} gives {}",
            short.0, long.0
        )));
    }
    Ok(KqNumeric { k: long.0, grid, values: long.1, terms, truncation_change })
}

fn extrapolate(moments: &[f64], bounds: &[f64], grid: [f64; 3]) -> Result<(f64, [f64; 3])> {
    let blocks = segment_series(moments, bounds);
    let mut values = [0.0; 3];
    for (v, &u) in values.iter_mut().zip(&grid) {
        *v = scaled_form(&blocks, u).ok_or_else(|| {
            Error::ExtrapolationUnstable(format!("scaled covariance singular at wc t = {u}"))
        })?;
    }
    let r0 = (4.0 * values[1] - values[0]) / 3.0;
    let r1 = (4.0 * values[2] - values[1]) / 3.0;
    let k = (16.0 * r1 - r0) / 15.0;
    if !(k.is_finite() && k > 0.0) || (r1 - r0).abs() > 0.1 * k.abs() {
        return Err(Error::ExtrapolationUnstable(format!(
            "values {values:?} on wc t = {grid:?} give first-level estimates {r0} and {r1}"
        )));
    }
    Ok((k, values))
}

/// Per-order coefficient matrices
/// `(-1)^k mu_k / (2k)! * int int (s - s')^(2k) / (da_i da_j)` over the
/// fractional windows; `Sigma(u) / (u^2 da_i da_j) = sum_k u^(2k) M_k`.
fn segment_series(moments: &[f64], bounds: &[f64]) -> Vec<Vec<TwoFloat>> {
    let q = bounds.len() - 1;
    let da: Vec<TwoFloat> = bounds.windows(2).map(|w| TwoFloat::new_sub(w[1], w[0])).collect();
    // Squares of the boundary differences and running powers for each pair.
    let mut out = Vec::with_capacity(moments.len());
    let diffs = |i: usize, j: usize| {
        [
            TwoFloat::new_sub(bounds[i + 1], bounds[j]),
            TwoFloat::new_sub(bounds[i], bounds[j + 1]),
            TwoFloat::new_sub(bounds[i + 1], bounds[j + 1]),
            TwoFloat::new_sub(bounds[i], bounds[j]),
        ]
    };
    let mut powers: Vec<[TwoFloat; 4]> = (0..q * q).map(|_| [TwoFloat::from(1.0); 4]).collect();
    let mut fact = TwoFloat::from(1.0);
    for (k, &mu) in moments.iter().enumerate() {
        if k > 0 {
            fact = fact * ((2 * k - 1) as f64) * ((2 * k) as f64);
        }
        let p = (2 * k + 2) as f64;
        let denom = fact * ((p - 1.0) * p);
        let coef = crate::numerics::dd::div(TwoFloat::from(if k % 2 == 0 { mu } else { -mu }), denom);
        let mut m = Vec::with_capacity(q * q);
        for i in 0..q {
            for j in 0..q {
                let d = diffs(i, j);
                let pw = &mut powers[i * q + j];
                for (x, dv) in pw.iter_mut().zip(d) {
                    *x = *x * dv * dv;
                }
                let incl = pw[0] + pw[1] - pw[2] - pw[3];
                m.push(crate::numerics::dd::div(coef * incl, da[i] * da[j]));
            }
        }
        out.push(m);
    }
    out
}

/// `1^T M(u)^{-1} 1` for the scaled covariance `M(u) = sum_k u^(2k) M_k`.
fn scaled_form(blocks: &[Vec<TwoFloat>], u: f64) -> Option<f64> {
    let len = blocks[0].len();
    let q = (len as f64).sqrt().round() as usize;
    let u2 = TwoFloat::new_mul(u, u);
    let mut acc = vec![TwoFloat::from(0.0); len];
    let mut scale = TwoFloat::from(1.0);
    for b in blocks {
        for (a, &v) in acc.iter_mut().zip(b) {
            *a += v * scale;
        }
        scale = scale * u2;
    }
    let mut m = DdMatrix::zeros(q);
    for i in 0..q {
        for j in 0..q {
            m.set(i, j, acc[i * q + j]);
        }
    }
    let ones = vec![TwoFloat::from(1.0); q];
    let x = m.solve(&ones)?;
    let v: TwoFloat = x.iter().fold(TwoFloat::from(0.0), |s, &v| s + v);
    Some(v.hi() + v.lo())
}
