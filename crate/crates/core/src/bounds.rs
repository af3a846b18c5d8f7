//! State-independent precision bounds and optimal interrogation times.
//!
//! Purifying the dephasing channel with a bosonic bath and optimizing over a
//! one-parameter family of bath-local gauge transformations gives, for a
//! single run of duration `t`,
//!
//! `F_Q <= 4 t^2 Var(J_z) / (1 + 4 chi(t) Var(J_z))`.
//!
//! With `T / t` repetitions the total information is
//! `F_tot(t) = T gain t / (1 + gain chi(t))` with `gain = 4 Var(J_z)`
//! (`N^2` for the maximal variance). The same saturating form describes
//! squeezed states in the bosonic approximation (`gain = J delta`), so its
//! optimum is exposed generically. GHZ inputs follow
//! `F_tot(t) = T N^2 t exp(-2 N^2 chi(t))`.
//!
//! For a short-time law `chi(t) = (chi0 wc t)^n` every optimum is available
//! in closed form. The `numeric_*` functions locate the same optima by
//! golden-section search with a double-double objective and are used to
//! validate the closed forms.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{ensure, Result};
use crate::noise::DecayLaw;
use crate::numerics::dd;
use crate::numerics::optimize::{golden_max, golden_max_log};

/// Inputs of a bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    /// Probe number `N` (real so that log-spaced sweeps are possible).
    pub n: f64,
    /// Total runtime `T`.
    pub total_time: f64,
    /// Short-time decay law of `chi(t)`.
    pub decay: DecayLaw,
    /// State-specific `Var(J_z)`; `N^2 / 4` when absent.
    pub var_jz: Option<f64>,
}

impl BoundQuery {
    /// Query with the maximal `J_z` variance.
    pub fn new(n: f64, total_time: f64, decay: DecayLaw) -> Result<Self> {
        let q = Self { n, total_time, decay, var_jz: None };
        q.validate()?;
        Ok(q)
    }

    /// Checks `N >= 1`, `T > 0`, `Var(J_z)` in `[0, N^2/4]` and the decay law.
    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1.0 && self.n.is_finite(), || format!("N must be >= 1, got {}", self.n))?;
        ensure(self.total_time > 0.0 && self.total_time.is_finite(), || {
            format!("total time must be positive, got {}", self.total_time)
        })?;
        if let Some(v) = self.var_jz {
            ensure((0.0..=self.n * self.n / 4.0 * (1.0 + 1e-12)).contains(&v), || {
                format!("Var(J_z) = {v} outside [0, N^2/4]")
            })?;
        }
        self.decay.validate()
    }

    /// `Var(J_z)` used by the bound.
    pub fn variance(&self) -> f64 {
        self.var_jz.unwrap_or(self.n * self.n / 4.0)
    }
}

/// Optimal interrogation time and total Fisher information.
///
/// `t_star` is `f64::INFINITY` when the total information increases
/// monotonically and `f_total` is then its supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Optimal single-run time.
    pub t_star: f64,
    /// Total Fisher information at `t_star`.
    pub f_total: f64,
}

impl Optimum {
    /// Whether the optimum is the unattained supremum at infinite time.
    pub fn is_supremum(&self) -> bool {
        self.t_star.is_infinite()
    }

    /// Precision bound `1 / F_tot` on the estimator variance.
    pub fn precision_variance(&self) -> f64 {
        1.0 / self.f_total
    }
}

/// Single-run bound `4 t^2 Var / (1 + 4 chi Var)`.
pub fn purification_qfi_bound(var_jz: f64, chi: f64, t: f64) -> f64 {
    4.0 * t * t * var_jz / (1.0 + 4.0 * chi * var_jz)
}

/// First two moments of the purified generator and the resulting QFI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurificationMoments {
    /// `<H> = t (1 - zeta) <J_z>`.
    pub mean: f64,
    /// `<H^2> = t^2 ((1 - zeta)^2 <J_z^2> + zeta^2 / (4 chi))`.
    pub second_moment: f64,
    /// `4 (<H^2> - <H>^2)`.
    pub qfi: f64,
}

/// Moments of `H = t J_z - zeta t (a + a^dag) / (2 sqrt(chi))` on the
/// purified state.
pub fn purification_moments(zeta: f64, var_jz: f64, mean_jz: f64, chi: f64, t: f64) -> Result<PurificationMoments> {
    ensure(chi > 0.0, || format!("purification needs chi > 0, got {chi}"))?;
    ensure(var_jz >= 0.0, || format!("Var(J_z) must be nonnegative, got {var_jz}"))?;
    let second_jz = var_jz + mean_jz * mean_jz;
    let mean = t * (1.0 - zeta) * mean_jz;
    let second_moment = t * t * ((1.0 - zeta).powi(2) * second_jz + zeta * zeta / (4.0 * chi));
    let qfi = 4.0 * t * t * ((1.0 - zeta).powi(2) * var_jz + zeta * zeta / (4.0 * chi));
    Ok(PurificationMoments { mean, second_moment, qfi })
}

/// Minimizing gauge parameter `4 chi Var / (1 + 4 chi Var)`.
pub fn zeta_opt(var_jz: f64, chi: f64) -> f64 {
    4.0 * chi * var_jz / (1.0 + 4.0 * chi * var_jz)
}

/// Total bound `(T/t) F_Q(t)` at a given interrogation time.
pub fn total_bound_at(q: &BoundQuery, t: f64) -> f64 {
    q.total_time / t * purification_qfi_bound(q.variance(), q.decay.chi(t), t)
}

/// `chi0 wc`, the inverse time scale of a decay law.
fn rate(decay: &DecayLaw) -> f64 {
    decay.chi0() * decay.omega_c
}

/// Closed-form optimum of `F_tot(t) = T gain t / (1 + gain chi(t))`.
///
/// For `n = 1` the function increases towards `T / (chi0 wc)`; with
/// `t_max` the bound is evaluated at that finite time instead.
pub fn saturating_optimum(gain: f64, decay: &DecayLaw, total: f64, t_max: Option<f64>) -> Optimum {
    let n = decay.n as f64;
    let at = |t: f64| total * gain * t / (1.0 + gain * decay.chi(t));
    if decay.n == 1 {
        return match t_max {
            Some(t) => Optimum { t_star: t, f_total: at(t) },
            None => Optimum { t_star: f64::INFINITY, f_total: total / rate(decay) },
        };
    }
    let t_star = (1.0 / ((n - 1.0) * gain)).powf(1.0 / n) / rate(decay);
    let t_star = match t_max {
        Some(tm) if tm < t_star => tm,
        _ => t_star,
    };
    Optimum { t_star, f_total: at(t_star) }
}

/// State-independent optimum of the total Fisher information.
///
/// For `n >= 2`, `t* = (1/(chi0 wc)) (1/(n-1))^(1/n) N^(-2/n)` and
/// `F = (T/(chi0 wc)) ((n-1)^(1-1/n) / n) N^(2-2/n)` at maximal variance.
pub fn optimal_time_and_bound(q: &BoundQuery, t_max: Option<f64>) -> Result<Optimum> {
    q.validate()?;
    if let Some(t) = t_max {
        ensure(t > 0.0, || format!("t_max must be positive, got {t}"))?;
    }
    Ok(saturating_optimum(4.0 * q.variance(), &q.decay, q.total_time, t_max))
}

/// `g(n) = n (n-1)^(-1 + 1/n)`.
pub fn g_factor(n: u32) -> f64 {
    let n = n as f64;
    n * (n - 1.0).powf(-1.0 + 1.0 / n)
}

/// Lower bound on the estimator variance, `1 / F_tot` at the optimum:
/// `chi0 wc / T` for `n = 1` and `(chi0 wc / T) g(n) N^(-2(n-1)/n)` otherwise.
pub fn precision_lower_bound(q: &BoundQuery) -> Result<f64> {
    Ok(optimal_time_and_bound(q, None)?.precision_variance())
}

/// GHZ optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzOptimum {
    /// Optimal single-run time.
    pub t_star: f64,
    /// Total Fisher information at `t_star`.
    pub f_total: f64,
    /// Estimator variance bound `1 / f_total`.
    pub precision_variance: f64,
}

impl GhzOptimum {
    /// Standard deviation bound `1 / sqrt(f_total)`.
    pub fn delta_b(&self) -> f64 {
        self.precision_variance.sqrt()
    }
}

/// `T N^2 t exp(-2 N^2 chi)`.
pub fn ghz_total_qfi(n: f64, total: f64, chi: f64, t: f64) -> f64 {
    total * n * n * t * (-2.0 * n * n * chi).exp()
}

/// Closed-form GHZ optimum, `t* = (1/(chi0 wc)) (1/(2n))^(1/n) N^(-2/n)` and
/// `F = (T/(chi0 wc)) e^(-1/n) (2n)^(-1/n) N^(2-2/n)`. The exponential
/// suppression gives a finite optimum for every `n >= 1`.
pub fn ghz_optimal(q: &BoundQuery) -> Result<GhzOptimum> {
    q.validate()?;
    let n = q.decay.n as f64;
    let r = rate(&q.decay);
    let t_star = (1.0 / (2.0 * n)).powf(1.0 / n) * q.n.powf(-2.0 / n) / r;
    let f_total = q.total_time / r * (-1.0 / n).exp() * (2.0 * n).powf(-1.0 / n) * q.n.powf(2.0 - 2.0 / n);
    Ok(GhzOptimum { t_star, f_total, precision_variance: 1.0 / f_total })
}

/// Search bracket for numeric optima in units of `1 / (chi0 wc)`.
const SEARCH_BRACKET: (f64, f64) = (1e-16, 1e6);

fn log_bracket(decay: &DecayLaw) -> (f64, f64) {
    let r = rate(decay);
    ((SEARCH_BRACKET.0 / r).ln(), (SEARCH_BRACKET.1 / r).ln())
}

/// Golden-section maximization of `T gain t / (1 + gain chi(t))` for a
/// power-law decay, evaluated in double-double arithmetic.
pub fn numeric_saturating_optimum(gain: f64, decay: &DecayLaw, total: f64) -> Optimum {
    let c = gain * decay.amplitude * decay.omega_c.powi(decay.n as i32);
    let n = decay.n as f64;
    let objective = |u: f64| {
        let num = dd::exp(TwoFloat::from(u));
        let den = TwoFloat::from(1.0) + dd::exp(TwoFloat::new_mul(n, u)) * c;
        dd::div(num, den)
    };
    let (lo, hi) = log_bracket(decay);
    let t_star = golden_max(objective, lo, hi, 1e-13).exp();
    Optimum { t_star, f_total: total * gain * t_star / (1.0 + gain * decay.chi(t_star)) }
}

/// Golden-section maximization of the GHZ total information, using the
/// logarithm `ln t - 2 N^2 chi(t)` of the objective in double-double.
pub fn numeric_ghz_optimum(q: &BoundQuery) -> GhzOptimum {
    let c = 2.0 * q.n * q.n * q.decay.amplitude * q.decay.omega_c.powi(q.decay.n as i32);
    let n = q.decay.n as f64;
    let objective = |u: f64| TwoFloat::from(u) - dd::exp(TwoFloat::new_mul(n, u)) * c;
    let (lo, hi) = log_bracket(&q.decay);
    let t_star = golden_max(objective, lo, hi, 1e-13).exp();
    let f_total = ghz_total_qfi(q.n, q.total_time, q.decay.chi(t_star), t_star);
    GhzOptimum { t_star, f_total, precision_variance: 1.0 / f_total }
}

/// Optimal time for an arbitrary decoherence function by bracketed
/// golden-section search on `ln t` (tolerance `1e-10`).
///
/// `chi` may come from any noise model or table. The search assumes a
/// single maximum of `T gain t / (1 + gain chi(t))` inside `[lo, hi]`; an
/// optimum on the bracket edge is reported as found there.
pub fn optimize_time<F>(var_jz: f64, total: f64, chi: F, lo: f64, hi: f64) -> Result<Optimum>
where
    F: Fn(f64) -> f64,
{
    ensure(lo > 0.0 && hi > lo, || format!("invalid time bracket [{lo}, {hi}]"))?;
    let gain = 4.0 * var_jz;
    let f = |t: f64| total * gain * t / (1.0 + gain * chi(t));
    let t_star = golden_max_log(f, lo, hi, 1e-10);
    Ok(Optimum { t_star, f_total: f(t_star) })
}

/// One row of an `N` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Probe number.
    pub n: f64,
    /// Optimal time (infinite for the supremum regime).
    pub t_star: f64,
    /// Total Fisher information.
    pub f_total: f64,
    /// Variance bound `1 / F_tot`.
    pub precision: f64,
    /// `supremum` or `finite`.
    pub regime: String,
}

/// State-independent bounds over a list of probe numbers.
pub fn sweep(ns: &[f64], total: f64, decay: DecayLaw) -> Result<Vec<SweepRow>> {
    ns.iter()
        .map(|&n| {
            let opt = optimal_time_and_bound(&BoundQuery::new(n, total, decay)?, None)?;
            Ok(SweepRow {
                n,
                t_star: opt.t_star,
                f_total: opt.f_total,
                precision: opt.precision_variance(),
                regime: if opt.is_supremum() { "supremum" } else { "finite" }.into(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
