//! Frequency-domain integrals of noise spectra.
//!
//! Integrals of the form `(1/pi) int_0^inf S2(w) K(w) dw` are split at period
//! boundaries of the oscillating kernel and at spectral features. Beyond a
//! cutoff frequency `W` the non-oscillating part of the kernel is integrated
//! after the substitution `w = W / u`, and the oscillating part by its
//! integration-by-parts expansion evaluated at `W`, which is placed on a full
//! period so that `sin(W t) = 0` and `cos(W t) = 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate, integrate_with_breaks, Tolerance};

use super::NoiseModel;

/// Kernels multiplying the spectrum.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// Filter `4 sin^2(w t / 2) / w^2`.
    Filter(f64),
    /// Integrated-noise filter `abs(1 - e^{i w t} + i w t)^2 / w^4`.
    Integrated(f64),
    /// `cos(w tau)`.
    Cos(f64),
}

impl Kernel {
    fn time(self) -> f64 {
        match self {
            Self::Filter(t) | Self::Integrated(t) | Self::Cos(t) => t,
        }
    }

    fn eval(self, w: f64) -> f64 {
        match self {
            Self::Filter(t) => {
                let x = 0.5 * w * t;
                if x.abs() < 1e-4 {
                    t * t * (1.0 - x * x / 3.0)
                } else {
                    let s = 2.0 * x.sin() / w;
                    s * s
                }
            }
            Self::Integrated(t) => {
                let x = w * t;
                if x.abs() < 1.0 {
                    // t^4 sum_{k>=2} (-1)^k 2(2k-1)/(2k)! x^(2k-4)
                    let x2 = x * x;
                    let mut sum = 0.0;
                    let mut pow = 1.0;
                    let mut fact = 24.0; // (2k)! at k = 2
                    for k in 2..14 {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sum += sign * 2.0 * (2 * k - 1) as f64 / fact * pow;
                        pow *= x2;
                        fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
                    }
                    t.powi(4) * sum
                } else {
                    (x * x + 2.0 - 2.0 * x.cos() - 2.0 * x * x.sin()) / w.powi(4)
                }
            }
            Self::Cos(tau) => (w * tau).cos(),
        }
    }
}

/// `(1/pi) int_0^inf s2(w) K(w) dw`.
///
/// `scale` is the frequency beyond which the spectrum is smooth and
/// featureless; `support` truncates the integral for band-limited spectra.
fn integrate_spectrum<S>(s2: S, kernel: Kernel, scale: f64, support: Option<f64>, features: &[f64]) -> Result<f64>
where
    S: Fn(f64) -> f64,
{
    let t = kernel.time();
    let period = 2.0 * PI / t;
    let tol = Tolerance::new(1e-13, 1e-12);
    let integrand = |w: f64| s2(w) * kernel.eval(w);

    let (upper, with_tail) = match support {
        Some(wmax) => (wmax, false),
        None => {
            let periods = ((64.0 * scale) / period).ceil().clamp(64.0, 200_000.0);
            (periods * period, true)
        }
    };
    let mut breaks: Vec<f64> = Vec::new();
    let n_periods = (upper / period).floor() as usize;
    breaks.extend((1..=n_periods.min(400_000)).map(|k| k as f64 * period));
    let mut b = scale / 64.0;
    while b < upper {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.extend_from_slice(features);
    let body = integrate_with_breaks(integrand, 0.0, upper, &breaks, tol)?;
    if !with_tail {
        return Ok(body / PI);
    }
    let tail = tail_integral(&s2, kernel, upper)?;
    Ok((body + tail) / PI)
}

/// Tail `int_W^inf s2(w) K(w) dw` for `W t` a multiple of `2 pi`.
fn tail_integral<S>(s2: &S, kernel: Kernel, big_w: f64) -> Result<f64>
where
    S: Fn(f64) -> f64,
{
    let t = kernel.time();
    let tol = Tolerance::new(1e-14, 1e-12);
    // Non-oscillating part through w = W / u, dw = W / u^2 du.
    let smooth = match kernel {
        Kernel::Filter(_) => integrate(|u| if u == 0.0 { 0.0 } else { 2.0 * s2(big_w / u) / big_w }, 0.0, 1.0, tol)?,
        Kernel::Integrated(t) => integrate(
            |u| {
                if u == 0.0 {
                    0.0
                } else {
                    s2(big_w / u) * (t * t + 2.0 * u * u / (big_w * big_w)) / big_w
                }
            },
            0.0,
            1.0,
            tol,
        )?,
        Kernel::Cos(_) => 0.0,
    };
    // Oscillating parts h_c(w) cos(w t) + h_s(w) sin(w t).
    let h_c = |w: f64| match kernel {
        Kernel::Filter(_) => -2.0 * s2(w) / (w * w),
        Kernel::Integrated(_) => -2.0 * s2(w) / w.powi(4),
        Kernel::Cos(_) => s2(w),
    };
    let h_s = |w: f64| match kernel {
        Kernel::Integrated(t) => -2.0 * t * s2(w) / w.powi(3),
        _ => 0.0,
    };
    let d = 1e-3 * big_w;
    let d1 = |h: &dyn Fn(f64) -> f64| {
        (-h(big_w + 2.0 * d) + 8.0 * h(big_w + d) - 8.0 * h(big_w - d) + h(big_w - 2.0 * d)) / (12.0 * d)
    };
    let d2 = |h: &dyn Fn(f64) -> f64| (h(big_w + d) - 2.0 * h(big_w) + h(big_w - d)) / (d * d);
    let d3 = |h: &dyn Fn(f64) -> f64| {
        (h(big_w + 2.0 * d) - 2.0 * h(big_w + d) + 2.0 * h(big_w - d) - h(big_w - 2.0 * d)) / (2.0 * d.powi(3))
    };
    let cos_part = -d1(&h_c) / (t * t) + d3(&h_c) / t.powi(4);
    let sin_part = h_s(big_w) / t - d2(&h_s) / t.powi(3);
    let total = smooth + cos_part + sin_part;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonIntegrableCorrelation("spectral tail is not finite".into()))
    }
}

pub(super) fn chi_spectrum(model: &NoiseModel, t: f64) -> Result<f64> {
    match *model {
        NoiseModel::White { .. } | NoiseModel::OrnsteinUhlenbeck { .. } | NoiseModel::GaussianCutoff { .. } => {
            let s2 = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN);
            integrate_spectrum(s2, Kernel::Filter(t), model.omega_c(), None, &[])
        }
        NoiseModel::OneOverF { omega_ir, omega_c, .. } => {
            let s2 = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN);
            integrate_spectrum(s2, Kernel::Filter(t), omega_c, Some(omega_c), &[omega_ir])
        }
        NoiseModel::Brownian { chi0, omega_c } => {
            let level = 2.0 * chi0 * omega_c * omega_c * omega_c;
            integrate_spectrum(|_| level, Kernel::Integrated(t), omega_c, None, &[])
        }
        NoiseModel::IntegratedStationary { sigma2, rate, omega_c } => {
            let gain = omega_c * omega_c;
            let s2 = |w: f64| gain * 2.0 * sigma2 * rate / (w * w + rate * rate);
            integrate_spectrum(s2, Kernel::Integrated(t), rate, None, &[])
        }
        NoiseModel::Tabulated { .. } => Err(Error::SpectrumUndefined(
            "tabulated correlators carry no spectrum; use the time-domain route".into(),
        )),
    }
}

pub(super) fn moment(model: &NoiseModel, n: usize) -> Result<f64> {
    let tol = Tolerance::new(0.0, 1e-12);
    match *model {
        NoiseModel::White { .. } => Err(Error::DivergentMoment { order: n }),
        NoiseModel::OrnsteinUhlenbeck { omega_c, .. } => {
            if n > 0 {
                return Err(Error::DivergentMoment { order: n });
            }
            let s2 = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN);
            crate::numerics::quad::integrate_to_infinity(|w| s2(w * omega_c) * omega_c, 0.0, tol).map(|v| v / PI)
        }
        NoiseModel::GaussianCutoff { s, omega_c, .. } => {
            let g = n as f64 + 0.5 * (s + 1.0);
            let peak = g.sqrt() * omega_c;
            let upper = omega_c * (g.sqrt() + 9.0);
            let f = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN) * w.powi(2 * n as i32);
            integrate_with_breaks(f, 0.0, upper, &[peak, 0.5 * peak], tol).map(|v| v / PI)
        }
        NoiseModel::OneOverF { omega_ir, omega_c, .. } => {
            let f = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN) * w.powi(2 * n as i32);
            integrate_with_breaks(f, 0.0, omega_c, &[omega_ir], tol).map(|v| v / PI)
        }
        _ => Err(Error::SpectrumUndefined(format!("{:?} noise is not stationary", model.kind()))),
    }
}

pub(super) fn one_over_f_correlator(model: &NoiseModel, tau: f64) -> Result<f64> {
    let NoiseModel::OneOverF { omega_ir, omega_c, .. } = *model else {
        unreachable!("one_over_f model expected")
    };
    let s2 = |w: f64| model.two_sided_spectrum(w).unwrap_or(f64::NAN);
    if tau == 0.0 {
        return moment(model, 0);
    }
    integrate_spectrum(s2, Kernel::Cos(tau), omega_c, Some(omega_c), &[omega_ir])
}

pub(super) fn one_over_f_phi(model: &NoiseModel, tau: f64) -> Result<f64> {
    // (1 - cos w tau) / w^2 is half the filter kernel.
    chi_spectrum(model, tau).map(|v| 0.5 * v)
}
