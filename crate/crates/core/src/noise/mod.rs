//! Classical noise models for collective dephasing.
//!
//! A noise process `xi(t)` couples to the collective spin as `xi(t) J_z`. Its
//! accumulated phase `lambda(t) = int_0^t xi` has variance
//! `chi(t) = int_0^t int_0^t C(s, s') ds ds'`, the decoherence function.
//!
//! # Spectral convention
//!
//! `two_sided_spectrum` returns the two-sided power spectral density `S2(w)`
//! with `C(tau) = (1/2pi) int S2(w) e^{i w tau} dw`. The Gaussian-cutoff
//! parameterization `alpha |w|^s wc^(1-s) exp(-(w/wc)^2)` is one-sided, so its
//! two-sided density is half of it. With this convention
//! `chi(t) = (1/2pi) int S2(w) F(t, w) dw` with the filter
//! `F(t, w) = 4 sin^2(w t / 2) / w^2`, and the spectral moments
//! `(1/2pi) int S2(w) w^(2n) dw` are the Taylor coefficients of the
//! correlator, `C(tau) = sum_n (-1)^n m_n tau^(2n) / (2n)!`.
//!
//! # Models
//!
//! | kind | correlator | parameters |
//! |------|------------|------------|
//! | `white` | `chi0 wc delta(tau)` | `chi0`, `omega_c` |
//! | `ornstein_uhlenbeck` | `sigma2 exp(-wc abs(tau))` | `sigma2`, `omega_c` |
//! | `gaussian_cutoff` | inverse transform of the Gaussian-cutoff spectrum | `alpha`, `s`, `omega_c` |
//! | `brownian` | `2 chi0 wc^3 min(s, s')` | `chi0`, `omega_c` |
//! | `integrated_stationary` | `xi = wc int eta`, `eta` an OU process | `sigma2`, `rate`, `omega_c` |
//! | `one_over_f` | band-limited `1/f^beta` spectrum with infrared plateau | `amplitude`, `beta`, `omega_ir`, `omega_c` |
//! | `tabulated` | samples, linear or bilinear interpolation | `table`, optional `omega_c` |
//!
//! The `one_over_f` model is a convenience parameterization,
//! `S2(w) = amplitude (omega_ir / max(abs(w), omega_ir))^beta` for
//! `abs(w) <= omega_c` and zero above. All of its moments are finite.

mod spectral;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, invalid, Error, Result};
use crate::numerics::quad::{integrate, integrate_2d, integrate_with_breaks, Tolerance};
use crate::numerics::special::hyp1f1_neg;
use crate::numerics::power_law_fit;

pub use table::TabulatedCorrelation;

/// Absolute tolerance used for correlator quadratures.
pub const CHI_ABS_TOL: f64 = 1e-10;

/// Stationarity class of a noise process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    /// `C(t1, t2)` depends on `t1 - t2` only and is a function.
    Stationary,
    /// `C(t1, t2)` depends on both times.
    NonStationary,
    /// Stationary in the sense of distributions (delta-correlated).
    WideSenseGeneralized,
}

/// Kind tag used in the JSON representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Delta-correlated noise.
    White,
    /// Exponentially correlated noise.
    OrnsteinUhlenbeck,
    /// Power-law spectrum with Gaussian high-frequency cutoff.
    GaussianCutoff,
    /// Integrated white noise.
    Brownian,
    /// Integrated Ornstein-Uhlenbeck noise.
    IntegratedStationary,
    /// Correlator given by samples.
    Tabulated,
    /// Band-limited `1/f^beta` noise.
    OneOverF,
}

/// A classical noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseModelDoc", into = "NoiseModelDoc")]
pub enum NoiseModel {
    /// `C(tau) = chi0 wc delta(tau)`, `chi(t) = chi0 wc t`.
    White {
        /// Dimensionless strength.
        chi0: f64,
        /// Frequency scale.
        omega_c: f64,
    },
    /// `C(tau) = sigma2 exp(-wc abs(tau))`.
    OrnsteinUhlenbeck {
        /// Variance `C(0)`.
        sigma2: f64,
        /// Inverse correlation time.
        omega_c: f64,
    },
    /// One-sided spectrum `alpha abs(w)^s wc^(1-s) exp(-(w/wc)^2)`.
    GaussianCutoff {
        /// Dimensionless amplitude.
        alpha: f64,
        /// Low-frequency exponent, `s > -1`.
        s: f64,
        /// Cutoff frequency.
        omega_c: f64,
    },
    /// `C(s, s') = 2 chi0 wc^3 min(s, s')`, `chi(t) = (2/3) chi0 (wc t)^3`.
    Brownian {
        /// Dimensionless strength.
        chi0: f64,
        /// Frequency scale.
        omega_c: f64,
    },
    /// `xi(t) = wc int_0^t eta`, with `eta` an OU process of variance
    /// `sigma2` and rate `rate`.
    IntegratedStationary {
        /// Variance of `eta`.
        sigma2: f64,
        /// Inverse correlation time of `eta`.
        rate: f64,
        /// Gain of the integrator.
        omega_c: f64,
    },
    /// Band-limited `1/f^beta` noise with an infrared plateau.
    OneOverF {
        /// Plateau level of the two-sided spectrum.
        amplitude: f64,
        /// Spectral exponent.
        beta: f64,
        /// Infrared corner frequency.
        omega_ir: f64,
        /// Ultraviolet cutoff.
        omega_c: f64,
    },
    /// Correlator given by samples.
    Tabulated {
        /// The samples.
        table: TabulatedCorrelation,
        /// Frequency scale used by short-time fits.
        omega_c: f64,
    },
}

/// Serialized form `{"kind", "params", "stationarity"}` (plus `table` for
/// tabulated models).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModelDoc {
    /// Model kind.
    pub kind: NoiseKind,
    /// Named numeric parameters.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Declared stationarity; checked against the kind when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<Stationarity>,
    /// Samples for tabulated models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TabulatedCorrelation>,
}

impl TryFrom<NoiseModelDoc> for NoiseModel {
    type Error = Error;

    fn try_from(doc: NoiseModelDoc) -> Result<Self> {
        let get = |name: &str| -> Result<f64> {
            doc.params
                .get(name)
                .copied()
                .ok_or_else(|| invalid(format!("missing parameter `{name}` for {:?}", doc.kind)))
        };
        let model = match doc.kind {
            NoiseKind::White => NoiseModel::White { chi0: get("chi0")?, omega_c: get("omega_c")? },
            NoiseKind::OrnsteinUhlenbeck => NoiseModel::OrnsteinUhlenbeck {
                sigma2: get("sigma2")?,
                omega_c: get("omega_c")?,
            },
            NoiseKind::GaussianCutoff => NoiseModel::GaussianCutoff {
                alpha: get("alpha")?,
                s: get("s")?,
                omega_c: get("omega_c")?,
            },
            NoiseKind::Brownian => NoiseModel::Brownian { chi0: get("chi0")?, omega_c: get("omega_c")? },
            NoiseKind::IntegratedStationary => NoiseModel::IntegratedStationary {
                sigma2: get("sigma2")?,
                rate: get("rate")?,
                omega_c: get("omega_c")?,
            },
            NoiseKind::OneOverF => NoiseModel::OneOverF {
                amplitude: get("amplitude")?,
                beta: get("beta")?,
                omega_ir: get("omega_ir")?,
                omega_c: get("omega_c")?,
            },
            NoiseKind::Tabulated => NoiseModel::Tabulated {
                table: doc
                    .table
                    .clone()
                    .ok_or_else(|| invalid("tabulated model requires a `table` field"))?,
                omega_c: doc.params.get("omega_c").copied().unwrap_or(1.0),
            },
        };
        model.validate()?;
        if let Some(declared) = doc.stationarity {
            let actual = model.stationarity();
            let two_time_table = matches!(
                &model,
                NoiseModel::Tabulated { table: TabulatedCorrelation::TwoTime { .. }, .. }
            );
            if declared != actual && !(two_time_table && declared == Stationarity::Stationary) {
                return Err(invalid(format!(
                    "declared stationarity {declared:?} does not match {:?} ({actual:?})",
                    doc.kind
                )));
            }
        }
        Ok(model)
    }
}

impl From<NoiseModel> for NoiseModelDoc {
    fn from(model: NoiseModel) -> Self {
        let stationarity = Some(model.stationarity());
        let kind = model.kind();
        let mut params = BTreeMap::new();
        let mut table = None;
        let mut put = |k: &str, v: f64| {
            params.insert(k.to_string(), v);
        };
        match model {
            NoiseModel::White { chi0, omega_c } | NoiseModel::Brownian { chi0, omega_c } => {
                put("chi0", chi0);
                put("omega_c", omega_c);
            }
            NoiseModel::OrnsteinUhlenbeck { sigma2, omega_c } => {
                put("sigma2", sigma2);
                put("omega_c", omega_c);
            }
            NoiseModel::GaussianCutoff { alpha, s, omega_c } => {
                put("alpha", alpha);
                put("s", s);
                put("omega_c", omega_c);
            }
            NoiseModel::IntegratedStationary { sigma2, rate, omega_c } => {
                put("sigma2", sigma2);
                put("rate", rate);
                put("omega_c", omega_c);
            }
            NoiseModel::OneOverF { amplitude, beta, omega_ir, omega_c } => {
                put("amplitude", amplitude);
                put("beta", beta);
                put("omega_ir", omega_ir);
                put("omega_c", omega_c);
            }
            NoiseModel::Tabulated { table: t, omega_c } => {
                put("omega_c", omega_c);
                table = Some(t);
            }
        }
        NoiseModelDoc { kind, params, stationarity, table }
    }
}

/// Short-time power law `chi(t) = amplitude (wc t)^n`.
///
/// The amplitude plays the role of `chi0^n`, so `chi(t) = (chi0 wc t)^n`
/// with `chi0 = amplitude^(1/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLaw {
    /// Short-time exponent, `n >= 1`.
    pub n: u32,
    /// Prefactor `chi0^n`.
    pub amplitude: f64,
    /// Frequency scale `wc`.
    pub omega_c: f64,
}

impl DecayLaw {
    /// Builds a law from `chi0` so that `chi(t) = (chi0 wc t)^n`.
    pub fn from_chi0(n: u32, chi0: f64, omega_c: f64) -> Result<Self> {
        ensure(n >= 1, || format!("decay exponent must be >= 1, got {n}"))?;
        ensure(chi0 > 0.0 && chi0.is_finite(), || format!("chi0 must be positive, got {chi0}"))?;
        ensure(omega_c > 0.0 && omega_c.is_finite(), || format!("omega_c must be positive, got {omega_c}"))?;
        Ok(Self { n, amplitude: chi0.powi(n as i32), omega_c })
    }

    /// `chi0 = amplitude^(1/n)`.
    pub fn chi0(&self) -> f64 {
        self.amplitude.powf(1.0 / self.n as f64)
    }

    /// `chi(t)`.
    pub fn chi(&self, t: f64) -> f64 {
        self.amplitude * (self.omega_c * t).powi(self.n as i32)
    }

    /// Validates the invariants `n >= 1`, positive amplitude and frequency.
    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1, || format!("decay exponent must be >= 1, got {}", self.n))?;
        ensure(self.amplitude > 0.0 && self.amplitude.is_finite(), || {
            format!("decay amplitude must be positive, got {}", self.amplitude)
        })?;
        ensure(self.omega_c > 0.0 && self.omega_c.is_finite(), || {
            format!("omega_c must be positive, got {}", self.omega_c)
        })
    }
}

impl NoiseModel {
    /// Kind tag of the model.
    pub fn kind(&self) -> NoiseKind {
        match self {
            Self::White { .. } => NoiseKind::White,
            Self::OrnsteinUhlenbeck { .. } => NoiseKind::OrnsteinUhlenbeck,
            Self::GaussianCutoff { .. } => NoiseKind::GaussianCutoff,
            Self::Brownian { .. } => NoiseKind::Brownian,
            Self::IntegratedStationary { .. } => NoiseKind::IntegratedStationary,
            Self::OneOverF { .. } => NoiseKind::OneOverF,
            Self::Tabulated { .. } => NoiseKind::Tabulated,
        }
    }

    /// Stationarity class of the model.
    pub fn stationarity(&self) -> Stationarity {
        match self {
            Self::White { .. } => Stationarity::WideSenseGeneralized,
            Self::Brownian { .. } | Self::IntegratedStationary { .. } => Stationarity::NonStationary,
            Self::Tabulated { table, .. } if !table.is_stationary() => Stationarity::NonStationary,
            _ => Stationarity::Stationary,
        }
    }

    /// Characteristic frequency `wc`.
    pub fn omega_c(&self) -> f64 {
        match *self {
            Self::White { omega_c, .. }
            | Self::OrnsteinUhlenbeck { omega_c, .. }
            | Self::GaussianCutoff { omega_c, .. }
            | Self::Brownian { omega_c, .. }
            | Self::IntegratedStationary { omega_c, .. }
            | Self::OneOverF { omega_c, .. }
            | Self::Tabulated { omega_c, .. } => omega_c,
        }
    }

    /// Checks parameter domains.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| ensure(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite, got {v}"));
        pos("omega_c", self.omega_c())?;
        match *self {
            Self::White { chi0, .. } | Self::Brownian { chi0, .. } => pos("chi0", chi0),
            Self::OrnsteinUhlenbeck { sigma2, .. } => pos("sigma2", sigma2),
            Self::GaussianCutoff { alpha, s, .. } => {
                pos("alpha", alpha)?;
                ensure(s > -1.0 && s.is_finite(), || format!("s must exceed -1, got {s}"))
            }
            Self::IntegratedStationary { sigma2, rate, .. } => {
                pos("sigma2", sigma2)?;
                pos("rate", rate)
            }
            Self::OneOverF { amplitude, beta, omega_ir, omega_c } => {
                pos("amplitude", amplitude)?;
                pos("omega_ir", omega_ir)?;
                ensure(beta >= 0.0 && beta.is_finite(), || format!("beta must be >= 0, got {beta}"))?;
                ensure(omega_ir < omega_c, || "omega_ir must be below omega_c".to_string())
            }
            Self::Tabulated { ref table, .. } => table.validate(),
        }
    }

    /// Stationary correlator `C(tau)`. Returns `None` for white noise (a
    /// distribution) and for non-stationary models.
    pub fn stationary_correlator(&self, tau: f64) -> Option<f64> {
        let tau = tau.abs();
        match *self {
            Self::OrnsteinUhlenbeck { sigma2, omega_c } => Some(sigma2 * (-omega_c * tau).exp()),
            Self::GaussianCutoff { alpha, s, omega_c } => {
                let g = 0.5 * (s + 1.0);
                let u = omega_c * tau;
                Some(gaussian_cutoff_prefactor(alpha, omega_c) * gamma(g) * hyp1f1_neg(g, 0.5, u * u / 4.0))
            }
            Self::OneOverF { .. } => spectral::one_over_f_correlator(self, tau).ok(),
            Self::Tabulated { ref table, .. } if table.is_stationary() => table.correlation(tau, 0.0).ok(),
            _ => None,
        }
    }

    /// Two-time correlator `C(t1, t2)`. White noise has no pointwise
    /// correlator and yields `InvalidParameter`.
    pub fn correlation(&self, t1: f64, t2: f64) -> Result<f64> {
        match *self {
            Self::White { .. } => Err(invalid("white noise has a delta correlator with no pointwise value")),
            Self::Brownian { chi0, omega_c } => Ok(2.0 * chi0 * omega_c.powi(3) * t1.min(t2)),
            Self::IntegratedStationary { sigma2, rate, omega_c } => {
                let k = |x: f64| ou_chi(sigma2, rate, x);
                Ok(omega_c * omega_c * 0.5 * (k(t1) + k(t2) - k((t1 - t2).abs())))
            }
            Self::Tabulated { ref table, .. } => table.correlation(t1, t2),
            _ => self
                .stationary_correlator(t1 - t2)
                .ok_or_else(|| Error::NonIntegrableCorrelation("correlator evaluation failed".into())),
        }
    }

    /// `Phi(tau) = int_0^tau (tau - v) C(v) dv` for stationary models, so that
    /// `chi(t) = 2 Phi(t)` and rectangle covariances follow by inclusion-exclusion.
    pub fn phi(&self, tau: f64) -> Result<f64> {
        let tau = tau.abs();
        if tau == 0.0 {
            return Ok(0.0);
        }
        match *self {
            Self::White { chi0, omega_c } => Ok(0.5 * chi0 * omega_c * tau),
            Self::OrnsteinUhlenbeck { sigma2, omega_c } => Ok(0.5 * ou_chi(sigma2, omega_c, tau)),
            Self::GaussianCutoff { omega_c, .. } => {
                let f = |v: f64| (tau - v) * self.stationary_correlator(v).unwrap_or(0.0);
                let breaks: Vec<f64> = (1..64).map(|k| k as f64 * 4.0 / omega_c).collect();
                integrate_with_breaks(f, 0.0, tau, &breaks, Tolerance::new(0.1 * CHI_ABS_TOL, 1e-13))
            }
            Self::OneOverF { .. } => spectral::one_over_f_phi(self, tau),
            Self::Tabulated { ref table, .. } if table.is_stationary() => table.phi(tau),
            _ => Err(invalid(format!("{:?} noise is not stationary", self.kind()))),
        }
    }

    /// `G(x, y) = Cov(lambda(x), lambda(y)) = int_0^x int_0^y C(s, s') ds ds'`.
    pub fn phase_covariance(&self, x: f64, y: f64) -> Result<f64> {
        ensure(x >= 0.0 && y >= 0.0, || format!("times must be non-negative, got ({x}, {y})"))?;
        match *self {
            Self::Brownian { chi0, omega_c } => {
                let (a, b) = (x.min(y), x.max(y));
                Ok(2.0 * chi0 * omega_c.powi(3) * (a * a * b / 2.0 - a.powi(3) / 6.0))
            }
            Self::IntegratedStationary { .. } => integrated_stationary_cumulative(self, x, y),
            Self::Tabulated { ref table, .. } => table.cumulative(x, y),
            _ => Ok(self.phi(x)? + self.phi(y)? - self.phi(x - y)?),
        }
    }

    /// `int_{a0}^{a1} int_{b0}^{b1} C(s, s') ds ds'`, the covariance of the
    /// phases accumulated over two time intervals.
    pub fn interval_covariance(&self, (a0, a1): (f64, f64), (b0, b1): (f64, f64)) -> Result<f64> {
        ensure(a0 <= a1 && b0 <= b1, || "intervals must be ordered".to_string())?;
        match self.stationarity() {
            Stationarity::NonStationary => {
                let g = |x: f64, y: f64| self.phase_covariance(x, y);
                Ok(g(a1, b1)? - g(a0, b1)? - g(a1, b0)? + g(a0, b0)?)
            }
            _ => Ok(self.phi(a1 - b0)? + self.phi(a0 - b1)? - self.phi(a1 - b1)? - self.phi(a0 - b0)?),
        }
    }

    /// Two-sided power spectral density `S2(w)` of `xi`.
    pub fn two_sided_spectrum(&self, omega: f64) -> Result<f64> {
        let w = omega.abs();
        match *self {
            Self::White { chi0, omega_c } => Ok(chi0 * omega_c),
            Self::OrnsteinUhlenbeck { sigma2, omega_c } => Ok(2.0 * sigma2 * omega_c / (w * w + omega_c * omega_c)),
            Self::GaussianCutoff { alpha, s, omega_c } => {
                if w == 0.0 {
                    return Ok(if s == 0.0 { 0.5 * alpha * omega_c } else if s > 0.0 { 0.0 } else { f64::INFINITY });
                }
                Ok(0.5 * alpha * w.powf(s) * omega_c.powf(1.0 - s) * (-(w / omega_c).powi(2)).exp())
            }
            Self::OneOverF { amplitude, beta, omega_ir, omega_c } => Ok(if w > omega_c {
                0.0
            } else {
                amplitude * (omega_ir / w.max(omega_ir)).powf(beta)
            }),
            _ => Err(Error::SpectrumUndefined(format!("{:?} noise is not stationary", self.kind()))),
        }
    }
}

/// `A = alpha wc^2 / (4 pi)`: prefactor of the Gaussian-cutoff moments.
pub fn gaussian_cutoff_prefactor(alpha: f64, omega_c: f64) -> f64 {
    alpha * omega_c * omega_c / (4.0 * std::f64::consts::PI)
}

/// Closed-form Gaussian-cutoff moment `A wc^(2n) Gamma(n + (s+1)/2)`.
pub fn gaussian_cutoff_moment(alpha: f64, s: f64, omega_c: f64, n: usize) -> f64 {
    gaussian_cutoff_prefactor(alpha, omega_c) * omega_c.powi(2 * n as i32) * gamma(n as f64 + 0.5 * (s + 1.0))
}

/// `chi(t)` of an OU process with variance `sigma2` and rate `r`.
fn ou_chi(sigma2: f64, r: f64, t: f64) -> f64 {
    let x = r * t;
    // x - 1 + e^{-x} loses precision for small x; use its series there.
    let core = if x < 1e-3 {
        x * x / 2.0 - x.powi(3) / 6.0 + x.powi(4) / 24.0 - x.powi(5) / 120.0
    } else {
        x - 1.0 + (-x).exp()
    };
    2.0 * sigma2 / (r * r) * core
}

fn integrated_stationary_cumulative(model: &NoiseModel, x: f64, y: f64) -> Result<f64> {
    let NoiseModel::IntegratedStationary { sigma2, rate, omega_c } = *model else {
        unreachable!("called with integrated-stationary model only")
    };
    if x == 0.0 || y == 0.0 {
        return Ok(0.0);
    }
    // Cov(Lambda(x), Lambda(y)) = wc^2 int_0^x int_0^y (x-u)(y-u') C_eta(u-u') du du'.
    let f = |u: f64, v: f64| (x - u) * (y - v) * sigma2 * (-rate * (u - v).abs()).exp();
    let scale = omega_c * omega_c;
    integrate_2d(f, (0.0, x), (0.0, y), true, Tolerance::new(0.1 * CHI_ABS_TOL / scale, 1e-12)).map(|v| v * scale)
}

/// Decoherence function `chi(t)` evaluated in the time domain.
///
/// Closed forms are used for white, OU and Brownian noise; stationary
/// correlators reduce exactly to `2 int_0^t (t - tau) C(tau) dtau`, evaluated
/// by adaptive quadrature; tabulated correlators are integrated exactly.
pub fn chi_time_domain(model: &NoiseModel, t: f64) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("time must be non-negative, got {t}"))?;
    if t == 0.0 {
        return Ok(0.0);
    }
    match *model {
        NoiseModel::White { chi0, omega_c } => Ok(chi0 * omega_c * t),
        NoiseModel::OrnsteinUhlenbeck { sigma2, omega_c } => Ok(ou_chi(sigma2, omega_c, t)),
        NoiseModel::Brownian { chi0, omega_c } => Ok(2.0 / 3.0 * chi0 * (omega_c * t).powi(3)),
        NoiseModel::IntegratedStationary { sigma2, rate, omega_c } => {
            let f = |tau: f64| {
                let w = t - tau;
                sigma2 * (-rate * tau).exp() * (w.powi(3) / 3.0 + tau * w * w / 2.0)
            };
            let v = integrate(f, 0.0, t, Tolerance::new(0.1 * CHI_ABS_TOL / (omega_c * omega_c), 1e-13))?;
            Ok(2.0 * omega_c * omega_c * v)
        }
        NoiseModel::Tabulated { ref table, .. } => table.cumulative(t, t),
        NoiseModel::GaussianCutoff { omega_c, .. } | NoiseModel::OneOverF { omega_c, .. } => {
            let f = |tau: f64| (t - tau) * model.stationary_correlator(tau).unwrap_or(f64::NAN);
            let breaks: Vec<f64> = (1..256).map(|k| k as f64 * 2.0 / omega_c).collect();
            integrate_with_breaks(f, 0.0, t, &breaks, Tolerance::new(0.05 * CHI_ABS_TOL, 1e-13)).map(|v| 2.0 * v)
        }
    }
}

/// Decoherence function evaluated by two-dimensional quadrature of the
/// two-time correlator. Slow; intended for cross-checks of the other routes.
pub fn chi_by_double_integral(model: &NoiseModel, t: f64) -> Result<f64> {
    if let NoiseModel::White { chi0, omega_c } = *model {
        return Ok(chi0 * omega_c * t);
    }
    let failure = std::cell::RefCell::new(None);
    let v = integrate_2d(
        |a, b| match model.correlation(a, b) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        (0.0, t),
        (0.0, t),
        true,
        Tolerance::new(CHI_ABS_TOL, 1e-11),
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Decoherence function evaluated in the frequency domain:
/// `(1/2pi) int S2(w) F(t, w) dw` for stationary noise and
/// `(1/2pi) int wc^2 S_eta(w) G(t, w) dw` with
/// `G(t, w) = abs(1 - e^{i w t} + i w t)^2 / w^4` for integrated noise.
pub fn chi_spectrum_domain(model: &NoiseModel, t: f64) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("time must be non-negative, got {t}"))?;
    if t == 0.0 {
        return Ok(0.0);
    }
    spectral::chi_spectrum(model, t)
}

/// Spectral moment `(1/4pi) int S(abs(w)) w^(2n) dw` of the one-sided
/// parameterization, equivalently `(1/2pi) int S2(w) w^(2n) dw` of the
/// two-sided density, equivalently `(-1)^n C^(2n)(0)`.
pub fn spectral_moment(model: &NoiseModel, n: usize) -> Result<f64> {
    spectral::moment(model, n)
}

/// Fits `chi(t) = A (wc t)^n` on a short-time grid.
///
/// The exponent is the rounded log-log slope; the fit is rejected if the
/// slope is more than 0.1 from an integer or the log residuals exceed 0.05.
/// The amplitude is extrapolated to `t -> 0` by a linear fit of
/// `chi / (wc t)^n` against `wc t`. An empty grid selects nine points
/// geometrically spaced in `[1e-4, 1e-2] / wc`.
pub fn fit_short_time_law(model: &NoiseModel, t_grid: &[f64]) -> Result<DecayLaw> {
    let wc = model.omega_c();
    let grid: Vec<f64> = if t_grid.is_empty() {
        (0..9).map(|k| 1e-4 * 10f64.powf(k as f64 / 4.0) / wc).collect()
    } else {
        t_grid.to_vec()
    };
    ensure(grid.len() >= 3, || "short-time fit needs at least three times".to_string())?;
    ensure(grid.iter().all(|&t| t > 0.0 && t.is_finite()), || "fit times must be positive".to_string())?;
    let chi: Vec<f64> = grid.iter().map(|&t| chi_time_domain(model, t)).collect::<Result<_>>()?;
    if chi.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::PoorFit("decoherence function is not positive on the grid".into()));
    }
    let x: Vec<f64> = grid.iter().map(|&t| wc * t).collect();
    let (slope, _, rms) = power_law_fit(&x, &chi);
    let n = slope.round();
    if n < 1.0 || (slope - n).abs() > 0.1 || rms > 0.05 {
        return Err(Error::PoorFit(format!("log-log slope {slope:.4}, rms residual {rms:.3e}")));
    }
    let ratio: Vec<f64> = chi.iter().zip(&x).map(|(&c, &u)| c / u.powi(n as i32)).collect();
    let (_, amplitude, _) = crate::numerics::linear_fit(&x, &ratio);
    if !(amplitude > 0.0) {
        return Err(Error::PoorFit(format!("non-positive extrapolated amplitude {amplitude}")));
    }
    Ok(DecayLaw { n: n as u32, amplitude, omega_c: wc })
}
