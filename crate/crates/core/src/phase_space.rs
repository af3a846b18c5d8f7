//! Gaussian phase-space description of one-axis-twisted states.
//!
//! For large `N` and low excitation the collective spin near its polarization
//! axis behaves as a single bosonic mode with quadratures `x` and `p`. The
//! generator `J_z` of the signal becomes `sqrt(J) x` and a one-axis-twisted
//! state `R(beta) exp(-i mu J^2) |CSS>` becomes a pure Gaussian state with
//! covariance
//!
//! `Sigma0 = [[delta, -2 eta delta], [-2 eta delta, 1/delta + 4 eta^2 delta]]`,
//!
//! where `delta` is the generator variance (squeezing) and `eta` the shear.
//! Averaging over the dephasing noise adds `J chi(t)` to the `p` variance and
//! the signal displaces `p` by `sqrt(J) b t`, so the single-run information
//! is `F = J delta t^2 / (1 + J delta chi)`, independent of the shear.
//!
//! Covariances use the normalization in which the vacuum has `Sigma = I`.
//! In this normalization the exact Dicke-basis information of the same
//! protocol is `2 F` when the Dicke coherences decay as `exp(-g dm^2)` with
//! `g = chi / 4`; [`compare_with_dicke`] applies that correspondence.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::bounds::{ghz_optimal, numeric_ghz_optimum, numeric_saturating_optimum, saturating_optimum, BoundQuery};
use crate::dicke::{build_input, evolve, qfi_of_state, InputKind};
use crate::error::{ensure, Error, Result};
use crate::noise::DecayLaw;

/// Tolerance on `delta` below which the squeezing is declared degenerate.
const DELTA_FLOOR: f64 = 1e-12;

/// Gaussian state of the bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    /// `(<x>, <p>)`.
    pub mean: Vector2<f64>,
    /// Symmetric positive-definite covariance matrix.
    pub cov: Matrix2<f64>,
    /// Spin magnitude `J = N / 2`.
    pub j: f64,
}

impl GaussianState {
    /// Builds a state, checking symmetry and positive definiteness of `cov`.
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>, j: f64) -> Result<Self> {
        ensure(j > 0.0 && j.is_finite(), || format!("J must be positive, got {j}"))?;
        let scale = cov.abs().max().max(1.0);
        ensure((cov[(0, 1)] - cov[(1, 0)]).abs() <= 1e-12 * scale, || "covariance is not symmetric".into())?;
        if !(cov[(0, 0)] > 0.0 && cov.determinant() > 0.0) {
            return Err(Error::SingularCovariance(format!("covariance {cov:?} is not positive definite")));
        }
        Ok(Self { mean, cov, j })
    }

    /// Mean photon number `<a^dag a> = (tr Sigma - 2) / 4 + |mean|^2 / 2`.
    pub fn excitation(&self) -> f64 {
        (self.cov.trace() - 2.0) / 4.0 + self.mean.norm_squared() / 2.0
    }
}

/// Squeezing `delta` and shear `eta` of a twisted and rotated coherent state,
/// `delta = 1 + 4 k^2 sin^2 beta - 2 k sin 2 beta` and
/// `eta = (k^2 sin 2 beta - k cos 2 beta) / delta` with `k = J mu`.
pub fn oats_params(mu: f64, beta: f64, j: f64) -> Result<(f64, f64)> {
    let k = j * mu;
    ensure(k.is_finite() && beta.is_finite(), || format!("non-finite twist J mu = {k} or angle {beta}"))?;
    let (s, s2, c2) = (beta.sin(), (2.0 * beta).sin(), (2.0 * beta).cos());
    let delta = 1.0 + 4.0 * k * k * s * s - 2.0 * k * s2;
    if delta <= DELTA_FLOOR * (1.0 + 4.0 * k * k) {
        return Err(Error::DegenerateSqueezing(format!(
            "delta = {delta:e} for J mu = {k}, beta = {beta}"
        )));
    }
    Ok((delta, (k * k * s2 - k * c2) / delta))
}

/// Pure input state with squeezing `delta` and shear `eta`, zero mean.
pub fn input_state(delta: f64, eta: f64, j: f64) -> Result<GaussianState> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::DegenerateSqueezing(format!("delta = {delta}")));
    }
    let off = -2.0 * eta * delta;
    let cov = Matrix2::new(delta, off, off, 1.0 / delta + 4.0 * eta * eta * delta);
    GaussianState::new(Vector2::zeros(), cov, j)
}

/// Input state of the twisted protocol with parameters `(mu, beta)`.
pub fn oats_input(n: f64, mu: f64, beta: f64) -> Result<GaussianState> {
    let j = n / 2.0;
    let (delta, eta) = oats_params(mu, beta, j)?;
    input_state(delta, eta, j)
}

/// Noise-averaged evolution: the mean becomes `(0, sqrt(J) b t)` and
/// `J chi` is added to the `p` variance.
pub fn evolve_averaged(state: &GaussianState, b: f64, t: f64, chi: f64) -> Result<GaussianState> {
    ensure(chi >= 0.0 && chi.is_finite(), || format!("chi must be non-negative, got {chi}"))?;
    let mut cov = state.cov;
    cov[(1, 1)] += state.j * chi;
    Ok(GaussianState { mean: Vector2::new(0.0, state.j.sqrt() * b * t), cov, j: state.j })
}

/// Fisher information of a Gaussian family with fixed covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianQfi {
    /// `F = dmu^T Sigma^-1 dmu`.
    pub qfi: f64,
    /// Coefficients `(c_x, c_p)` of the optimal quadrature `c_x x + c_p p`,
    /// normalized to `c_p = 1`.
    pub sld_coeffs: Vector2<f64>,
}

/// `F = dmu^T Sigma^-1 dmu` and the direction of the optimal quadrature.
pub fn gaussian_qfi(state: &GaussianState, dmean: Vector2<f64>) -> Result<GaussianQfi> {
    let det = state.cov.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::SingularCovariance(format!("determinant {det:e}")));
    }
    let inv = state
        .cov
        .try_inverse()
        .ok_or_else(|| Error::SingularCovariance("covariance is not invertible".into()))?;
    let w = inv * dmean;
    let qfi = dmean.dot(&w);
    let sld_coeffs = if w[1] != 0.0 { w / w[1] } else { w };
    Ok(GaussianQfi { qfi, sld_coeffs })
}

/// Gaussian information of the signal family after time `t`, where the
/// mean derivative is `(0, sqrt(J) t)`.
pub fn signal_qfi(input: &GaussianState, t: f64, chi: f64) -> Result<GaussianQfi> {
    let evolved = evolve_averaged(input, 0.0, t, chi)?;
    gaussian_qfi(&evolved, Vector2::new(0.0, input.j.sqrt() * t))
}

/// Status of the low-excitation condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HpStatus {
    /// `<a^dag a> <= epsilon 2J`.
    Valid,
    /// Inside the marginal band up to `marginal 2J`.
    Marginal,
    /// Beyond the marginal band.
    Invalid,
}

/// Thresholds for the low-excitation condition, as fractions of `2J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpMargins {
    /// Valid below `epsilon 2J`.
    pub epsilon: f64,
    /// Marginal below `marginal 2J`, invalid above.
    pub marginal: f64,
}

impl Default for HpMargins {
    fn default() -> Self {
        Self { epsilon: 0.1, marginal: 1.0 }
    }
}

/// Result of [`hp_validity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpReport {
    /// Mean excitation `<a^dag a>`.
    pub excitation: f64,
    /// `<a^dag a> / (2J)`.
    pub ratio: f64,
    /// Classification against the margins.
    pub status: HpStatus,
}

/// Checks the low-excitation condition `<a^dag a> << 2J`.
pub fn hp_validity(state: &GaussianState, margins: HpMargins) -> HpReport {
    let excitation = state.excitation();
    let ratio = excitation / (2.0 * state.j);
    let status = if ratio <= margins.epsilon {
        HpStatus::Valid
    } else if ratio <= margins.marginal {
        HpStatus::Marginal
    } else {
        HpStatus::Invalid
    };
    HpReport { excitation, ratio, status }
}

/// Optimum of the twisted protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OatsOptimum {
    /// Optimal single-run time (infinite for the `n = 1` supremum).
    pub t_star: f64,
    /// Total information `(T / t*) F(t*)`.
    pub f_total: f64,
    /// Squeezing parameter of the input.
    pub delta: f64,
    /// Shear of the input.
    pub eta: f64,
    /// Low-excitation check of the noisy state at `t_star` (the input for
    /// the supremum).
    pub hp: HpReport,
}

/// Optimal encoding time and total information for a twisted input.
///
/// `F_tot(t) = T J delta t / (1 + J delta chi(t))`. For `n >= 2`,
/// `t* = (1/(chi0 wc)) (2/((n-1) N delta))^(1/n)`; for `n = 1` the supremum
/// `T / (chi0 wc)` is returned. Fails with [`Error::HpViolation`] when the
/// optimal state leaves the marginal band of the low-excitation regime.
pub fn oats_optimal(n: f64, total: f64, decay: &DecayLaw, mu: f64, beta: f64, margins: HpMargins) -> Result<OatsOptimum> {
    BoundQuery::new(n, total, *decay)?;
    let input = oats_input(n, mu, beta)?;
    let j = input.j;
    let (delta, eta) = oats_params(mu, beta, j)?;
    let opt = saturating_optimum(j * delta, decay, total, None);
    let at_opt = if opt.t_star.is_finite() {
        evolve_averaged(&input, 0.0, opt.t_star, decay.chi(opt.t_star))?
    } else {
        input
    };
    let hp = hp_validity(&at_opt, margins);
    if hp.status == HpStatus::Invalid {
        return Err(Error::HpViolation(format!(
            "<a^dag a> / 2J = {:.3} exceeds {} for N = {n}, mu = {mu}, beta = {beta}",
            hp.ratio, margins.marginal
        )));
    }
    Ok(OatsOptimum { t_star: opt.t_star, f_total: opt.f_total, delta, eta, hp })
}

/// Gaussian and exact information for the same twisted protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeComparison {
    /// Gaussian single-run information, in the exact normalization
    /// (`2 F_gauss(chi = 4 g)`).
    pub gaussian: f64,
    /// Exact Dicke-basis information with coherence decay `exp(-g dm^2)`.
    pub exact: f64,
}

impl DickeComparison {
    /// `gaussian / exact - 1`.
    pub fn relative_deviation(&self) -> f64 {
        self.gaussian / self.exact - 1.0
    }
}

/// Compares the Gaussian information with the exact Dicke-basis value for
/// `N` probes, twist `mu`, rotation `beta`, Dicke decay exponent `g` and
/// single-run time `t`.
pub fn compare_with_dicke(n: usize, mu: f64, beta: f64, g: f64, t: f64) -> Result<DickeComparison> {
    ensure(g >= 0.0, || format!("decay exponent must be non-negative, got {g}"))?;
    let input = oats_input(n as f64, mu, beta)?;
    let gaussian = 2.0 * signal_qfi(&input, t, 4.0 * g)?.qfi;
    let exact = qfi_of_state(&evolve(&build_input(InputKind::Oats, n, mu, beta)?, 0.0, g, t))?.qfi;
    Ok(DickeComparison { gaussian, exact })
}

/// Input states of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1State {
    /// Coherent spin state (`mu = 0`).
    Css,
    /// Twist and rotation that minimize the squeezing parameter:
    /// `mu = 3^(1/6) N^(-2/3)`, `beta = pi/2 - 3^(-1/6) N^(-1/3)`.
    KuOats,
    /// Perfect-echo twist `mu = N^(-1/2)`, `beta = -pi/2`.
    PeOats,
    /// GHZ state.
    Ghz,
}

impl Table1State {
    /// All rows in table order.
    pub const ALL: [Table1State; 4] = [Self::Css, Self::KuOats, Self::PeOats, Self::Ghz];

    /// Twist and rotation for `N` probes; `None` for GHZ.
    pub fn twist(self, n: f64) -> Option<(f64, f64)> {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Self::Css => Some((0.0, 0.0)),
            Self::KuOats => Some((3f64.powf(1.0 / 6.0) * n.powf(-2.0 / 3.0), FRAC_PI_2 - 3f64.powf(-1.0 / 6.0) * n.powf(-1.0 / 3.0))),
            Self::PeOats => Some((n.powf(-0.5), -FRAC_PI_2)),
            Self::Ghz => None,
        }
    }

    /// Leading asymptotics `delta ~ d N^e` as `(d, e)`.
    fn delta_asymptotics(self) -> (f64, f64) {
        match self {
            Self::Css | Self::Ghz => (1.0, 0.0),
            Self::KuOats => (3f64.powf(1.0 / 3.0), 2.0 / 3.0),
            Self::PeOats => (1.0, 1.0),
        }
    }
}

/// Noise columns of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseRegime {
    /// `chi = (chi0 wc t)^2`.
    ColoredN2,
    /// `chi = chi0 wc t`.
    White,
    /// No noise; precision in units of `(T t)^(-1/2)`.
    Noiseless,
}

impl NoiseRegime {
    /// All columns in table order.
    pub const ALL: [NoiseRegime; 3] = [Self::ColoredN2, Self::White, Self::Noiseless];
}

/// Probe numbers of the table fits: `10^2, 10^2.5, ..., 10^4`.
pub fn table1_probe_numbers() -> Vec<f64> {
    (0..5).map(|k| 10f64.powf(2.0 + 0.5 * k as f64)).collect()
}

/// How the optimal encoding time of a table cell is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizationMethod {
    /// Golden-section maximization of the total information.
    Numeric,
    /// Closed-form optimum at finite `N`.
    ClosedForm,
}

/// Optimized precision `Delta b` for one table cell and one `N`, in units of
/// `(chi0 wc / T)^(1/2)` for the noisy columns and `(T t)^(-1/2)` for the
/// noiseless column.
pub fn table1_precision(state: Table1State, regime: NoiseRegime, n: f64, total: f64, method: OptimizationMethod) -> Result<f64> {
    ensure(total > 0.0, || format!("total time must be positive, got {total}"))?;
    let law = match regime {
        NoiseRegime::ColoredN2 => Some(DecayLaw::from_chi0(2, 1.0, 1.0)?),
        NoiseRegime::White => Some(DecayLaw::from_chi0(1, 1.0, 1.0)?),
        NoiseRegime::Noiseless => None,
    };
    let f_total = match (state.twist(n), law) {
        (Some((mu, beta)), Some(law)) => {
            let opt = oats_optimal(n, total, &law, mu, beta, HpMargins::default())?;
            if law.n >= 2 && method == OptimizationMethod::Numeric {
                numeric_saturating_optimum(n / 2.0 * opt.delta, &law, total).f_total
            } else {
                opt.f_total
            }
        }
        (Some((mu, beta)), None) => {
            // One run of length T: F = J delta T^2, reported times T t = T^2.
            let input = oats_input(n, mu, beta)?;
            signal_qfi(&input, total, 0.0)?.qfi / (total * total)
        }
        (None, Some(law)) => {
            let q = BoundQuery::new(n, total, law)?;
            match method {
                OptimizationMethod::Numeric => numeric_ghz_optimum(&q).f_total,
                OptimizationMethod::ClosedForm => ghz_optimal(&q)?.f_total,
            }
        }
        (None, None) => n * n,
    };
    let unit = if law.is_some() { total } else { 1.0 };
    Ok((unit / f_total).sqrt())
}

/// Leading-order asymptotics `Delta b ~ prefactor N^exponent` of a table
/// cell as `(exponent, prefactor)`.
pub fn table1_leading_order(state: Table1State, regime: NoiseRegime) -> (f64, f64) {
    let (d, e) = state.delta_asymptotics();
    match (state, regime) {
        (Table1State::Ghz, NoiseRegime::ColoredN2) => (-0.5, (4.0 * std::f64::consts::E).powf(0.25)),
        (Table1State::Ghz, NoiseRegime::White) => (0.0, (2.0 * std::f64::consts::E).sqrt()),
        (Table1State::Ghz, NoiseRegime::Noiseless) => (-1.0, 1.0),
        (_, NoiseRegime::ColoredN2) => (-(1.0 + e) / 4.0, 2f64.powf(0.75) * d.powf(-0.25)),
        (_, NoiseRegime::White) => (0.0, 1.0),
        (_, NoiseRegime::Noiseless) => (-(1.0 + e) / 2.0, 2f64.sqrt() * d.powf(-0.5)),
    }
}

/// Fitted scaling of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Weighted least-squares slope of `log Delta b` against `log N`.
    pub exponent: f64,
    /// `Delta b(N_max) N_max^(-exponent)`.
    pub prefactor: f64,
    /// Weighted RMS residual of the fit in `log10` units.
    pub residual: f64,
    /// `(N, Delta b)` points of the fit.
    pub points: Vec<(f64, f64)>,
}

/// Residual above which a power-law fit is reported as ambiguous.
const FIT_RESIDUAL_LIMIT: f64 = 0.02;

/// Weighted least-squares fit of `log10 y = a + s log10 x`.
///
/// The weights grow linearly in `log10 x` from 1 at the smallest abscissa,
/// favouring the asymptotic end. The prefactor is taken from the largest
/// abscissa with the fitted slope.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::FitAmbiguous(format!("{} points are too few for a slope and a residual", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::FitAmbiguous("non-positive or non-finite data".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let x0 = lx.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = lx.iter().map(|x| 1.0 + x - x0).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(&lx).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(&ly).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(&lx).map(|(w, x)| w * (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitAmbiguous("all abscissae coincide".into()));
    }
    let sxy: f64 = w.iter().zip(lx.iter().zip(&ly)).map(|(w, (x, y))| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let residual = (w
        .iter()
        .zip(lx.iter().zip(&ly))
        .map(|(w, (x, y))| w * (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / sw)
        .sqrt();
    if residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::FitAmbiguous(format!("residual {residual:.3} decades exceeds {FIT_RESIDUAL_LIMIT}")));
    }
    let (xmax, ymax) = points.iter().copied().fold((0.0, 0.0), |acc, p| if p.0 > acc.0 { p } else { acc });
    Ok(ScalingFit { exponent: slope, prefactor: ymax * xmax.powf(-slope), residual, points: points.to_vec() })
}

/// Optimized precision over `ns` for one table cell, fitted to a power law.
pub fn table1_row(
    state: Table1State,
    regime: NoiseRegime,
    ns: &[f64],
    total: f64,
    method: OptimizationMethod,
) -> Result<ScalingFit> {
    use rayon::prelude::*;
    let points = ns
        .par_iter()
        .map(|&n| Ok((n, table1_precision(state, regime, n, total, method)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(&points)
}
