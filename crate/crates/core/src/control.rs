//! Open-loop pulsed control under collective dephasing.
//!
//! A run of length `t` is split by ideal instantaneous pulses at fractions
//! `0 < a_1 < ... < a_Q < 1` into `Q' = Q + 1` free segments. Segment `j`
//! accumulates the noise phase `lambda_j`, the integral of `xi` over its
//! window; the vector of phases is a centered Gaussian with the segment
//! covariance `Sigma`. Commuting every pulse to the end of the sequence turns
//! segment `j` into a rotation about the toggling-frame generator
//! `G_j = P_j^dag J_z P_j`, where `P_j` is the product of the pulses applied
//! before it.
//!
//! Consecutive segments whose generators agree up to sign form a decoupling
//! block: their phases add with signs `y_j` into one effective label. The
//! compression matrix `S` collects those signs, and `S Sigma S^T` is the
//! covariance of the effective labels.
//!
//! The quantum Fisher information of any such protocol is bounded by
//! `dt^T Sigma^{-1} dt`, which is not increased by compression. At short
//! times it approaches `K_{Q'} / wc^2`, computed in [`kq`].

use nalgebra::{Cholesky, DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dicke::{hermitian_eigen, jx, jy, jz, CMatrix};
use crate::error::{ensure, Error, Result};
use crate::noise::NoiseModel;

pub mod kq;
pub mod mixture;

pub use kq::{
    kq_bruteforce, kq_growth_exponent, kq_hankel_gaussian, kq_numeric, kq_numeric_with_moments, moment_matrix,
    parity_compatible_determinant, KqBruteForce, KqNumeric, DEFAULT_ENUMERATION_CAP, DEFAULT_GRID_START,
};
pub use mixture::{analytic_controlled_state, gaussian_overlap, simulate_controlled_mixture, MAX_SAMPLES};

/// Rotation axis, either a coordinate name or an explicit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    /// `"x"`, `"y"` or `"z"`.
    Named(NamedAxis),
    /// Components of a (not necessarily normalized) direction.
    Vector([f64; 3]),
}

/// Coordinate axis names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedAxis {
    /// Collective `J_x`.
    X,
    /// Collective `J_y`.
    Y,
    /// Collective `J_z`.
    Z,
}

impl Axis {
    /// Unit vector along the axis.
    pub fn unit(&self) -> Result<Vector3<f64>> {
        let v = match *self {
            Axis::Named(NamedAxis::X) => Vector3::x(),
            Axis::Named(NamedAxis::Y) => Vector3::y(),
            Axis::Named(NamedAxis::Z) => Vector3::z(),
            Axis::Vector(v) => Vector3::from(v),
        };
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidSequence(format!("pulse axis {v:?} has no direction")));
        }
        Ok(v / norm)
    }
}

/// Instantaneous collective pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pulse {
    /// Linear rotation `exp(-i angle n.J)`.
    Rotation {
        /// Rotation axis `n`.
        axis: Axis,
        /// Rotation angle.
        angle: f64,
    },
    /// Nonlinear collective pulse `exp(-i angle (n.J)^2)`.
    Twist {
        /// Twisting axis `n`.
        twist: Axis,
        /// Twisting strength.
        angle: f64,
    },
    /// Unitary known only by name; usable in bounds that ignore the pulse
    /// content but not in simulations.
    Opaque {
        /// Identifier of the unitary.
        tag: String,
    },
}

impl Pulse {
    /// `pi` rotation about `x`.
    pub fn pi_x() -> Self {
        Self::rotation(NamedAxis::X, std::f64::consts::PI)
    }

    /// `pi` rotation about `y`.
    pub fn pi_y() -> Self {
        Self::rotation(NamedAxis::Y, std::f64::consts::PI)
    }

    /// Rotation about a coordinate axis.
    pub fn rotation(axis: NamedAxis, angle: f64) -> Self {
        Self::Rotation { axis: Axis::Named(axis), angle }
    }

    /// Adjoint (SO(3)) action of a linear rotation: `U (v.J) U^dag = (R v).J`.
    pub fn adjoint(&self) -> Result<Matrix3<f64>> {
        match self {
            Pulse::Rotation { axis, angle } => Ok(rodrigues(&axis.unit()?, *angle)),
            Pulse::Twist { .. } => Err(Error::UnsupportedPulse("nonlinear twist has no adjoint rotation".into())),
            Pulse::Opaque { tag } => Err(Error::UnsupportedPulse(format!("opaque pulse '{tag}'"))),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Pulse::Rotation { axis, angle } | Pulse::Twist { twist: axis, angle } => {
                axis.unit()?;
                if !angle.is_finite() {
                    return Err(Error::InvalidSequence(format!("pulse angle {angle} is not finite")));
                }
                Ok(())
            }
            Pulse::Opaque { .. } => Ok(()),
        }
    }
}

/// Rotation by `angle` about the unit vector `n`.
fn rodrigues(n: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0);
    Matrix3::identity() * c + k * s + n * n.transpose() * (1.0 - c)
}

/// Ideal pulse sequence over one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Pulse positions as strictly increasing fractions of `t` in `(0, 1)`.
    pub fractions: Vec<f64>,
    /// One pulse per fraction.
    pub pulses: Vec<Pulse>,
    /// Run duration.
    pub t: f64,
    /// Optional pulse applied at the end of the run; it does not split a
    /// segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Pulse>,
}

impl PulseSequence {
    /// Checked constructor.
    pub fn new(fractions: Vec<f64>, pulses: Vec<Pulse>, t: f64) -> Result<Self> {
        let s = Self { fractions, pulses, t, terminal: None };
        s.validate()?;
        Ok(s)
    }

    /// Free evolution without pulses.
    pub fn free(t: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), t)
    }

    /// Parses and validates the JSON form
    /// `{"fractions": [...], "pulses": [{"axis": "x", "angle": 3.14}, ...], "t": 1.0}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// JSON form of the sequence.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pulse sequences serialize")
    }

    /// Checks the ordering, pulse count and duration invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidSequence(format!("duration must be positive, got {}", self.t)));
        }
        if self.fractions.len() != self.pulses.len() {
            return Err(Error::InvalidSequence(format!(
                "{} fractions but {} pulses",
                self.fractions.len(),
                self.pulses.len()
            )));
        }
        let mut last = 0.0;
        for &a in &self.fractions {
            if !(a > last && a < 1.0) {
                return Err(Error::InvalidSequence(format!("fractions must increase strictly inside (0, 1): {:?}", self.fractions)));
            }
            last = a;
        }
        self.pulses.iter().chain(self.terminal.iter()).try_for_each(Pulse::validate)
    }

    /// Number of pulses `Q`.
    pub fn q(&self) -> usize {
        self.pulses.len()
    }

    /// Number of segments `Q' = Q + 1`.
    pub fn q_prime(&self) -> usize {
        self.pulses.len() + 1
    }

    /// Segment boundaries `0, a_1, ..., a_Q, 1` as fractions.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.q() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.fractions);
        b.push(1.0);
        b
    }

    /// Segment windows `(t_j, t_{j+1})` in time units.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        self.boundaries().windows(2).map(|w| (w[0] * self.t, w[1] * self.t)).collect()
    }

    /// Segment durations `dt_j`.
    pub fn durations(&self) -> DVector<f64> {
        let b = self.boundaries();
        DVector::from_iterator(self.q_prime(), b.windows(2).map(|w| (w[1] - w[0]) * self.t))
    }
}

/// Toggling-frame generator directions `g_j`, with `G_j = g_j . J`.
///
/// Fails with [`Error::UnsupportedPulse`] for pulses that are not linear
/// collective rotations.
pub fn toggling_generators(seq: &PulseSequence) -> Result<Vec<Vector3<f64>>> {
    seq.validate()?;
    // g_j = R_1^T ... R_{j-1}^T z: accumulate the transpose of P_j's rotation.
    let mut acc = Matrix3::identity();
    let mut out = Vec::with_capacity(seq.q_prime());
    out.push(Vector3::z());
    for p in &seq.pulses {
        acc *= p.adjoint()?.transpose();
        out.push(acc * Vector3::z());
    }
    Ok(out)
}

/// Tolerance on the cross product when comparing generator directions.
const PARALLEL_TOL: f64 = 1e-9;

/// Grouping of segments into decoupling blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    /// `Q~ x Q'` matrix with one row per block and entries in `{-1, 0, +1}`.
    pub s: DMatrix<f64>,
    /// Segment ranges of the blocks.
    pub blocks: Vec<std::ops::Range<usize>>,
    /// Sign `y_j` of each segment relative to the first segment of its block.
    pub signs: Vec<f64>,
    /// Generator direction of each block (that of its first segment), when
    /// known.
    pub generators: Vec<Option<Vector3<f64>>>,
}

impl Compression {
    /// No compression: every segment is its own block.
    pub fn identity(q_prime: usize) -> Self {
        Self {
            s: DMatrix::identity(q_prime, q_prime),
            blocks: (0..q_prime).map(|j| j..j + 1).collect(),
            signs: vec![1.0; q_prime],
            generators: vec![None; q_prime],
        }
    }

    /// Builds `S` from blocks and signs.
    pub fn from_blocks(blocks: Vec<std::ops::Range<usize>>, signs: Vec<f64>) -> Result<Self> {
        let q_prime = signs.len();
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end <= b.start {
                return Err(Error::RankDeficient(format!("blocks {blocks:?} do not tile 0..{q_prime}")));
            }
            next = b.end;
        }
        if next != q_prime || signs.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::RankDeficient(format!("blocks {blocks:?} with signs {signs:?} are not a compression")));
        }
        let mut s = DMatrix::zeros(blocks.len(), q_prime);
        for (r, b) in blocks.iter().enumerate() {
            for j in b.clone() {
                s[(r, j)] = signs[j];
            }
        }
        let generators = vec![None; blocks.len()];
        Ok(Self { s, blocks, signs, generators })
    }

    /// Number of effective labels `Q~`.
    pub fn rows(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the first segment of each block.
    pub fn leaders(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.start).collect()
    }

    /// Effective signal times `S dt`.
    pub fn compress_durations(&self, dt: &DVector<f64>) -> DVector<f64> {
        &self.s * dt
    }

    /// Effective covariance `S Sigma S^T`.
    pub fn compress_covariance(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        let c = &self.s * sigma * self.s.transpose();
        (&c + c.transpose()) * 0.5
    }
}

/// Groups maximal runs of consecutive segments whose toggling generators
/// agree up to sign.
///
/// A sequence with a pulse that is not a linear rotation yields
/// [`Error::UnsupportedPulse`]; [`Compression::identity`] remains a valid
/// (uncompressed) choice for it.
pub fn detect_dp_blocks(seq: &PulseSequence) -> Result<Compression> {
    let g = toggling_generators(seq)?;
    let mut blocks = Vec::new();
    let mut signs = vec![1.0; g.len()];
    let mut generators = Vec::new();
    let mut start = 0;
    for j in 1..=g.len() {
        let same = j < g.len() && g[j].cross(&g[start]).norm() < PARALLEL_TOL;
        if same {
            signs[j] = g[j].dot(&g[start]).signum();
        } else {
            blocks.push(start..j);
            generators.push(Some(g[start]));
            start = j;
        }
    }
    let mut c = Compression::from_blocks(blocks, signs)?;
    c.generators = generators;
    Ok(c)
}

/// Covariance matrix of the segment phases.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCovariance {
    /// `Sigma_ij = <lambda_i lambda_j>`.
    pub sigma: DMatrix<f64>,
    /// Run duration.
    pub t: f64,
    /// Segment durations.
    pub durations: DVector<f64>,
    /// Noise model the covariance was built from.
    pub model: NoiseModel,
}

/// Relative tolerance of the positive-semidefiniteness check.
pub const PSD_TOL: f64 = 1e-12;

/// Builds `Sigma_ij = int_{t_i}^{t_{i+1}} int_{t_j}^{t_{j+1}} C(s, s') ds ds'`.
///
/// White noise gives exactly `chi0 wc diag(dt)`.
pub fn build_segment_covariance(model: &NoiseModel, seq: &PulseSequence) -> Result<SegmentCovariance> {
    model.validate()?;
    seq.validate()?;
    let dt = seq.durations();
    let q = dt.len();
    let sigma = if let NoiseModel::White { chi0, omega_c } = *model {
        DMatrix::from_diagonal(&(dt.clone() * (chi0 * omega_c)))
    } else {
        let w = seq.windows();
        let mut m = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in 0..=i {
                let v = model.interval_covariance(w[i], w[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    check_psd(&sigma)?;
    Ok(SegmentCovariance { sigma, t: seq.t, durations: dt, model: model.clone() })
}

fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL * scale {
        return Err(Error::CovarianceNotPsd(min));
    }
    Ok(())
}

/// Condition number above which `f64` solves are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Quadratic-form bound on the single-run quantum Fisher information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormBound {
    /// `dt^T Sigma^{-1} dt`.
    pub value: f64,
    /// Condition number of the scaled covariance `D Sigma D`, `D = diag(1/dt)`.
    pub condition: f64,
}

impl QuadraticFormBound {
    /// Bound on the total information of `T / t` repetitions.
    pub fn total(&self, t: f64, total_time: f64) -> f64 {
        total_time / t * self.value
    }
}

/// `x^T A^{-1} x` for symmetric positive-definite `A`, after the symmetric
/// scaling `D = diag(1/x)` (when `x` has no zero entries).
fn scaled_quadratic_form(a: &DMatrix<f64>, x: &DVector<f64>) -> Result<QuadraticFormBound> {
    let d: DVector<f64> = x.map(|v| if v != 0.0 { 1.0 / v.abs() } else { 1.0 });
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i] * d[j]);
    let rhs = x.component_mul(&d);
    let eig = SymmetricEigen::new(scaled.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let ch = Cholesky::new(scaled).ok_or(Error::IllConditioned { condition })?;
    let value = rhs.dot(&ch.solve(&rhs));
    Ok(QuadraticFormBound { value, condition })
}

/// `dt^T Sigma^{-1} dt` via a Cholesky factorization of the scaled
/// covariance.
///
/// Smooth noise at `wc t << 1` makes `Sigma` nearly singular; such cases
/// fail with [`Error::IllConditioned`] and are handled by [`kq_numeric`].
pub fn quadratic_form_bound(cov: &SegmentCovariance) -> Result<QuadraticFormBound> {
    scaled_quadratic_form(&cov.sigma, &cov.durations)
}

/// Outcome of a compression monotonicity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// `dt^T Sigma^{-1} dt`.
    pub full: f64,
    /// `(S dt)^T (S Sigma S^T)^{-1} (S dt)`.
    pub compressed: f64,
    /// `max |P^2 - P|` for `P = Sigma^{1/2} S^T (S Sigma S^T)^{-1} S Sigma^{1/2}`.
    pub idempotence: f64,
    /// `max |P - P^T|`.
    pub asymmetry: f64,
    /// Largest distance of an eigenvalue of `P` from `{0, 1}`.
    pub spectrum: f64,
}

impl MonotonicityReport {
    /// Relative amount by which the compressed form exceeds the full one
    /// (non-positive when monotonicity holds).
    pub fn violation(&self) -> f64 {
        (self.compressed - self.full) / self.full.abs().max(f64::MIN_POSITIVE)
    }
}

/// Verifies that compressing the segment labels cannot increase the
/// quadratic form, and that the associated `P` is an orthogonal projector.
pub fn check_compression_monotonicity(sigma: &DMatrix<f64>, s: &DMatrix<f64>, dt: &DVector<f64>) -> Result<MonotonicityReport> {
    let q = sigma.nrows();
    ensure(sigma.is_square() && s.ncols() == q && dt.len() == q, || "shape mismatch in compression check".into())?;
    let sv = s.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if s.nrows() > q || !(lo > 1e-12 * hi) {
        return Err(Error::RankDeficient(format!("S has singular values {:?}", sv.as_slice())));
    }
    let sigma = (sigma + sigma.transpose()) * 0.5;
    let full_ch = Cholesky::new(sigma.clone()).ok_or_else(|| Error::SingularCovariance("Sigma is not positive definite".into()))?;
    let full = dt.dot(&full_ch.solve(dt));
    let small = s * &sigma * s.transpose();
    let small = (&small + small.transpose()) * 0.5;
    let small_ch = Cholesky::new(small).ok_or_else(|| Error::SingularCovariance("S Sigma S^T is not positive definite".into()))?;
    let sdt = s * dt;
    let compressed = sdt.dot(&small_ch.solve(&sdt));

    let eig = SymmetricEigen::new(sigma);
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt())) * eig.eigenvectors.transpose();
    let b = s * &root;
    let p = b.transpose() * small_ch.solve(&b);
    let idempotence = (&p * &p - &p).amax();
    let asymmetry = (&p - p.transpose()).amax();
    let pe = SymmetricEigen::new((&p + p.transpose()) * 0.5);
    let spectrum = pe.eigenvalues.iter().map(|&l| l.abs().min((l - 1.0).abs())).fold(0.0, f64::max);
    Ok(MonotonicityReport { full, compressed, idempotence, asymmetry, spectrum })
}

/// Noise regime of the controlled no-go bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NogoRegime {
    /// White noise with `C = chi0 wc delta(s - s')`.
    White {
        /// Dimensionless strength.
        chi0: f64,
        /// Cutoff frequency.
        omega_c: f64,
    },
    /// Stationary colored noise with short-time constant `K_{Q'}`.
    Colored {
        /// `K_{Q'}` for the number of segments used.
        k: f64,
        /// Cutoff frequency.
        omega_c: f64,
    },
}

/// Optimal run time and precision floor under control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NogoBound {
    /// Run time maximizing the total-information bound; for white noise the
    /// earliest time at which the bound saturates.
    pub t_star: f64,
    /// Lower bound on the estimator variance.
    pub precision: f64,
}

impl NogoRegime {
    fn validate(&self) -> Result<()> {
        let (a, w) = match *self {
            NogoRegime::White { chi0, omega_c } => (chi0, omega_c),
            NogoRegime::Colored { k, omega_c } => (k, omega_c),
        };
        ensure(a > 0.0 && w > 0.0 && a.is_finite() && w.is_finite(), || format!("invalid no-go regime {self:?}"))
    }

    /// Saturation value of the single-run information `dt^T Sigma^{-1} dt`
    /// times `1 / t`, i.e. the noise-limited branch of the total bound per
    /// unit of total time and unit run time.
    fn noise_branch(&self, t: f64) -> f64 {
        match *self {
            NogoRegime::White { chi0, omega_c } => 1.0 / (chi0 * omega_c),
            NogoRegime::Colored { k, omega_c } => k / (omega_c * omega_c * t),
        }
    }
}

/// Two-branch bound on the total information for run time `t`:
/// `T min(N^2 t, noise branch)`.
pub fn nogo_curve(n: f64, total: f64, regime: NogoRegime, t: f64) -> Result<f64> {
    regime.validate()?;
    ensure(n >= 1.0 && total > 0.0 && t > 0.0, || "N >= 1, T > 0 and t > 0 required".into())?;
    Ok(total * (n * n * t).min(regime.noise_branch(t)))
}

/// Controlled no-go bound: the best precision any pulse sequence can reach.
///
/// White noise: `chi0 wc / T`, independent of `N` and of the sequence.
/// Colored noise: `t* = sqrt(K) / (wc N)` and `wc / (T N sqrt(K))`.
pub fn controlled_nogo_bound(n: f64, total: f64, regime: NogoRegime) -> Result<NogoBound> {
    regime.validate()?;
    ensure(n >= 1.0 && total > 0.0, || "N >= 1 and T > 0 required".into())?;
    Ok(match regime {
        NogoRegime::White { chi0, omega_c } => NogoBound { t_star: 1.0 / (chi0 * omega_c * n * n), precision: chi0 * omega_c / total },
        NogoRegime::Colored { k, omega_c } => NogoBound {
            t_star: k.sqrt() / (omega_c * n),
            precision: omega_c / (total * n * k.sqrt()),
        },
    })
}

/// Discretizes a continuous control field into slice pulses.
///
/// `samples[l]` is the field `u(t_l)` at the start of slice `l` of
/// `samples.len()` uniform slices over `[0, t]`; the slice pulse is the
/// rotation by `dt |u|` about `u`, applied at the end of the slice. Zero
/// samples produce no pulse, and the pulse closing the last slice becomes
/// the terminal pulse.
pub fn continuous_to_pulsed(samples: &[[f64; 3]], t: f64) -> Result<PulseSequence> {
    ensure(t > 0.0 && !samples.is_empty(), || "need t > 0 and at least one slice".into())?;
    let q = samples.len();
    let dt = t / q as f64;
    let mut seq = PulseSequence { fractions: Vec::new(), pulses: Vec::new(), t, terminal: None };
    for (l, u) in samples.iter().enumerate() {
        let v = Vector3::from(*u);
        let norm = v.norm();
        ensure(norm.is_finite(), || format!("control sample {l} is not finite"))?;
        if norm == 0.0 {
            continue;
        }
        let pulse = Pulse::Rotation { axis: Axis::Vector(*u), angle: norm * dt };
        if l + 1 == q {
            seq.terminal = Some(pulse);
        } else {
            seq.fractions.push((l + 1) as f64 / q as f64);
            seq.pulses.push(pulse);
        }
    }
    seq.validate()?;
    Ok(seq)
}

/// `exp(-i angle H)` for Hermitian `H`.
pub fn exp_hermitian(h: &CMatrix, angle: f64) -> CMatrix {
    let (lam, v) = hermitian_eigen(h);
    let phases = DVector::from_iterator(lam.len(), lam.iter().map(|&l| Complex64::from_polar(1.0, -angle * l)));
    &v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Collective operator `n.J` on the Dicke sector of `N` probes.
pub fn collective(n_probes: usize, axis: &Vector3<f64>) -> CMatrix {
    jx(n_probes) * Complex64::from(axis.x) + jy(n_probes) * Complex64::from(axis.y) + jz(n_probes) * Complex64::from(axis.z)
}

/// Unitary of a pulse on the Dicke sector of `N` probes.
pub fn pulse_unitary(pulse: &Pulse, n_probes: usize) -> Result<CMatrix> {
    match pulse {
        Pulse::Rotation { axis, angle } => Ok(exp_hermitian(&collective(n_probes, &axis.unit()?), *angle)),
        Pulse::Twist { twist, angle } => {
            let g = collective(n_probes, &twist.unit()?);
            Ok(exp_hermitian(&(&g * &g), *angle))
        }
        Pulse::Opaque { tag } => Err(Error::UnsupportedPulse(format!("opaque pulse '{tag}' has no matrix"))),
    }
}

/// Products `P_j` of the pulses preceding each segment, and the full
/// product including the terminal pulse.
pub fn cumulative_pulses(seq: &PulseSequence, n_probes: usize) -> Result<(Vec<CMatrix>, CMatrix)> {
    let dim = n_probes + 1;
    let mut acc = CMatrix::identity(dim, dim);
    let mut before = vec![acc.clone()];
    for p in &seq.pulses {
        acc = pulse_unitary(p, n_probes)? * acc;
        before.push(acc.clone());
    }
    let total = match &seq.terminal {
        Some(p) => pulse_unitary(p, n_probes)? * &acc,
        None => acc,
    };
    Ok((before, total))
}

/// Unitary of one run for signal `b` and segment phases `lambdas`
/// (zero phases when `None`).
pub fn sequence_unitary(seq: &PulseSequence, n_probes: usize, b: f64, lambdas: Option<&[f64]>) -> Result<CMatrix> {
    seq.validate()?;
    let dt = seq.durations();
    if let Some(l) = lambdas {
        ensure(l.len() == dt.len(), || "one phase per segment required".into())?;
    }
    let ms = crate::dicke::m_values(n_probes);
    let dim = n_probes + 1;
    let mut u = CMatrix::identity(dim, dim);
    for j in 0..dt.len() {
        let phi = b * dt[j] + lambdas.map_or(0.0, |l| l[j]);
        let free = CMatrix::from_diagonal(&DVector::from_iterator(dim, ms.iter().map(|&m| Complex64::from_polar(1.0, -phi * m))));
        u = free * u;
        if j < seq.q() {
            u = pulse_unitary(&seq.pulses[j], n_probes)? * u;
        }
    }
    if let Some(p) = &seq.terminal {
        u = pulse_unitary(p, n_probes)? * u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests;
