//! Permutation-symmetric states of `N` qubits in the Dicke basis.
//!
//! States live in the maximal-spin sector `J = N/2`, represented by their
//! `(N+1) x (N+1)` density matrix in the `J_z` eigenbasis. Row and column
//! `k` correspond to the eigenvalue `m = k - J`, so index 0 is `|J, -J>` and
//! index `N` is `|J, J>`.
//!
//! Collective dephasing and the signal `b J_z` act entrywise:
//! `rho[m, m'] -> rho0[m, m'] exp(-i b t (m - m')) exp(-chi (m - m')^2)`.
//! The parameter derivative of an evolved state is therefore analytic,
//! `d rho / db = -i t (m - m') rho`, and the quantum Fisher information
//! follows from one Hermitian eigendecomposition.
//!
//! # Input states
//!
//! Signal and noise couple to `J_z`. In this frame the coherent spin state is
//! `|+x>^N` and the one-axis-twisted family is
//! `exp(i beta J_x) exp(-i mu J_z^2) |+x>^N`. This is the frame-rotated image
//! of a `z`-polarized state twisted about `x` and rotated about `z`; its
//! small-`mu` quadrature variances follow the bosonic squeezing and shear
//! parameters of [`crate::phase_space::oats_params`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure, Error, Result};

/// Largest probe number accepted by the state constructors.
pub const N_MAX: usize = 2048;

/// Default eigenvalue-pair floor for the QFI sum.
pub const EIG_FLOOR: f64 = 1e-12;

/// Complex matrix type used for operators on the symmetric sector.
pub type CMatrix = DMatrix<Complex64>;

/// Density matrix of a symmetric `N`-qubit state with the signal and time
/// it was evolved with.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n: usize,
    rho: CMatrix,
    b: f64,
    t: f64,
}

/// Serializable matrix dump of a [`DickeState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeStateDoc {
    /// Probe number `N`.
    pub n: usize,
    /// Signal frequency the state was evolved with.
    pub b: f64,
    /// Interrogation time.
    pub t: f64,
    /// Real parts, row-major rows.
    pub re: Vec<Vec<f64>>,
    /// Imaginary parts, row-major rows.
    pub im: Vec<Vec<f64>>,
}

impl DickeState {
    /// Wraps a density matrix after checking dimension, Hermiticity and trace.
    ///
    /// Positivity is checked separately by [`DickeState::validate`] because it
    /// needs an eigendecomposition.
    pub fn new(rho: CMatrix, b: f64, t: f64) -> Result<Self> {
        let dim = rho.nrows();
        ensure(dim >= 2 && rho.ncols() == dim, || {
            format!("density matrix must be square with N >= 1, got {}x{}", rho.nrows(), rho.ncols())
        })?;
        let n = dim - 1;
        ensure(n <= N_MAX, || format!("N = {n} exceeds the configured maximum {N_MAX}"))?;
        let s = Self { n, rho, b, t };
        s.check_hermitian_trace()?;
        Ok(s)
    }

    /// Pure state `|psi><psi|` after normalizing `psi`.
    pub fn from_pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        ensure(norm > 0.0 && norm.is_finite(), || "state vector must be nonzero".into())?;
        let v = psi / Complex64::new(norm, 0.0);
        Self::new(&v * v.adjoint(), 0.0, 0.0)
    }

    /// Probe number `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Spin `J = N/2`.
    pub fn j(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Density matrix.
    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// Signal frequency.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Interrogation time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// `m` values labelling rows and columns.
    pub fn m_values(&self) -> Vec<f64> {
        m_values(self.n)
    }

    /// Expectation value `Tr(rho O)` (real part).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace_product(&self.rho, op)
    }

    fn check_hermitian_trace(&self) -> Result<()> {
        let scale = self.rho.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let dim = self.n + 1;
        for i in 0..dim {
            for j in i..dim {
                let d = (self.rho[(i, j)] - self.rho[(j, i)].conj()).norm();
                if !d.is_finite() || d > 1e-10 * scale {
                    return Err(Error::NotAState(format!("not Hermitian at ({i}, {j}): deviation {d:e}")));
                }
            }
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::NotAState(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }

    /// Full density-matrix check: Hermitian, unit trace and eigenvalues
    /// above `-tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_hermitian_trace()?;
        let min = hermitian_eigen(&self.rho).0.into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotAState(format!("eigenvalue {min:e} below -{tol:e}")));
        }
        Ok(())
    }

    /// Matrix dump for fixtures.
    pub fn to_doc(&self) -> DickeStateDoc {
        let dim = self.n + 1;
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..dim).map(|i| (0..dim).map(|j| f(&self.rho[(i, j)])).collect()).collect()
        };
        DickeStateDoc { n: self.n, b: self.b, t: self.t, re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    /// Rebuilds a state from a matrix dump, validating it.
    pub fn from_doc(doc: &DickeStateDoc) -> Result<Self> {
        let dim = doc.n + 1;
        let shape_ok = doc.re.len() == dim
            && doc.im.len() == dim
            && doc.re.iter().chain(doc.im.iter()).all(|r| r.len() == dim);
        if !shape_ok {
            return Err(Error::Parse(format!("matrix dump does not have shape {dim}x{dim}")));
        }
        let rho = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(doc.re[i][j], doc.im[i][j]));
        Self::new(rho, doc.b, doc.t)
    }

    /// JSON text of the matrix dump.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("matrix dump serializes")
    }

    /// Parses a JSON matrix dump.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DickeStateDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(&doc)
    }
}

/// `m = k - J` for `k = 0..=N`.
pub fn m_values(n: usize) -> Vec<f64> {
    let j = n as f64 / 2.0;
    (0..=n).map(|k| k as f64 - j).collect()
}

/// `J_z`.
pub fn jz(n: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(n + 1, m_values(n).into_iter().map(|m| Complex64::new(m, 0.0))))
}

fn jplus_real(n: usize) -> DMatrix<f64> {
    let j = n as f64 / 2.0;
    let ms = m_values(n);
    let mut jp = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        let m = ms[k];
        jp[(k + 1, k)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
    }
    jp
}

fn jx_real(n: usize) -> DMatrix<f64> {
    let jp = jplus_real(n);
    (&jp + jp.transpose()) * 0.5
}

/// `J_x`.
pub fn jx(n: usize) -> CMatrix {
    jx_real(n).map(|v| Complex64::new(v, 0.0))
}

/// `J_y`.
pub fn jy(n: usize) -> CMatrix {
    let jp = jplus_real(n);
    let diff = &jp - jp.transpose();
    diff.map(|v| Complex64::new(0.0, -0.5 * v))
}

/// Parity operator that maps `|m>` to `|-m>`: the permutation-symmetric
/// restriction of `sigma_x` applied to every qubit.
pub fn parity(n: usize) -> CMatrix {
    CMatrix::from_fn(n + 1, n + 1, |i, j| if i + j == n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

type JxBasis = Arc<(Vec<f64>, DMatrix<f64>)>;

/// Eigen-decomposition of `J_x` (real symmetric), cached per `N`.
fn jx_eigenbasis(n: usize) -> JxBasis {
    static CACHE: OnceLock<Mutex<HashMap<usize, JxBasis>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("cache lock").get(&n) {
        return hit.clone();
    }
    let eig = SymmetricEigen::new(jx_real(n));
    let entry: JxBasis = Arc::new((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors));
    cache.lock().expect("cache lock").entry(n).or_insert(entry).clone()
}

/// Applies `exp(-i theta J_x)` to a state vector.
pub fn rotate_x(psi: &DVector<Complex64>, theta: f64) -> DVector<Complex64> {
    let n = psi.len() - 1;
    let basis = jx_eigenbasis(n);
    let (w, v) = (&basis.0, &basis.1);
    let vc = v.map(|x| Complex64::new(x, 0.0));
    let mut coeffs = vc.transpose() * psi;
    for (c, &wk) in coeffs.iter_mut().zip(w) {
        *c *= Complex64::from_polar(1.0, -theta * wk);
    }
    vc * coeffs
}

/// Coherent spin state `|+x>^N` in the Dicke basis.
pub fn css_vector(n: usize) -> DVector<Complex64> {
    let nf = n as f64;
    DVector::from_iterator(
        n + 1,
        (0..=n).map(|k| {
            let ln_binom = ln_gamma(nf + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma(nf - k as f64 + 1.0);
            Complex64::new((0.5 * ln_binom - 0.5 * nf * std::f64::consts::LN_2).exp(), 0.0)
        }),
    )
}

/// One-axis-twisted state vector `exp(i beta J_x) exp(-i mu J_z^2) |+x>^N`.
pub fn oats_vector(n: usize, mu: f64, beta: f64) -> DVector<Complex64> {
    let mut psi = css_vector(n);
    for (c, m) in psi.iter_mut().zip(m_values(n)) {
        *c *= Complex64::from_polar(1.0, -mu * m * m);
    }
    if beta == 0.0 {
        psi
    } else {
        rotate_x(&psi, -beta)
    }
}

/// Input state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `(|J, J> + |J, -J>) / sqrt(2)`.
    Ghz,
    /// Coherent spin state `|+x>^N`.
    Css,
    /// One-axis-twisted state with twist `mu` and rotation `beta`.
    Oats,
}

/// Builds an input state. `mu` and `beta` are used by [`InputKind::Oats`] only.
pub fn build_input(kind: InputKind, n: usize, mu: f64, beta: f64) -> Result<DickeState> {
    ensure(n >= 1, || "probe number must be at least 1".into())?;
    ensure(n <= N_MAX, || format!("N = {n} exceeds the configured maximum {N_MAX}"))?;
    let psi = match kind {
        InputKind::Ghz => {
            let mut v = DVector::from_element(n + 1, Complex64::new(0.0, 0.0));
            v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[n] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v
        }
        InputKind::Css => css_vector(n),
        InputKind::Oats => {
            ensure(mu.is_finite() && beta.is_finite(), || "mu and beta must be finite".into())?;
            oats_vector(n, mu, beta)
        }
    };
    DickeState::from_pure(&psi)
}

/// Signal and dephasing map applied to an input state.
///
/// The time `t` only enters through the phase `b t`; `chi` is the dephasing
/// exponent accumulated over the same window.
pub fn evolve(rho0: &DickeState, b: f64, chi: f64, t: f64) -> DickeState {
    let ms = rho0.m_values();
    let dim = ms.len();
    let rho = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            return rho0.rho[(i, j)];
        }
        let dm = ms[i] - ms[j];
        rho0.rho[(i, j)] * Complex64::from_polar((-chi * dm * dm).exp(), -b * t * dm)
    });
    DickeState { n: rho0.n, rho, b, t }
}

/// Analytic `d rho / db` of an evolved state: entrywise `-i t (m - m') rho`.
pub fn drho_db(rho_b: &DickeState) -> CMatrix {
    let ms = rho_b.m_values();
    let dim = ms.len();
    CMatrix::from_fn(dim, dim, |i, j| rho_b.rho[(i, j)] * Complex64::new(0.0, -rho_b.t * (ms[i] - ms[j])))
}

/// Quantum Fisher information and symmetric logarithmic derivative.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Quantum Fisher information of a single shot.
    pub qfi: f64,
    /// Symmetric logarithmic derivative in the Dicke basis.
    pub sld: CMatrix,
    /// Method-of-moments precision, when an observable was evaluated.
    pub precision_variance: Option<f64>,
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// QFI `sum 2 |<i|d rho|j>|^2 / (l_i + l_j)` over pairs with
/// `l_i + l_j > eig_floor`, and the SLD assembled from the same terms.
pub fn qfi_and_sld(rho: &CMatrix, drho: &CMatrix, eig_floor: f64) -> Result<EstimationResult> {
    let (lam, u) = hermitian_eigen(rho);
    if let Some(&min) = lam.first() {
        if min < -1e-9 {
            return Err(Error::NotAState(format!("eigenvalue {min:e} below -1e-9")));
        }
    }
    let d = u.adjoint() * drho * &u;
    let dim = lam.len();
    let mut qfi = 0.0;
    let mut l_eig = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let s = lam[i] + lam[j];
            if s > eig_floor {
                qfi += 2.0 * d[(i, j)].norm_sqr() / s;
                l_eig[(i, j)] = d[(i, j)] * (2.0 / s);
            }
        }
    }
    let sld = &u * l_eig * u.adjoint();
    Ok(EstimationResult { qfi, sld, precision_variance: None })
}

/// QFI of an evolved Dicke state with respect to `b`.
pub fn qfi_of_state(rho_b: &DickeState) -> Result<EstimationResult> {
    qfi_and_sld(rho_b.rho(), &drho_db(rho_b), EIG_FLOOR)
}

/// Method-of-moments precision `t Var(O) / (T (d<O>/db)^2)`.
///
/// `family(b)` returns the evolved state at signal `b`; the slope is a
/// central difference with step `delta` around `b0`, and the variance is
/// taken at `b0`.
pub fn moments_precision<F>(family: F, b0: f64, delta: f64, observable: &CMatrix, total_time: f64) -> Result<f64>
where
    F: Fn(f64) -> DickeState,
{
    ensure(delta > 0.0 && total_time > 0.0, || "step and total time must be positive".into())?;
    let center = family(b0);
    let up = family(b0 + delta).expectation(observable);
    let down = family(b0 - delta).expectation(observable);
    let slope = (up - down) / (2.0 * delta);
    let mean = center.expectation(observable);
    let second = center.expectation(&(observable * observable));
    let var = (second - mean * mean).max(0.0);
    let op_scale = observable.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let signal_scale = op_scale * center.t().max(f64::MIN_POSITIVE) * center.n() as f64;
    if slope.abs() <= 1e-9 * signal_scale {
        return Err(Error::ZeroSlope);
    }
    Ok(center.t() * var / (total_time * slope * slope))
}

/// `Re Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let dim = a.nrows();
    let mut acc = 0.0;
    for i in 0..dim {
        for k in 0..dim {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// `Var(J_z)` of a state.
pub fn variance_jz(state: &DickeState) -> f64 {
    let ms = state.m_values();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, &m) in ms.iter().enumerate() {
        let p = state.rho[(k, k)].re;
        m1 += p * m;
        m2 += p * m * m;
    }
    (m2 - m1 * m1).max(0.0)
}

#[cfg(test)]
mod tests;
