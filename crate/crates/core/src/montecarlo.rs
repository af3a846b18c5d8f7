//! Trajectory-level Monte Carlo oracle.
//!
//! Noise phases are drawn exactly from their Gaussian law, using a PSD
//! factorization of the analytic covariance (no path discretization), and
//! every trajectory is evolved unitarily. Averages over trajectories are an
//! independent check on the closed-form dephasing maps.
//!
//! Reproducibility: samples are generated in fixed-size blocks; block `k`
//! uses a ChaCha20 generator seeded with the run seed and switched to stream
//! `k`. Results are therefore bit-identical for a given seed regardless of
//! the number of worker threads.
//!
//! A phase `lambda` of variance `v` multiplies the Dicke coherence
//! `(m, m')` by `E exp(-i lambda (m - m')) = exp(-v (m - m')^2 / 2)`, i.e. it
//! reproduces the dephasing map with exponent `v / 2`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dicke::{hermitian_eigen, CMatrix, DickeState};
use crate::error::{ensure, Error, Result};
use crate::noise::NoiseModel;

/// Samples per independently seeded block.
pub const BLOCK: usize = 4096;

/// Exact sampler for a centered multivariate normal law.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    /// Factorizes `cov = L L^T`, by Cholesky when possible and otherwise by a
    /// symmetric eigendecomposition with round-off negative eigenvalues
    /// clipped to zero. Eigenvalues below `-1e-12` times the largest
    /// magnitude are reported as [`Error::CovarianceNotPsd`].
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        ensure(cov.is_square(), || "covariance must be square".into())?;
        let sym = (cov + cov.transpose()) * 0.5;
        if let Some(ch) = Cholesky::new(sym.clone()) {
            return Ok(Self { factor: ch.l() });
        }
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::CovarianceNotPsd(min));
        }
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        Ok(Self { factor: &eig.eigenvectors * DMatrix::from_diagonal(&roots) })
    }

    /// Dimension of the law.
    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Draws `rows` samples of block `block` as a row-major vector; block
    /// `k` uses stream `k` of the generator seeded with `seed`.
    pub fn draw_block(&self, block: usize, rows: usize, seed: u64) -> Vec<f64> {
        let dim = self.dim();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let mut out = Vec::with_capacity(rows * dim);
        let mut z = vec![0.0; dim];
        for _ in 0..rows {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for i in 0..dim {
                out.push((0..dim).map(|j| self.factor[(i, j)] * z[j]).sum());
            }
        }
        out
    }

    /// Draws `count` samples as the rows of a `count x dim` matrix.
    pub fn draw(&self, count: usize, seed: u64) -> DMatrix<f64> {
        let blocks = count.div_ceil(BLOCK);
        let chunks: Vec<Vec<f64>> = (0..blocks)
            .into_par_iter()
            .map(|k| self.draw_block(k, BLOCK.min(count - k * BLOCK), seed))
            .collect();
        let flat: Vec<f64> = chunks.into_iter().flatten().collect();
        DMatrix::from_row_slice(count, self.dim(), &flat)
    }
}

/// Sampled noise phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    /// `count x grid.len()` samples.
    pub samples: DMatrix<f64>,
    /// Seed of the run.
    pub seed: u64,
    /// Time points (or segment indices for pulsed runs).
    pub grid: Vec<f64>,
}

impl TrajectoryEnsemble {
    /// Number of trajectories.
    pub fn count(&self) -> usize {
        self.samples.nrows()
    }

    /// Samples of column `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples.column(k).iter().copied().collect()
    }

    /// Sample mean and its standard error for column `k`.
    pub fn mean(&self, k: usize) -> (f64, f64) {
        let col = self.column(k);
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    /// Second moment `E[lambda_i lambda_j]` (the mean is known to vanish)
    /// and its standard error.
    pub fn second_moment(&self, i: usize, j: usize) -> (f64, f64) {
        let n = self.count() as f64;
        let prod: Vec<f64> = self.samples.column(i).iter().zip(self.samples.column(j).iter()).map(|(a, b)| a * b).collect();
        let m = prod.iter().sum::<f64>() / n;
        let var = prod.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    /// Writes the ensemble as CSV with a `# seed` header line.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={} count={} grid={:?}", self.seed, self.count(), self.grid)
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = self.grid.iter().map(|g| format!("lambda@{g}")).collect();
        w.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
        for r in 0..self.count() {
            let row: Vec<String> = self.samples.row(r).iter().map(|v| format!("{v:e}")).collect();
            w.write_record(&row).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Draws `count` joint samples of `lambda(t_i)` on a time grid from the
/// covariance `Cov(lambda(t_i), lambda(t_j))` of the model.
pub fn sample_phase_process(model: &NoiseModel, grid: &[f64], count: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    model.validate()?;
    ensure(grid.iter().all(|&t| t >= 0.0 && t.is_finite()), || "grid times must be non-negative".into())?;
    let k = grid.len();
    let mut cov = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let c = model.phase_covariance(grid[i], grid[j])?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    sample_from_covariance(&cov, grid.to_vec(), count, seed)
}

/// Draws `count` samples from an explicit covariance, e.g. a segment
/// covariance for a pulsed run.
pub fn sample_from_covariance(cov: &DMatrix<f64>, grid: Vec<f64>, count: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    ensure(grid.len() == cov.nrows(), || "grid length must match the covariance".into())?;
    if count == 0 {
        return Ok(TrajectoryEnsemble { samples: DMatrix::zeros(0, grid.len()), seed, grid });
    }
    let sampler = GaussianSampler::new(cov)?;
    Ok(TrajectoryEnsemble { samples: sampler.draw(count, seed), seed, grid })
}

/// Ornstein-Uhlenbeck phase `lambda(t)` from simulated paths: the exact
/// AR(1) update for `xi` on `steps` intervals and the trapezoidal rule for
/// its integral. Used to cross-check the exact sampler; the quadrature bias
/// vanishes as `steps` grows.
pub fn simulate_ou_phase(sigma2: f64, omega_c: f64, t: f64, steps: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    ensure(sigma2 > 0.0 && omega_c > 0.0 && t > 0.0 && steps > 0, || "invalid OU path parameters".into())?;
    let h = t / steps as f64;
    let a = (-omega_c * h).exp();
    let s = (sigma2 * (1.0 - a * a)).sqrt();
    let blocks = count.div_ceil(BLOCK);
    let out: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let rows = BLOCK.min(count - k * BLOCK);
            (0..rows)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let mut xi = sigma2.sqrt() * z;
                    let mut lambda = 0.0;
                    for _ in 0..steps {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let next = a * xi + s * z;
                        lambda += 0.5 * h * (xi + next);
                        xi = next;
                    }
                    lambda
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Empirical average state with its Frobenius-norm standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedState {
    /// Sample mean of the trajectory states.
    pub state: DickeState,
    /// `sqrt(E ||mean - expectation||_F^2)` estimated from the samples.
    pub frobenius_se: f64,
}

/// Averages `exp(-i (b t + lambda) J_z) rho0 exp(+i (b t + lambda) J_z)`
/// over the phase samples `lambdas`.
pub fn empirical_average_state(rho0: &DickeState, lambdas: &[f64], b: f64, t: f64) -> Result<AveragedState> {
    ensure(!lambdas.is_empty(), || "empty ensemble".into())?;
    let n = rho0.n();
    let count = lambdas.len() as f64;
    // Per coherence order d = m - m' the trajectory factor is exp(-i lambda d).
    let factors: Vec<(Complex64, f64)> = (0..=n)
        .map(|d| {
            let (mut re, mut im) = (0.0, 0.0);
            for &l in lambdas {
                let (s, c) = (l * d as f64).sin_cos();
                re += c;
                im -= s;
            }
            let mean = Complex64::new(re / count, im / count);
            (mean, (1.0 - mean.norm_sqr()).max(0.0) * count / (count - 1.0).max(1.0))
        })
        .collect();
    let ms = rho0.m_values();
    let dim = n + 1;
    let mut rho = CMatrix::zeros(dim, dim);
    let mut se2 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let d = ms[i] - ms[j];
            let (f, var) = factors[d.abs() as usize];
            let f = if d >= 0.0 { f } else { f.conj() };
            let r = rho0.rho()[(i, j)];
            rho[(i, j)] = r * f * Complex64::from_polar(1.0, -b * t * d);
            se2 += r.norm_sqr() * var / count;
        }
    }
    Ok(AveragedState { state: DickeState::new(rho, b, rho0.t() + t)?, frobenius_se: se2.sqrt() })
}

/// Tolerance on eigenvalues and trace when validating fidelity arguments.
const STATE_TOL: f64 = 1e-9;

fn psd_sqrt(rho: &CMatrix, name: &str) -> Result<CMatrix> {
    ensure(rho.is_square(), || format!("{name} is not square"))?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::NotAState(format!("{name} has trace {tr}")));
    }
    let (lam, u) = hermitian_eigen(rho);
    if let Some(&min) = lam.first() {
        if min < -STATE_TOL {
            return Err(Error::NotAState(format!("{name} has eigenvalue {min:e}")));
        }
    }
    let roots: Vec<Complex64> = lam.iter().map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)).collect();
    Ok(&u * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * u.adjoint())
}

/// Root fidelity `Tr sqrt(sqrt(rho) sigma sqrt(rho))`, computed as the sum of
/// the singular values of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    ensure(rho.shape() == sigma.shape(), || "states have different dimensions".into())?;
    let a = psd_sqrt(rho, "rho")?;
    let b = psd_sqrt(sigma, "sigma")?;
    let sv = (a * b).singular_values();
    Ok(sv.iter().sum::<f64>().min(1.0))
}

/// Fisher information from the Bures curvature,
/// `8 (1 - F(rho(b - h/2), rho(b + h/2))) / h^2`.
pub fn fidelity_curvature_qfi(rho_minus: &CMatrix, rho_plus: &CMatrix, h: f64) -> Result<f64> {
    ensure(h > 0.0, || format!("spacing must be positive, got {h}"))?;
    Ok(8.0 * (1.0 - fidelity(rho_minus, rho_plus)?) / (h * h))
}

#[cfg(test)]
mod tests;
