//! Averaged states of controlled runs.
//!
//! With the toggling-frame form of a run, block `alpha` rotates the state
//! about `G_alpha = P_alpha^dag J_z P_alpha` by the phase
//! `phi_alpha = b dt~_alpha + Lambda_alpha`, where `P_alpha` is the pulse
//! product before the block's first segment. Writing each block rotation as
//! `P_alpha^dag exp(-i phi_alpha J_z) P_alpha` aligns consecutive blocks
//! through `W_alpha = P_alpha P_{alpha-1}^dag`, and the run unitary is
//!
//! `U = P_total P_last^dag E_last W_last ... E_2 W_2 E_1 W_1`.
//!
//! A Gaussian average over `Lambda ~ N(0, Sigma~)` of a term carrying
//! coherence orders `d = (d_1, ..., d_Q~)` gives
//! `exp(-i b dt~.d - d^T Sigma~ d / 2)`. The exact state is the sum of these
//! weighted terms; the Monte Carlo route samples `Lambda` instead.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{cumulative_pulses, Compression, PulseSequence, SegmentCovariance};
use crate::dicke::{hermitian_eigen, m_values, CMatrix, DickeState};
use crate::error::{ensure, Error, Result};
use crate::montecarlo::{AveragedState, GaussianSampler, BLOCK};

/// Largest number of trajectories one simulation may draw.
pub const MAX_SAMPLES: usize = 10_000_000;

/// Ingredients shared by the exact and sampled averages.
struct Aligned {
    /// `W_1, ..., W_Q~` followed by the final `P_total P_last^dag`.
    frames: Vec<CMatrix>,
    /// `S dt`.
    dt_eff: DVector<f64>,
    /// `S Sigma S^T`.
    sigma_eff: DMatrix<f64>,
    ms: Vec<f64>,
}

fn align(rho0: &DickeState, seq: &PulseSequence, compression: &Compression, cov: &SegmentCovariance) -> Result<Aligned> {
    seq.validate()?;
    let q_prime = seq.q_prime();
    ensure(compression.s.ncols() == q_prime && cov.sigma.nrows() == q_prime, || {
        format!("compression and covariance must have {q_prime} segments")
    })?;
    ensure((cov.t - seq.t).abs() <= 1e-12 * seq.t, || "covariance built for a different run time".into())?;
    let n = rho0.n();
    let (before, total) = cumulative_pulses(seq, n)?;
    let leaders = compression.leaders();
    let mut frames = Vec::with_capacity(leaders.len() + 1);
    let mut prev = CMatrix::identity(n + 1, n + 1);
    for &l in &leaders {
        frames.push(&before[l] * prev.adjoint());
        prev = before[l].clone();
    }
    frames.push(total * prev.adjoint());
    Ok(Aligned {
        frames,
        dt_eff: compression.compress_durations(&seq.durations()),
        sigma_eff: compression.compress_covariance(&cov.sigma),
        ms: m_values(n),
    })
}

fn conjugate(w: &CMatrix, x: &CMatrix) -> CMatrix {
    w * x * w.adjoint()
}

/// Exact Gaussian average of the controlled run applied to `rho0`.
///
/// Enumerates the coherence-order vectors `d` depth first, sharing the
/// conjugations of common prefixes.
pub fn analytic_controlled_state(
    rho0: &DickeState,
    seq: &PulseSequence,
    compression: &Compression,
    cov: &SegmentCovariance,
    b: f64,
) -> Result<DickeState> {
    let al = align(rho0, seq, compression, cov)?;
    let start = conjugate(&al.frames[0], rho0.rho());
    let mut out = CMatrix::zeros(start.nrows(), start.ncols());
    let mut d = Vec::with_capacity(al.dt_eff.len());
    descend(&al, b, start, &mut d, &mut out);
    DickeState::new(out, b, rho0.t() + seq.t)
}

fn descend(al: &Aligned, b: f64, x: CMatrix, d: &mut Vec<i64>, out: &mut CMatrix) {
    let stage = d.len();
    if stage == al.dt_eff.len() {
        let dv = DVector::from_iterator(stage, d.iter().map(|&v| v as f64));
        let weight = Complex64::from_polar((-0.5 * dv.dot(&(&al.sigma_eff * &dv))).exp(), -b * al.dt_eff.dot(&dv));
        *out += conjugate(&al.frames[stage], &x) * weight;
        return;
    }
    let dim = x.nrows();
    let n = dim as i64 - 1;
    for order in -n..=n {
        let mut part = CMatrix::zeros(dim, dim);
        let mut any = false;
        for i in 0..dim {
            let j = i as i64 - order;
            if (0..dim as i64).contains(&j) {
                let v = x[(i, j as usize)];
                if v != Complex64::new(0.0, 0.0) {
                    part[(i, j as usize)] = v;
                    any = true;
                }
            }
        }
        if !any {
            continue;
        }
        // Row i carries m = i - J, so the coherence order m_i - m_j is i - j.
        d.push(order);
        let next = if stage + 1 < al.dt_eff.len() { conjugate(&al.frames[stage + 1], &part) } else { part };
        descend(al, b, next, d, out);
        d.pop();
    }
}

/// Monte Carlo average of the controlled run: draws `Lambda ~ N(0, S Sigma S^T)`
/// and averages the trajectory states.
///
/// Reproducible for a fixed seed independently of the thread count.
pub fn simulate_controlled_mixture(
    rho0: &DickeState,
    seq: &PulseSequence,
    compression: &Compression,
    cov: &SegmentCovariance,
    b: f64,
    count: usize,
    seed: u64,
) -> Result<AveragedState> {
    if count == 0 || count > MAX_SAMPLES {
        return Err(Error::SamplingBudgetExceeded(format!("{count} samples requested, allowed 1..={MAX_SAMPLES}")));
    }
    let al = align(rho0, seq, compression, cov)?;
    let sampler = GaussianSampler::new(&al.sigma_eff)?;
    let dim = rho0.n() + 1;
    // Propagate the eigenvectors of rho0 instead of the density matrix.
    let (lam, vecs) = hermitian_eigen(rho0.rho());
    let branches: Vec<(f64, DVector<Complex64>)> = lam
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-15)
        .map(|(k, &p)| (p, &al.frames[0] * vecs.column(k)))
        .collect();
    let blocks = count.div_ceil(BLOCK);
    let partial: Vec<(CMatrix, DMatrix<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let rows = BLOCK.min(count - k * BLOCK);
            let phases = sampler.draw_block(k, rows, seed);
            let q = al.dt_eff.len();
            let mut sum = CMatrix::zeros(dim, dim);
            let mut sq = DMatrix::<f64>::zeros(dim, dim);
            for r in 0..rows {
                let mut x = CMatrix::zeros(dim, dim);
                for (p, v0) in &branches {
                    let mut v = v0.clone();
                    for a in 0..q {
                        let phi = b * al.dt_eff[a] + phases[r * q + a];
                        for (c, &m) in v.iter_mut().zip(&al.ms) {
                            *c *= Complex64::from_polar(1.0, -phi * m);
                        }
                        v = &al.frames[a + 1] * v;
                    }
                    x += &v * v.adjoint() * Complex64::from(*p);
                }
                sq += x.map(|z| z.norm_sqr());
                sum += x;
            }
            (sum, sq)
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    let mut sq = DMatrix::<f64>::zeros(dim, dim);
    for (s, q) in partial {
        sum += s;
        sq += q;
    }
    let n = count as f64;
    let mean = sum / Complex64::from(n);
    let var: f64 = sq.iter().zip(mean.iter()).map(|(&s2, m)| (s2 / n - m.norm_sqr()).max(0.0)).sum();
    let frobenius_se = (var / (n - 1.0).max(1.0)).sqrt();
    let mean = (&mean + mean.adjoint()) * Complex64::from(0.5);
    Ok(AveragedState { state: DickeState::new(mean, b, rho0.t() + seq.t)?, frobenius_se })
}

/// Bhattacharyya overlap `int sqrt(N(x; 0, Sigma) N(x; dphi, Sigma)) dx
/// = exp(-dphi^T Sigma^{-1} dphi / 8)` of two Gaussians with common
/// covariance.
pub fn gaussian_overlap(sigma: &DMatrix<f64>, dphi: &DVector<f64>) -> Result<f64> {
    ensure(sigma.is_square() && sigma.nrows() == dphi.len(), || "shape mismatch".into())?;
    let ch = nalgebra::Cholesky::new(sigma.clone()).ok_or_else(|| Error::SingularCovariance("overlap covariance".into()))?;
    Ok((-dphi.dot(&ch.solve(dphi)) / 8.0).exp())
}
