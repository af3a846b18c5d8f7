use super::*;
use crate::control::{build_segment_covariance, Pulse, PulseSequence};
use crate::dicke::{build_input, evolve, qfi_of_state, InputKind};
use crate::noise::chi_time_domain;
use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> Vec<NoiseModel> {
    vec![
        NoiseModel::White { chi0: 0.5, omega_c: 2.0 },
        NoiseModel::OrnsteinUhlenbeck { sigma2: 0.8, omega_c: 1.5 },
        NoiseModel::Brownian { chi0: 0.6, omega_c: 1.0 },
    ]
}

/// Sample variance and its standard error for a zero-mean column.
fn variance(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
    let m = sq.iter().sum::<f64>() / n;
    let v = sq.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn white_phase_variance() {
    let m = NoiseModel::White { chi0: 0.5, omega_c: 2.0 };
    let e = sample_phase_process(&m, &[0.7], 100_000, 1).unwrap();
    let (v, se) = variance(&e.column(0));
    assert!((v - 0.7).abs() < 3.0 * se, "{v} vs 0.7 (se {se})");
    let (mean, mse) = e.mean(0);
    assert!(mean.abs() < 5.0 * mse);
    let empty = sample_phase_process(&m, &[0.7], 0, 1).unwrap();
    assert_eq!(empty.count(), 0);
}

#[test]
fn empirical_decoherence_function() {
    let grid = [0.1, 0.3, 0.6, 1.0, 1.5];
    for m in models() {
        let e = sample_phase_process(&m, &grid, 100_000, 17).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let (v, se) = variance(&e.column(k));
            let chi = chi_time_domain(&m, t).unwrap();
            assert!((v - chi).abs() < 4.0 * se, "{m:?} t={t}: {v} vs {chi}");
        }
    }
}

#[test]
fn grid_samples_reproduce_segment_covariance() {
    let m = NoiseModel::OrnsteinUhlenbeck { sigma2: 0.8, omega_c: 1.5 };
    let e = sample_phase_process(&m, &[0.4, 1.0], 100_000, 3).unwrap();
    let seq = PulseSequence::new(vec![0.4], vec![Pulse::pi_x()], 1.0).unwrap();
    let cov = build_segment_covariance(&m, &seq).unwrap();
    let first = e.column(0);
    let second: Vec<f64> = e.column(1).iter().zip(&first).map(|(b, a)| b - a).collect();
    let prod: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a * b).collect();
    let n = prod.len() as f64;
    let mean = prod.iter().sum::<f64>() / n;
    let se = (prod.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - cov.sigma[(0, 1)]).abs() < 3.0 * se, "{mean} vs {}", cov.sigma[(0, 1)]);
    let (v2, se2) = variance(&second);
    assert!((v2 - cov.sigma[(1, 1)]).abs() < 3.0 * se2);
    let (c01, sc) = e.second_moment(0, 1);
    assert!((c01 - m.phase_covariance(0.4, 1.0).unwrap()).abs() < 3.0 * sc);
}

#[test]
fn seeded_runs_are_reproducible() {
    let m = NoiseModel::OrnsteinUhlenbeck { sigma2: 0.8, omega_c: 1.5 };
    let grid = [0.2, 0.9];
    let a = sample_phase_process(&m, &grid, 10_000, 99).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| sample_phase_process(&m, &grid, 10_000, 99).unwrap());
    assert_eq!(a, b);
    let c = sample_phase_process(&m, &grid, 10_000, 100).unwrap();
    assert_ne!(a.samples, c.samples);
    // A prefix of a longer run is the shorter run.
    let longer = sample_phase_process(&m, &grid, 12_000, 99).unwrap();
    assert_eq!(longer.samples.rows(0, 10_000), a.samples);
}

#[test]
fn sampler_rejects_indefinite_covariance() {
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(GaussianSampler::new(&bad), Err(Error::CovarianceNotPsd(_))));
    // Rank-deficient but PSD falls back to the eigen factorization.
    let flat = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let s = GaussianSampler::new(&flat).unwrap().draw(100, 1);
    for r in 0..100 {
        assert!((s[(r, 0)] - s[(r, 1)]).abs() < 1e-12);
    }
}

#[test]
fn path_simulation_converges_to_exact_variance() {
    let (s2, w, t) = (0.8, 1.5, 1.0);
    let chi = chi_time_domain(&NoiseModel::OrnsteinUhlenbeck { sigma2: s2, omega_c: w }, t).unwrap();
    let coarse = variance(&simulate_ou_phase(s2, w, t, 1, 200_000, 5).unwrap());
    let fine = variance(&simulate_ou_phase(s2, w, t, 200, 200_000, 5).unwrap());
    // A single trapezoid misses the variance visibly; many steps do not.
    assert!((coarse.0 - chi).abs() > 5.0 * coarse.1, "{coarse:?} vs {chi}");
    assert!((fine.0 - chi).abs() < 4.0 * fine.1, "{fine:?} vs {chi}");
}

#[test]
fn averaged_states() {
    let ghz = build_input(InputKind::Ghz, 4, 0.0, 0.0).unwrap();
    let zero = empirical_average_state(&ghz, &[0.0; 10], 0.8, 0.5).unwrap();
    assert!((zero.state.rho() - evolve(&ghz, 0.8, 0.0, 0.5).rho()).norm() < 1e-14);
    assert_eq!(zero.frobenius_se, 0.0);
    let m = NoiseModel::White { chi0: 0.05, omega_c: 1.0 };
    let e = sample_phase_process(&m, &[0.5], 100_000, 8).unwrap();
    let avg = empirical_average_state(&ghz, &e.column(0), 0.0, 0.5).unwrap();
    // Variance v = 0.025 gives the map exponent v / 2 on (m - m')^2 = 16.
    let expected = 0.5 * (-16.0 * 0.0125f64).exp();
    let corner = avg.state.rho()[(0, 4)].norm();
    assert!((corner - expected).abs() < 5.0 * avg.frobenius_se, "{corner} vs {expected}");
    let exact = evolve(&ghz, 0.0, 0.0125, 0.5);
    assert!((avg.state.rho() - exact.rho()).norm() < 5.0 * avg.frobenius_se);
    let diag = DickeState::new(CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(0.25, 0.0); 4])), 0.0, 0.0).unwrap();
    let d = empirical_average_state(&diag, &e.column(0), 1.3, 0.5).unwrap();
    assert!((d.state.rho() - diag.rho()).norm() < 1e-15);
}

#[test]
fn averaged_state_error_shrinks_as_inverse_root_count() {
    let rho0 = build_input(InputKind::Oats, 6, 0.3, 0.5).unwrap();
    let m = NoiseModel::OrnsteinUhlenbeck { sigma2: 0.8, omega_c: 1.5 };
    let chi = chi_time_domain(&m, 0.6).unwrap();
    let exact = evolve(&rho0, 0.2, 0.5 * chi, 0.6);
    let counts = [250usize, 1000, 4000, 16000, 64000];
    let rms: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let sq: f64 = (0..16)
                .map(|seed| {
                    let e = sample_phase_process(&m, &[0.6], c, seed).unwrap();
                    let avg = empirical_average_state(&rho0, &e.column(0), 0.2, 0.6).unwrap();
                    (avg.state.rho() - exact.rho()).norm_squared()
                })
                .sum();
            (sq / 16.0).sqrt()
        })
        .collect();
    let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let slope = crate::numerics::power_law_fit(&x, &rms).0;
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DickeState {
    let g = CMatrix::from_fn(n + 1, rank, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    DickeState::new(rho, 0.0, 0.0).unwrap()
}

#[test]
fn fidelity_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let a = random_state(&mut rng, 5, 2);
        let b = random_state(&mut rng, 5, 3);
        assert!((fidelity(a.rho(), a.rho()).unwrap() - 1.0).abs() < 1e-7);
        let (f1, f2) = (fidelity(a.rho(), b.rho()).unwrap(), fidelity(b.rho(), a.rho()).unwrap());
        assert!((f1 - f2).abs() < 1e-10 && f1 > 0.0 && f1 < 1.0);
    }
    let psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
    let phi = DVector::from_vec(vec![Complex64::new(0.8, 0.0), Complex64::new(0.6, 0.0)]);
    let p = DickeState::from_pure(&psi).unwrap();
    let q = DickeState::from_pure(&phi).unwrap();
    let overlap = psi.dotc(&phi).norm();
    assert!((fidelity(p.rho(), q.rho()).unwrap() - overlap).abs() < 1e-12);
    let up = DickeState::from_pure(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])).unwrap();
    let down = DickeState::from_pure(&DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])).unwrap();
    assert!(fidelity(up.rho(), down.rho()).unwrap().abs() < 1e-12);
    let not_state = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.0)]));
    assert!(matches!(fidelity(&not_state, up.rho()), Err(Error::NotAState(_))));
    let unnormalized = up.rho() * Complex64::new(2.0, 0.0);
    assert!(matches!(fidelity(&unnormalized, up.rho()), Err(Error::NotAState(_))));
}

#[test]
fn fidelity_curvature_matches_eigendecomposition_information() {
    let ghz = build_input(InputKind::Ghz, 4, 0.0, 0.0).unwrap();
    let family = |b: f64| evolve(&ghz, b, 0.02, 1.0);
    let exact = qfi_of_state(&family(0.3)).unwrap().qfi;
    for &h in &[1e-2, 3e-3, 1e-3, 3e-4] {
        let f = fidelity_curvature_qfi(family(0.3 - h / 2.0).rho(), family(0.3 + h / 2.0).rho(), h).unwrap();
        assert!((f / exact - 1.0).abs() < 1e-3, "h={h}: {f} vs {exact}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..30 {
        let s = random_state(&mut rng, 2 + trial % 7, 1 + trial % 3);
        let fam = |b: f64| evolve(&s, b, 0.05, 0.8);
        let exact = qfi_of_state(&fam(0.1)).unwrap().qfi;
        let h = 1e-3;
        let f = fidelity_curvature_qfi(fam(0.1 - h / 2.0).rho(), fam(0.1 + h / 2.0).rho(), h).unwrap();
        assert!((f / exact - 1.0).abs() < 5e-3, "trial {trial}: {f} vs {exact}");
    }
}

#[test]
fn ensemble_csv_export() {
    let e = sample_phase_process(&NoiseModel::White { chi0: 1.0, omega_c: 1.0 }, &[0.5, 1.0], 3, 77).unwrap();
    let mut buf = Vec::new();
    e.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# seed=77 count=3"));
    assert_eq!(lines[1], "lambda@0.5,lambda@1");
    assert_eq!(lines.len(), 5);
}
