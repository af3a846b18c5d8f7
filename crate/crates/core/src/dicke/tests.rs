use super::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_mixed(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DickeState {
    let dim = n + 1;
    let g = CMatrix::from_fn(dim, rank, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace();
    rho /= tr;
    DickeState::new(rho, 0.0, 0.0).unwrap()
}

#[test]
fn ghz_and_css_inputs() {
    let ghz = build_input(InputKind::Ghz, 2, 0.0, 0.0).unwrap();
    let r = ghz.rho();
    let nonzero = r.iter().filter(|z| z.norm() > 1e-15).count();
    assert_eq!(nonzero, 4);
    for &(i, j) in &[(0, 0), (0, 2), (2, 0), (2, 2)] {
        assert!((r[(i, j)] - c(0.5)).norm() < 1e-15);
    }
    let css = build_input(InputKind::Css, 1, 0.0, 0.0).unwrap();
    assert!(css.rho().iter().all(|z| (z - c(0.5)).norm() < 1e-15));
    let oats = build_input(InputKind::Oats, 7, 0.0, 0.0).unwrap();
    let css7 = build_input(InputKind::Css, 7, 0.0, 0.0).unwrap();
    assert!((oats.rho() - css7.rho()).norm() < 1e-14);
    assert!(build_input(InputKind::Css, 0, 0.0, 0.0).is_err());
    assert!(build_input(InputKind::Css, N_MAX + 1, 0.0, 0.0).is_err());
}

#[test]
fn spin_algebra() {
    let n = 5;
    let (x, y, z) = (jx(n), jy(n), jz(n));
    let comm = &x * &y - &y * &x;
    assert!((comm - &z * Complex64::new(0.0, 1.0)).norm() < 1e-12);
    let casimir = &x * &x + &y * &y + &z * &z;
    let j = n as f64 / 2.0;
    assert!((casimir - CMatrix::identity(n + 1, n + 1) * c(j * (j + 1.0))).norm() < 1e-12);
    // CSS is the +J eigenstate of J_x.
    let css = build_input(InputKind::Css, n, 0.0, 0.0).unwrap();
    assert!((css.expectation(&x) - j).abs() < 1e-12);
}

#[test]
fn rotation_matches_matrix_exponential() {
    // exp(-i theta J_x) for N = 1 is cos(theta/2) - i sin(theta/2) sigma_x.
    let theta = 0.7;
    let psi = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let out = rotate_x(&psi, theta);
    assert!((out[0] - c((theta / 2.0).cos())).norm() < 1e-14);
    assert!((out[1] - Complex64::new(0.0, -(theta / 2.0).sin())).norm() < 1e-14);
}

#[test]
fn oats_variance_follows_squeezing_parameter() {
    // Small-twist regime: Var(J_z) = J delta / 2 with
    // delta = 1 + 4 k^2 sin^2 beta - 2 k sin 2 beta, k = J mu.
    let n = 400;
    let j = n as f64 / 2.0;
    let mu = 0.02 / (n as f64).sqrt();
    for &beta in &[-1.2, -0.4, 0.5, 1.3] {
        let k = j * mu;
        let delta = 1.0 + 4.0 * k * k * f64::sin(beta).powi(2) - 2.0 * k * f64::sin(2.0 * beta);
        let s = build_input(InputKind::Oats, n, mu, beta).unwrap();
        let rel = variance_jz(&s) / (j * delta / 2.0) - 1.0;
        assert!(rel.abs() < 2e-3, "beta {beta}: rel {rel}");
    }
}

#[test]
fn evolve_limits_and_ghz_coherence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_mixed(4, 3, &mut rng);
    let same = evolve(&s, 0.0, 0.0, 1.3);
    assert!((same.rho() - s.rho()).norm() < 1e-15);
    let dead = evolve(&s, 0.4, 1e4, 1.0);
    for i in 0..5 {
        for j in 0..5 {
            let expected = if i == j { s.rho()[(i, j)] } else { c(0.0) };
            assert!((dead.rho()[(i, j)] - expected).norm() < 1e-15);
        }
    }
    let n = 6;
    let chi = 0.013;
    let ghz = evolve(&build_input(InputKind::Ghz, n, 0.0, 0.0).unwrap(), 0.3, chi, 2.0);
    let corner = ghz.rho()[(n, 0)];
    assert!((corner.norm() - 0.5 * (-((n * n) as f64) * chi).exp()).abs() < 1e-15);
    assert!((corner.arg() - (-0.3 * 2.0 * n as f64)).rem_euclid(2.0 * std::f64::consts::PI) < 1e-12);
}

#[test]
fn evolution_preserves_state_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=9 {
        let s = random_mixed(n, 1 + n % 3, &mut rng);
        for &chi in &[0.0, 0.01, 0.3, 5.0] {
            let e = evolve(&s, 0.7, chi, 0.9);
            e.validate(1e-10).unwrap();
            assert!((e.rho().trace().re - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn derivative_rules() {
    let mut diag = CMatrix::zeros(4, 4);
    for k in 0..4 {
        diag[(k, k)] = c(0.25);
    }
    let d = DickeState::new(diag, 0.0, 1.0).unwrap();
    assert!(drho_db(&d).norm() == 0.0);
    let n = 5;
    let t = 0.8;
    let ghz = evolve(&build_input(InputKind::Ghz, n, 0.0, 0.0).unwrap(), 0.2, 0.01, t);
    let dr = drho_db(&ghz);
    // (m, m') = (J, -J) sits at (N, 0); m - m' = N.
    let factor = dr[(n, 0)] / ghz.rho()[(n, 0)];
    assert!((factor - Complex64::new(0.0, -t * n as f64)).norm() < 1e-13);
    let at_zero = evolve(&build_input(InputKind::Ghz, n, 0.0, 0.0).unwrap(), 0.2, 0.01, 0.0);
    assert!(drho_db(&at_zero).norm() == 0.0);
    // Finite-difference check of the analytic derivative.
    let css = build_input(InputKind::Oats, 4, 0.1, 0.3).unwrap();
    let h = 1e-6;
    let fd = (evolve(&css, 0.5 + h, 0.02, t).rho() - evolve(&css, 0.5 - h, 0.02, t).rho()) / c(2.0 * h);
    assert!((fd - drho_db(&evolve(&css, 0.5, 0.02, t))).norm() < 1e-8);
}

#[test]
fn qfi_closed_forms() {
    let ghz4 = evolve(&build_input(InputKind::Ghz, 4, 0.0, 0.0).unwrap(), 0.0, 0.0, 1.0);
    assert!((qfi_of_state(&ghz4).unwrap().qfi - 16.0).abs() < 1e-10);
    for &n in &[1usize, 2, 5, 16, 33, 64] {
        let chi = 0.3 / (n * n) as f64;
        let t = 1.7;
        let s = evolve(&build_input(InputKind::Ghz, n, 0.0, 0.0).unwrap(), 0.9, chi, t);
        let exact = (n * n) as f64 * t * t * (-2.0 * (n * n) as f64 * chi).exp();
        let q = qfi_of_state(&s).unwrap().qfi;
        assert!((q / exact - 1.0).abs() < 1e-10, "N={n}: {q} vs {exact}");
    }
    let mixed = DickeState::new(CMatrix::identity(6, 6) / c(6.0), 0.0, 1.0).unwrap();
    assert!(qfi_of_state(&mixed).unwrap().qfi.abs() < 1e-15);
}

#[test]
fn pure_state_qfi_is_four_variances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=10 {
        let s = random_mixed(n, 1, &mut rng);
        let t = 0.6;
        let e = evolve(&s, 0.3, 0.0, t);
        let z = jz(n);
        let var = e.expectation(&(&z * &z)) - e.expectation(&z).powi(2);
        let q = qfi_of_state(&e).unwrap().qfi;
        assert!((q / (4.0 * t * t * var) - 1.0).abs() < 1e-9, "N={n}");
    }
}

#[test]
fn sld_is_zero_mean_and_reproduces_qfi() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 2..=8 {
        let s = evolve(&random_mixed(n, 2, &mut rng), 0.4, 0.05, 1.1);
        let res = qfi_of_state(&s).unwrap();
        assert!(s.expectation(&res.sld).abs() < 1e-10);
        let second = s.expectation(&(&res.sld * &res.sld));
        assert!((second - res.qfi).abs() < 1e-9 * res.qfi.max(1.0));
    }
}

#[test]
fn negative_state_is_rejected() {
    let mut rho = CMatrix::zeros(2, 2);
    rho[(0, 0)] = c(1.5);
    rho[(1, 1)] = c(-0.5);
    let d = CMatrix::zeros(2, 2);
    assert!(matches!(qfi_and_sld(&rho, &d, EIG_FLOOR), Err(Error::NotAState(_))));
    assert!(DickeState::new(rho, 0.0, 0.0).unwrap().validate(1e-12).is_err());
}

#[test]
fn parity_measurement_on_ghz() {
    let n = 6;
    let t = 0.5;
    let total = 3.0;
    let input = build_input(InputKind::Ghz, n, 0.0, 0.0).unwrap();
    let family = |b: f64| evolve(&input, b, 0.0, t);
    let b0 = std::f64::consts::FRAC_PI_2 / (n as f64 * t);
    let p = moments_precision(family, b0, 1e-6 / t, &parity(n), total).unwrap();
    let expected = 1.0 / (total * (n * n) as f64 * t);
    assert!((p / expected - 1.0).abs() < 1e-8, "{p} vs {expected}");
    let id = CMatrix::identity(n + 1, n + 1);
    assert!(matches!(moments_precision(family, b0, 1e-6, &id, total), Err(Error::ZeroSlope)));
}

#[test]
fn moments_precision_respects_qcrb() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (t, total) = (0.9, 2.0);
    for n in 2..=7 {
        let input = random_mixed(n, 2, &mut rng);
        let raw = CMatrix::from_fn(n + 1, n + 1, |_, _| Complex64::new(rng.random::<f64>(), rng.random::<f64>()));
        let obs = (&raw + raw.adjoint()) * c(0.5);
        let family = |b: f64| evolve(&input, b, 0.03, t);
        let Ok(p) = moments_precision(family, 0.2, 1e-5, &obs, total) else { continue };
        let q = qfi_of_state(&family(0.2)).unwrap().qfi;
        let qcrb = t / (total * q);
        assert!(p >= qcrb * (1.0 - 1e-6), "N={n}: {p} < {qcrb}");
    }
}

#[test]
fn json_dump_roundtrip() {
    let s = evolve(&build_input(InputKind::Oats, 5, 0.2, 0.4).unwrap(), 0.3, 0.02, 1.5);
    let back = DickeState::from_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    assert!(DickeState::from_json("{\"n\": 1, \"b\": 0, \"t\": 0, \"re\": [[1]], \"im\": [[0]]}").is_err());
}
