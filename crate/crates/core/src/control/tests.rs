use super::*;
use crate::bounds::{precision_lower_bound, BoundQuery};
use crate::dicke::{build_input, evolve, qfi_and_sld, DickeState, InputKind};
use crate::noise::{chi_time_domain, fit_short_time_law, DecayLaw};
use crate::numerics::quad::{integrate, integrate_2d, Tolerance};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn white() -> NoiseModel {
    NoiseModel::White { chi0: 1.0, omega_c: 1.0 }
}

fn ou() -> NoiseModel {
    NoiseModel::OrnsteinUhlenbeck { sigma2: 0.5, omega_c: 2.0 }
}

fn cutoff(s: f64) -> NoiseModel {
    NoiseModel::GaussianCutoff { alpha: 1.0, s, omega_c: 1.0 }
}

fn random_fractions(rng: &mut ChaCha8Rng, q: usize, min_gap: f64) -> Vec<f64> {
    loop {
        let mut f: Vec<f64> = (0..q).map(|_| rng.random::<f64>()).collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut b = vec![0.0];
        b.extend_from_slice(&f);
        b.push(1.0);
        if b.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return f;
        }
    }
}

fn cpmg(t: f64) -> PulseSequence {
    PulseSequence::new(vec![0.25, 0.75], vec![Pulse::pi_x(), Pulse::pi_x()], t).unwrap()
}

#[test]
fn sequence_json_and_invariants() {
    let text = r#"{"fractions":[0.25,0.5],"pulses":[{"axis":"x","angle":3.14},{"axis":[0,1,1],"angle":1.0}],"t":2.0}"#;
    let seq = PulseSequence::from_json(text).unwrap();
    assert_eq!(seq.q_prime(), 3);
    assert!((seq.durations().sum() - 2.0).abs() < 1e-15);
    assert_eq!(PulseSequence::from_json(&seq.to_json()).unwrap(), seq);
    let tagged = PulseSequence::from_json(r#"{"fractions":[0.5],"pulses":[{"tag":"custom"}],"t":1}"#).unwrap();
    assert!(matches!(tagged.pulses[0], Pulse::Opaque { .. }));
    for bad in [
        r#"{"fractions":[0.5,0.4],"pulses":[{"tag":"a"},{"tag":"b"}],"t":1}"#,
        r#"{"fractions":[0.5],"pulses":[],"t":1}"#,
        r#"{"fractions":[1.0],"pulses":[{"tag":"a"}],"t":1}"#,
        r#"{"fractions":[],"pulses":[],"t":0}"#,
        r#"{"fractions":[0.5],"pulses":[{"axis":[0,0,0],"angle":1}],"t":1}"#,
    ] {
        assert!(matches!(PulseSequence::from_json(bad), Err(Error::InvalidSequence(_))), "{bad}");
    }
    assert!(matches!(PulseSequence::from_json("{"), Err(Error::Parse(_))));
}

#[test]
fn decoupling_blocks() {
    let none = detect_dp_blocks(&PulseSequence::free(1.0).unwrap()).unwrap();
    assert_eq!(none.s, DMatrix::identity(1, 1));
    let echo = detect_dp_blocks(&PulseSequence::new(vec![0.5], vec![Pulse::pi_x()], 1.0).unwrap()).unwrap();
    assert_eq!(echo.rows(), 1);
    assert_eq!(echo.signs, vec![1.0, -1.0]);
    let half = PulseSequence::new(vec![0.5], vec![Pulse::rotation(NamedAxis::X, FRAC_PI_2)], 1.0).unwrap();
    let c = detect_dp_blocks(&half).unwrap();
    assert_eq!(c.s, DMatrix::identity(2, 2));
    let g = toggling_generators(&half).unwrap();
    assert!((g[1].y.abs() - 1.0).abs() < 1e-15);
    let train = PulseSequence::new(
        vec![0.2, 0.4, 0.6, 0.8],
        vec![Pulse::pi_x(), Pulse::pi_y(), Pulse::pi_x(), Pulse::pi_y()],
        1.0,
    )
    .unwrap();
    let c = detect_dp_blocks(&train).unwrap();
    assert_eq!(c.rows(), 1);
    assert_eq!(c.signs, vec![1.0, -1.0, 1.0, -1.0, 1.0]);
    // Mixed: echo block, then a quarter turn opens a new block.
    let mixed = PulseSequence::new(
        vec![0.3, 0.6],
        vec![Pulse::pi_x(), Pulse::rotation(NamedAxis::Y, FRAC_PI_2)],
        1.0,
    )
    .unwrap();
    let c = detect_dp_blocks(&mixed).unwrap();
    assert_eq!(c.blocks, vec![0..2, 2..3]);
    assert_eq!(c.s, DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 0.0, 1.0]));
    let opaque = PulseSequence::new(vec![0.5], vec![Pulse::Opaque { tag: "u".into() }], 1.0).unwrap();
    assert!(matches!(detect_dp_blocks(&opaque), Err(Error::UnsupportedPulse(_))));
    let twist = PulseSequence::new(vec![0.5], vec![Pulse::Twist { twist: Axis::Named(NamedAxis::X), angle: 0.1 }], 1.0).unwrap();
    assert!(matches!(detect_dp_blocks(&twist), Err(Error::UnsupportedPulse(_))));
}

#[test]
fn generators_match_conjugated_operators() {
    let seq = PulseSequence::new(
        vec![0.3, 0.6],
        vec![Pulse::rotation(NamedAxis::X, 0.7), Pulse::Rotation { axis: Axis::Vector([1.0, 2.0, -0.5]), angle: 1.3 }],
        1.0,
    )
    .unwrap();
    let g = toggling_generators(&seq).unwrap();
    let (before, _) = cumulative_pulses(&seq, 3).unwrap();
    for (gj, p) in g.iter().zip(&before) {
        let direct = p.adjoint() * jz(3) * p;
        assert!((direct - collective(3, gj)).norm() < 1e-12);
    }
}

#[test]
fn segment_covariances() {
    let seq = PulseSequence::new(vec![0.2, 0.7], vec![Pulse::pi_x(), Pulse::pi_x()], 1.5).unwrap();
    let w = build_segment_covariance(&white(), &seq).unwrap();
    assert_eq!(w.sigma, DMatrix::from_diagonal(&seq.durations()));
    let free = PulseSequence::free(0.8).unwrap();
    for m in [white(), ou(), cutoff(1.0)] {
        let c = build_segment_covariance(&m, &free).unwrap();
        assert!(rel(c.sigma[(0, 0)], chi_time_domain(&m, 0.8).unwrap()) < 1e-12);
        let c = build_segment_covariance(&m, &seq).unwrap();
        for (i, (a, b)) in seq.windows().into_iter().enumerate() {
            assert!(rel(c.sigma[(i, i)], chi_time_domain(&m, b - a).unwrap()) < 1e-10);
        }
        assert!(SymmetricEigen::new(c.sigma.clone()).eigenvalues.min() > 0.0);
    }
    let two = PulseSequence::new(vec![0.4], vec![Pulse::pi_x()], 1.5).unwrap();
    let c = build_segment_covariance(&ou(), &two).unwrap();
    let corr = |s: f64, u: f64| 0.5 * (-2.0 * (s - u).abs()).exp();
    let quad = integrate_2d(corr, (0.0, 0.6), (0.6, 1.5), false, Tolerance::new(1e-14, 1e-12)).unwrap();
    assert!(rel(c.sigma[(0, 1)], quad) < 1e-9);
    // Brownian noise is non-stationary and still covered.
    let b = build_segment_covariance(&NoiseModel::Brownian { chi0: 0.3, omega_c: 1.0 }, &seq).unwrap();
    assert!(rel(b.sigma.sum(), chi_time_domain(&NoiseModel::Brownian { chi0: 0.3, omega_c: 1.0 }, 1.5).unwrap()) < 1e-12);
}

#[test]
fn quadratic_form_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = NoiseModel::White { chi0: 0.7, omega_c: 1.3 };
    for q in 0..12 {
        let f = random_fractions(&mut rng, q, 1e-3);
        let seq = PulseSequence::new(f, vec![Pulse::pi_x(); q], 2.0).unwrap();
        let v = quadratic_form_bound(&build_segment_covariance(&m, &seq).unwrap()).unwrap();
        assert!(rel(v.value, 2.0 / (0.7 * 1.3)) < 1e-13);
    }
    let thirds = PulseSequence::new(vec![1.0 / 3.0, 2.0 / 3.0], vec![Pulse::pi_x(), Pulse::pi_x()], 0.9).unwrap();
    let v = quadratic_form_bound(&build_segment_covariance(&white(), &thirds).unwrap()).unwrap();
    assert!((v.value - 0.9).abs() < 1e-14);
    assert!((v.total(0.9, 3.0) - 3.0).abs() < 1e-13);
    let free = PulseSequence::free(0.5).unwrap();
    let v = quadratic_form_bound(&build_segment_covariance(&ou(), &free).unwrap()).unwrap();
    assert!(rel(v.value, 0.25 / chi_time_domain(&ou(), 0.5).unwrap()) < 1e-14);
    // Smooth noise with many short segments is singular in f64.
    let many = PulseSequence::new(vec![0.2, 0.4, 0.6, 0.8], vec![Pulse::pi_x(); 4], 0.05).unwrap();
    let r = quadratic_form_bound(&build_segment_covariance(&cutoff(1.0), &many).unwrap());
    assert!(matches!(r, Err(Error::IllConditioned { condition }) if condition > MAX_CONDITION));
}

/// Random compression with consecutive blocks and random signs.
pub(crate) fn random_compression(rng: &mut ChaCha8Rng, q: usize) -> DMatrix<f64> {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < q {
        let len = 1 + (rng.random::<f64>() * (q - start) as f64) as usize;
        let len = len.min(q - start);
        blocks.push(start..start + len);
        start += len;
    }
    let signs = (0..q).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Compression::from_blocks(blocks, signs).unwrap().s
}

pub(crate) fn random_spd(rng: &mut ChaCha8Rng, q: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(q, q, |_, _| rng.random::<f64>() - 0.5);
    &a * a.transpose() + DMatrix::identity(q, q) * 0.05
}

#[test]
fn compression_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sigma = random_spd(&mut rng, 4);
    let dt = DVector::from_vec(vec![0.1, 0.3, 0.2, 0.4]);
    let id = check_compression_monotonicity(&sigma, &DMatrix::identity(4, 4), &dt).unwrap();
    assert!(rel(id.compressed, id.full) < 1e-12 && id.spectrum < 1e-12);
    for _ in 0..1000 {
        let q = 1 + (rng.random::<f64>() * 8.0) as usize;
        let sigma = random_spd(&mut rng, q);
        let s = random_compression(&mut rng, q);
        let dt = DVector::from_fn(q, |_, _| rng.random::<f64>() + 0.01);
        let r = check_compression_monotonicity(&sigma, &s, &dt).unwrap();
        assert!(r.violation() <= 1e-12, "{r:?}");
        assert!(r.idempotence < 1e-10 && r.asymmetry < 1e-10 && r.spectrum < 1e-9, "{r:?}");
    }
    let dup = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    assert!(matches!(check_compression_monotonicity(&random_spd(&mut rng, 3), &dup, &dt.rows(0, 3).into()), Err(Error::RankDeficient(_))));
}

fn gaussian_moments(s: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| statrs::function::gamma::gamma(k as f64 + 0.5 * (s + 1.0)) / (4.0 * PI)).collect()
}

#[test]
fn kq_closed_form_values() {
    assert!(rel(kq_hankel_gaussian(2, 1.0, 1.0).unwrap(), 4.0 * PI) < 1e-14);
    assert!(rel(kq_hankel_gaussian(1, 1.0, 1.0).unwrap(), 4.0 * PI) < 1e-14);
    assert!(rel(kq_hankel_gaussian(2, 1.0, 2.0).unwrap(), 2.0 * PI) < 1e-14);
    // det [[G(1), G(2)], [G(2), G(3)]] = 0! G(1) 1! G(2) = 1.
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
    assert_eq!(h.determinant(), 1.0);
    for s in [0.0, 1.0, 2.0] {
        let e = kq_growth_exponent(s, 1.0, 8, 64).unwrap();
        assert!(rel(e, 0.5 * (s + 1.0)) < 0.05, "s={s}: {e}");
    }
    assert!(kq_hankel_gaussian(0, 1.0, 1.0).is_err() && kq_hankel_gaussian(2, -1.0, 1.0).is_err());
}

#[test]
fn kq_bruteforce_matches_closed_form() {
    for s in [0.0, 1.0, 2.0] {
        let mu = gaussian_moments(s, 16);
        for q in 1..=8 {
            let b = kq_bruteforce(q, &mu, DEFAULT_ENUMERATION_CAP).unwrap();
            let h = kq_hankel_gaussian(q, s, 1.0).unwrap();
            assert!(rel(b.enumerated, h) < 1e-8, "s={s} Q'={q}: {} vs {h}", b.enumerated);
            assert!(rel(b.enumerated, b.lu) < 1e-10);
        }
    }
    // Entries with i + j odd never enter the enumeration.
    let mu = gaussian_moments(1.0, 8);
    let mut c = moment_matrix(5, &mu).unwrap();
    let before = parity_compatible_determinant(&c, 10).unwrap();
    c[(0, 1)] = 3.0;
    c[(3, 0)] = -2.0;
    assert_eq!(parity_compatible_determinant(&c, 10).unwrap(), before);
    assert!(matches!(kq_bruteforce(11, &gaussian_moments(1.0, 12), 10), Err(Error::CombinatorialOverflow { size: 11, cap: 10 })));
    assert!(matches!(kq_bruteforce(3, &[1.0, f64::INFINITY, 1.0], 10), Err(Error::DivergentMoment { order: 1 })));
}

#[test]
fn kq_numeric_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in [0.0, 1.0, 2.0] {
        let mu = gaussian_moments(s, 64);
        for q in 1..=6 {
            let h = kq_hankel_gaussian(q, s, 1.0).unwrap();
            let values: Vec<f64> = (0..5)
                .map(|_| kq_numeric_with_moments(&mu, &random_fractions(&mut rng, q - 1, 0.05), DEFAULT_GRID_START).unwrap().k)
                .collect();
            for v in &values {
                assert!(rel(*v, h) < 0.01, "s={s} Q'={q}: {v} vs {h}");
            }
        }
    }
    // Model route with quadrature moments.
    let k = kq_numeric(&cutoff(1.0), &[0.3], DEFAULT_GRID_START).unwrap();
    assert!(rel(k.k, 4.0 * PI) < 0.01);
    // Single segment: wc^2 t^2 / chi(t) -> 1 / chi0^2 for the n = 2 law.
    let law = fit_short_time_law(&cutoff(0.0), &[]).unwrap();
    assert_eq!(law.n, 2);
    let k1 = kq_numeric(&cutoff(0.0), &[], DEFAULT_GRID_START).unwrap();
    assert!(rel(k1.k, 1.0 / law.chi0().powi(2)) < 1e-3);
    assert!(matches!(kq_numeric(&ou(), &[0.5], DEFAULT_GRID_START), Err(Error::DivergentMoment { .. })));
}

#[test]
fn nogo_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (chi0, wc, total) = (0.8, 1.7, 2.5);
    let regime = NogoRegime::White { chi0, omega_c: wc };
    for &n in &[1.0, 10.0, 1000.0] {
        let uncontrolled = precision_lower_bound(&BoundQuery::new(n, total, DecayLaw::from_chi0(1, chi0, wc).unwrap()).unwrap()).unwrap();
        let b = controlled_nogo_bound(n, total, regime).unwrap();
        assert!(rel(b.precision, uncontrolled) < 1e-13);
        for _ in 0..20 {
            let q = (rng.random::<f64>() * 12.0) as usize;
            let seq = PulseSequence::new(random_fractions(&mut rng, q, 1e-4), vec![Pulse::pi_y(); q], 0.37).unwrap();
            let cov = build_segment_covariance(&NoiseModel::White { chi0, omega_c: wc }, &seq).unwrap();
            let f = quadratic_form_bound(&cov).unwrap().total(seq.t, total);
            assert!(rel(1.0 / f, uncontrolled) < 1e-13);
        }
    }
    let col = controlled_nogo_bound(100.0, 1.0, NogoRegime::Colored { k: 4.0, omega_c: 1.0 }).unwrap();
    assert!(rel(col.t_star, 0.02) < 1e-15 && rel(col.precision, 0.005) < 1e-15);
    let ns: Vec<f64> = (0..9).map(|k| 10f64.powf(2.0 + k as f64 / 4.0)).collect();
    let p: Vec<f64> = ns.iter().map(|&n| controlled_nogo_bound(n, 1.0, NogoRegime::Colored { k: 12.0, omega_c: 1.0 }).unwrap().precision).collect();
    assert!((crate::numerics::power_law_fit(&ns, &p).0 + 1.0).abs() < 0.01);
    // The curve peaks at t* with value 1 / precision.
    let reg = NogoRegime::Colored { k: 4.0, omega_c: 1.0 };
    let peak = nogo_curve(100.0, 1.0, reg, col.t_star).unwrap();
    assert!(rel(peak, 1.0 / col.precision) < 1e-12);
    assert!(nogo_curve(100.0, 1.0, reg, 0.5 * col.t_star).unwrap() < peak);
    assert!(nogo_curve(100.0, 1.0, reg, 2.0 * col.t_star).unwrap() < peak);
    assert!(controlled_nogo_bound(10.0, 1.0, NogoRegime::Colored { k: -1.0, omega_c: 1.0 }).is_err());
}

#[test]
fn continuous_control_discretization() {
    let empty = continuous_to_pulsed(&[[0.0; 3]; 8], 1.0).unwrap();
    assert!(empty.pulses.is_empty() && empty.terminal.is_none());
    let (b, ux, t) = (1.0, 2.0, 1.0);
    let h = jz(1) * Complex64::from(b) + jx(1) * Complex64::from(ux);
    let exact = exp_hermitian(&h, t);
    let mut defects = Vec::new();
    let qs = [16usize, 32, 64, 128, 256];
    for &q in &qs {
        let seq = continuous_to_pulsed(&vec![[ux, 0.0, 0.0]; q], t).unwrap();
        assert_eq!(seq.q(), q - 1);
        let u = sequence_unitary(&seq, 1, b, None).unwrap();
        defects.push((u - &exact).norm());
    }
    let x: Vec<f64> = qs.iter().map(|&q| t / q as f64).collect();
    let order = crate::numerics::power_law_fit(&x, &defects).0;
    assert!((order - 1.0).abs() < 0.05, "order {order}");
    // Without signal the pulses compose into one rotation by u t.
    let seq = continuous_to_pulsed(&vec![[ux, 0.0, 0.0]; 10], t).unwrap();
    let u = sequence_unitary(&seq, 1, 0.0, None).unwrap();
    assert!((u - exp_hermitian(&jx(1), ux * t)).norm() < 1e-12);
}

fn dicke_input(kind: InputKind, n: usize) -> DickeState {
    build_input(kind, n, 0.0, 0.0).unwrap()
}

#[test]
fn exact_average_reduces_to_dephasing_map() {
    let rho0 = build_input(InputKind::Oats, 4, 0.3, 0.4).unwrap();
    for m in [white(), ou(), NoiseModel::Brownian { chi0: 0.5, omega_c: 1.0 }] {
        let free = PulseSequence::free(0.6).unwrap();
        let cov = build_segment_covariance(&m, &free).unwrap();
        let a = analytic_controlled_state(&rho0, &free, &Compression::identity(1), &cov, 0.7, ).unwrap();
        let direct = evolve(&rho0, 0.7, 0.5 * cov.sigma[(0, 0)], 0.6);
        assert!((a.rho() - direct.rho()).norm() < 1e-13);
        // Identity pulses, b = 0: pure dephasing by the total phase.
        let seq = PulseSequence::new(vec![0.3, 0.8], vec![Pulse::rotation(NamedAxis::X, 0.0); 2], 0.6).unwrap();
        let cov = build_segment_covariance(&m, &seq).unwrap();
        let comp = detect_dp_blocks(&seq).unwrap();
        assert_eq!(comp.rows(), 1);
        let a = analytic_controlled_state(&rho0, &seq, &comp, &cov, 0.0).unwrap();
        let direct = evolve(&rho0, 0.0, 0.5 * cov.sigma.sum(), 0.6);
        assert!((a.rho() - direct.rho()).norm() < 1e-12);
    }
}

#[test]
fn exact_average_agrees_across_compressions_and_with_trajectories() {
    let rho0 = build_input(InputKind::Oats, 3, 0.4, 0.2).unwrap();
    let seq = PulseSequence::new(
        vec![0.3, 0.6],
        vec![Pulse::pi_x(), Pulse::rotation(NamedAxis::Y, FRAC_PI_2)],
        0.8,
    )
    .unwrap();
    let cov = build_segment_covariance(&ou(), &seq).unwrap();
    let dp = detect_dp_blocks(&seq).unwrap();
    let a = analytic_controlled_state(&rho0, &seq, &dp, &cov, 0.9).unwrap();
    let b = analytic_controlled_state(&rho0, &seq, &Compression::identity(3), &cov, 0.9).unwrap();
    assert!((a.rho() - b.rho()).norm() < 1e-12);
    // Noiseless limit: a single unitary.
    let quiet = SegmentCovariance { sigma: DMatrix::zeros(3, 3), ..cov.clone() };
    let u = sequence_unitary(&seq, 3, 0.9, None).unwrap();
    let c = analytic_controlled_state(&rho0, &seq, &dp, &quiet, 0.9).unwrap();
    assert!((c.rho() - &u * rho0.rho() * u.adjoint()).norm() < 1e-12);
    let mc = simulate_controlled_mixture(&rho0, &seq, &Compression::identity(3), &cov, 0.9, 40_000, 9).unwrap();
    assert!((mc.state.rho() - a.rho()).norm() < 5.0 * mc.frobenius_se, "{} vs se {}", (mc.state.rho() - a.rho()).norm(), mc.frobenius_se);
}

#[test]
fn decoupled_signal_cancels() {
    let rho0 = dicke_input(InputKind::Css, 4);
    let seq = PulseSequence::new(vec![0.5], vec![Pulse::pi_x()], 1.0).unwrap();
    let comp = detect_dp_blocks(&seq).unwrap();
    let dt = comp.compress_durations(&seq.durations());
    assert!(dt[0].abs() < 1e-15);
    let cov = build_segment_covariance(&ou(), &seq).unwrap();
    let a = analytic_controlled_state(&rho0, &seq, &comp, &cov, 0.0).unwrap();
    let b = analytic_controlled_state(&rho0, &seq, &comp, &cov, 2.3).unwrap();
    assert!((a.rho() - b.rho()).norm() < 1e-13);
    let m1 = simulate_controlled_mixture(&rho0, &seq, &comp, &cov, 0.0, 5000, 1).unwrap();
    let m2 = simulate_controlled_mixture(&rho0, &seq, &comp, &cov, 2.3, 5000, 1).unwrap();
    assert!((m1.state.rho() - m2.state.rho()).norm() < 1e-12);
}

#[test]
fn monte_carlo_mixture_matches_exact_average() {
    let rho0 = dicke_input(InputKind::Ghz, 4);
    let free = PulseSequence::free(0.5).unwrap();
    let cov = build_segment_covariance(&white(), &free).unwrap();
    let mc = simulate_controlled_mixture(&rho0, &free, &Compression::identity(1), &cov, 0.4, 100_000, 42).unwrap();
    let exact = evolve(&rho0, 0.4, 0.25, 0.5);
    let dist = (mc.state.rho() - exact.rho()).norm();
    assert!(dist < 5.0 * mc.frobenius_se, "{dist} vs {}", mc.frobenius_se);
    let again = simulate_controlled_mixture(&rho0, &free, &Compression::identity(1), &cov, 0.4, 100_000, 42).unwrap();
    assert_eq!(again, mc);
    assert!(matches!(
        simulate_controlled_mixture(&rho0, &free, &Compression::identity(1), &cov, 0.4, MAX_SAMPLES + 1, 1),
        Err(Error::SamplingBudgetExceeded(_))
    ));
}

#[test]
fn controlled_information_obeys_quadratic_form_bound() {
    let h = 1e-4;
    for (kind, n) in [(InputKind::Ghz, 4), (InputKind::Oats, 6), (InputKind::Css, 8)] {
        let rho0 = build_input(kind, n, 0.2, 0.3).unwrap();
        for m in [white(), ou(), cutoff(1.0)] {
            for seq in [PulseSequence::free(0.7).unwrap(), cpmg(0.7), PulseSequence::new(vec![0.5], vec![Pulse::rotation(NamedAxis::Y, 1.0)], 0.7).unwrap()] {
                let cov = build_segment_covariance(&m, &seq).unwrap();
                let bound = quadratic_form_bound(&cov).unwrap().value;
                let comp = Compression::identity(seq.q_prime());
                let at = |b: f64| analytic_controlled_state(&rho0, &seq, &comp, &cov, b).unwrap();
                let rho = at(0.3);
                let drho = (at(0.3 + h).rho() - at(0.3 - h).rho()) / Complex64::from(2.0 * h);
                let q = qfi_and_sld(rho.rho(), &drho, 1e-12).unwrap().qfi;
                assert!(q <= bound * (1.0 + 1e-6), "{kind:?} {m:?} Q'={}: {q} > {bound}", seq.q_prime());
            }
        }
    }
}

#[test]
fn gaussian_overlap_by_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for q in 1..=3 {
        let sigma = random_spd(&mut rng, q);
        let dphi = DVector::from_fn(q, |_, _| rng.random::<f64>() - 0.5);
        let closed = gaussian_overlap(&sigma, &dphi).unwrap();
        // Whitening x = L z maps both laws to unit normals with means
        // 0 and L^{-1} dphi; the integral factorizes over coordinates.
        let l = nalgebra::Cholesky::new(sigma.clone()).unwrap().l();
        let a = l.solve_lower_triangular(&dphi).unwrap();
        let mut prod = 1.0;
        for &ai in a.iter() {
            let f = |z: f64| {
                let n1 = (-0.5 * z * z).exp();
                let n2 = (-0.5 * (z - ai) * (z - ai)).exp();
                (n1 * n2).sqrt() / (2.0 * PI).sqrt()
            };
            prod *= integrate(f, -40.0, 40.0, Tolerance::new(1e-15, 1e-13)).unwrap();
        }
        assert!(rel(closed, prod) < 1e-10, "Q~={q}: {closed} vs {prod}");
    }
}
