use super::*;
use crate::dicke::{evolve, qfi_of_state, variance_jz, CMatrix, DickeState};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn law(n: u32) -> DecayLaw {
    DecayLaw::from_chi0(n, 1.0, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn purification_bound_values() {
    assert_eq!(purification_qfi_bound(3.0, 0.0, 2.0), 48.0);
    assert!((purification_qfi_bound(25.0, 0.01, 1.0) - 50.0).abs() < 1e-12);
    assert!(purification_qfi_bound(25.0, 1e300, 1.0) < 1e-290);
    let mut last = f64::INFINITY;
    for k in 0..50 {
        let v = purification_qfi_bound(7.0, k as f64 * 0.01, 1.3);
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn gauge_family_moments() {
    let (v, m, chi, t) = (25.0, 1.5, 0.01, 0.7);
    let p0 = purification_moments(0.0, v, m, chi, t).unwrap();
    assert!((p0.qfi - 4.0 * t * t * v).abs() < 1e-12);
    assert!((p0.mean - t * m).abs() < 1e-15);
    let p1 = purification_moments(1.0, v, m, chi, t).unwrap();
    assert!((p1.qfi - t * t / chi).abs() < 1e-10);
    let z = zeta_opt(v, chi);
    assert!((z - 0.5).abs() < 1e-15);
    let popt = purification_moments(z, v, m, chi, t).unwrap();
    assert!(rel(popt.qfi, purification_qfi_bound(v, chi, t)) < 1e-14);
    // 4 (<H^2> - <H>^2) equals the quadratic in zeta.
    assert!(rel(4.0 * (popt.second_moment - popt.mean * popt.mean), popt.qfi) < 1e-12);
    // Convex with unique minimum at zeta_opt.
    let h = 1e-3;
    let f = |zeta: f64| purification_moments(zeta, v, m, chi, t).unwrap().qfi;
    assert!(f(z + h) - 2.0 * f(z) + f(z - h) > 0.0);
    assert!(f(z + h) > f(z) && f(z - h) > f(z));
    assert!(purification_moments(0.3, v, m, 0.0, t).is_err());
}

#[test]
fn state_independent_optimum_examples() {
    let q = BoundQuery::new(100.0, 1.0, law(2)).unwrap();
    let opt = optimal_time_and_bound(&q, None).unwrap();
    assert!(rel(opt.t_star, 0.01) < 1e-14);
    assert!(rel(opt.f_total, 50.0) < 1e-14);
    assert!(rel(precision_lower_bound(&q).unwrap(), 0.02) < 1e-14);
    assert!((g_factor(2) - 2.0).abs() < 1e-15);
    let one: Vec<f64> = [1.0, 10.0, 1000.0]
        .iter()
        .map(|&n| optimal_time_and_bound(&BoundQuery::new(n, 1.0, law(1)).unwrap(), None).unwrap().f_total)
        .collect();
    assert_eq!(one, vec![1.0, 1.0, 1.0]);
    let sup = optimal_time_and_bound(&BoundQuery::new(10.0, 1.0, law(1)).unwrap(), None).unwrap();
    assert!(sup.is_supremum());
    let capped = optimal_time_and_bound(&BoundQuery::new(10.0, 1.0, law(1)).unwrap(), Some(0.5)).unwrap();
    assert!(rel(capped.f_total, 100.0 * 0.5 / (1.0 + 50.0)) < 1e-14);
    // N^(4/3) scaling for n = 3.
    let f = |n: f64| optimal_time_and_bound(&BoundQuery::new(n, 1.0, law(3)).unwrap(), None).unwrap().f_total;
    let slope = (f(1000.0) / f(100.0)).log10();
    assert!((slope - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn precision_formula_matches_g_factor() {
    for n in 2..=6u32 {
        for &big_n in &[3.0, 40.0, 1e4] {
            let decay = DecayLaw::from_chi0(n, 0.7, 2.0).unwrap();
            let q = BoundQuery::new(big_n, 3.0, decay).unwrap();
            let expected = 0.7 * 2.0 / 3.0 * g_factor(n) * big_n.powf(-2.0 * (n as f64 - 1.0) / n as f64);
            assert!(rel(precision_lower_bound(&q).unwrap(), expected) < 1e-13);
        }
    }
}

#[test]
fn closed_forms_match_numeric_maximization() {
    for n in 2..=5u32 {
        for &big_n in &[10.0, 100.0, 1000.0] {
            let q = BoundQuery::new(big_n, 1.0, law(n)).unwrap();
            let a = optimal_time_and_bound(&q, None).unwrap();
            let b = numeric_saturating_optimum(big_n * big_n, &q.decay, 1.0);
            assert!(rel(a.t_star, b.t_star) < 1e-8 && rel(a.f_total, b.f_total) < 1e-8, "n={n} N={big_n}");
            let g = ghz_optimal(&q).unwrap();
            let gn = numeric_ghz_optimum(&q);
            assert!(rel(g.t_star, gn.t_star) < 1e-8 && rel(g.f_total, gn.f_total) < 1e-8, "ghz n={n} N={big_n}");
        }
    }
}

#[test]
fn ghz_examples() {
    let q = BoundQuery::new(100.0, 1.0, law(2)).unwrap();
    let g = ghz_optimal(&q).unwrap();
    assert!(rel(g.t_star, 0.005) < 1e-14);
    assert!(rel(g.f_total, (-0.5f64).exp() * 0.5 * 100.0) < 1e-14);
    assert!(rel(g.delta_b(), (1.0 / g.f_total).sqrt()) < 1e-15);
    // GHZ never beats the state-independent bound.
    for n in [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0] {
        for k in 1..=4 {
            let q = BoundQuery::new(n, 1.0, law(k)).unwrap();
            let g = ghz_optimal(&q).unwrap();
            assert!(g.f_total <= total_bound_at(&q, g.t_star) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn arbitrary_chi_time_search() {
    // chi = t^2 reproduces the power-law closed form.
    let q = BoundQuery::new(50.0, 2.0, law(2)).unwrap();
    let closed = optimal_time_and_bound(&q, None).unwrap();
    let found = optimize_time(q.variance(), 2.0, |t| t * t, 1e-8, 1e3).unwrap();
    // An f64 objective resolves a quadratic maximum to about sqrt(eps).
    assert!(rel(found.t_star, closed.t_star) < 1e-7);
    assert!(rel(found.f_total, closed.f_total) < 1e-12);
}

#[test]
fn purification_bound_dominates_exact_qfi() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..60 {
        let n = 1 + trial % 12;
        let dim = n + 1;
        let rank = 1 + trial % 3;
        let g = CMatrix::from_fn(dim, rank, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut rho = &g * g.adjoint();
        let tr = rho.trace();
        rho /= tr;
        let s = DickeState::new(rho, 0.0, 0.0).unwrap();
        let v = variance_jz(&s);
        for &t in &[0.1, 1.0, 3.0] {
            for &chi in &[0.0, 0.01, 0.2, 2.0] {
                let q = qfi_of_state(&evolve(&s, 0.3, chi, t)).unwrap().qfi;
                let bound = purification_qfi_bound(v, chi, t);
                assert!(q <= bound + 1e-9 * bound.max(1.0), "N={n} t={t} chi={chi}: {q} > {bound}");
            }
        }
    }
}

#[test]
fn sweep_rows() {
    let rows = sweep(&[10.0, 100.0], 1.0, law(1)).unwrap();
    assert!(rows.iter().all(|r| r.regime == "supremum" && r.precision == 1.0));
    let rows = sweep(&[100.0], 1.0, law(2)).unwrap();
    assert_eq!(rows[0].regime, "finite");
}
