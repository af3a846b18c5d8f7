//! Command implementations. Each returns a [`Table`]; `validate` and
//! `mc-validate` also report whether their checks passed.

use dephasing::bounds::{ghz_optimal, numeric_ghz_optimum, optimal_time_and_bound, sweep, BoundQuery};
use dephasing::control::{
    build_segment_covariance, controlled_nogo_bound, detect_dp_blocks, kq_bruteforce, kq_growth_exponent, kq_hankel_gaussian,
    kq_numeric_with_moments, quadratic_form_bound, NogoRegime, DEFAULT_ENUMERATION_CAP, DEFAULT_GRID_START,
};
use dephasing::montecarlo::sample_phase_process;
use dephasing::noise::{chi_spectrum_domain, chi_time_domain, fit_short_time_law, gaussian_cutoff_moment, DecayLaw, NoiseModel};
use dephasing::numerics::power_law_fit;
use dephasing::phase_space::{
    oats_optimal, table1_leading_order, table1_precision, table1_probe_numbers, table1_row, HpMargins, NoiseRegime, OptimizationMethod,
    Table1State,
};
use dephasing::validation::{run_check, ValidationOptions, CHECK_NAMES, INVARIANT_CHECKS};

use crate::config::{log_spaced, positive, Params};
use crate::table::{Cell, Table};
use crate::{CliError, FigureKind, OatsFamily, ValidateArgs};

/// Default random seed.
pub const DEFAULT_SEED: u64 = 20240601;

fn lib(e: dephasing::Error) -> CliError {
    CliError::Input(e.to_string())
}

fn default_probes() -> Vec<f64> {
    log_spaced(1e1, 1e4, 13)
}

/// The decay law from `--n/--chi0/--omega-c`, or fitted to `--noise` when
/// no exponent is given.
fn decay_law(p: &Params, table: &mut Table) -> Result<DecayLaw, CliError> {
    let law = match (p.n, p.noise_model()?) {
        (None, Some(model)) => {
            table.param("noise", &model);
            fit_short_time_law(&model, &[]).map_err(lib)?
        }
        (n, _) => DecayLaw::from_chi0(n.unwrap_or(2), p.chi0.unwrap_or(1.0), p.omega_c.unwrap_or(1.0)).map_err(lib)?,
    };
    table.param("decay", law);
    table.param("chi0", law.chi0());
    Ok(law)
}

/// `(t, chi_time, chi_spectrum, fitted n, chi0)` over a time grid.
pub fn chi(p: &Params) -> Result<Table, CliError> {
    let model = p.require_noise()?;
    let wc = model.omega_c();
    let ts = p.grid(&p.t, "t", log_spaced(1e-3 / wc, 1e1 / wc, 25))?;
    let mut table = Table::new("chi", &["t", "chi_time", "chi_spectrum", "fitted_n", "chi0"]);
    table.param("noise", &model);
    table.param("t", &ts);
    let fit = fit_short_time_law(&model, &[]);
    if let Err(e) = &fit {
        eprintln!("warning: no short-time power law: {e}");
    }
    let (n, chi0) = match &fit {
        Ok(l) => (Cell::from(l.n), Cell::from(l.chi0())),
        Err(_) => (Cell::Empty, Cell::Empty),
    };
    for &t in &ts {
        let time = chi_time_domain(&model, t).map_err(lib)?;
        let spectrum = match chi_spectrum_domain(&model, t) {
            Ok(v) => Cell::from(v),
            Err(dephasing::Error::SpectrumUndefined(_)) => Cell::Empty,
            Err(e) => return Err(lib(e)),
        };
        table.push(vec![t.into(), time.into(), spectrum, n.clone(), chi0.clone()]);
    }
    Ok(table)
}

/// State-independent bound over `N`.
pub fn bound(p: &Params) -> Result<Table, CliError> {
    let mut table = Table::new("bound", &["N", "n", "t_star", "f_total", "delta_b2", "delta_b", "regime"]);
    let law = decay_law(p, &mut table)?;
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", default_probes())?;
    table.param("T", total);
    table.param("N", &ns);
    for row in sweep(&ns, total, law).map_err(lib)? {
        table.push(vec![row.n.into(), law.n.into(), row.t_star.into(), row.f_total.into(), row.precision.into(), row.precision.sqrt().into(), row.regime.into()]);
    }
    Ok(table)
}

/// GHZ optimum over `N`, closed form and numeric.
pub fn ghz(p: &Params) -> Result<Table, CliError> {
    let mut table = Table::new("ghz", &["N", "n", "t_star", "f_total", "delta_b", "t_star_numeric", "f_total_numeric"]);
    let law = decay_law(p, &mut table)?;
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", default_probes())?;
    table.param("T", total);
    table.param("N", &ns);
    for &n in &ns {
        let q = BoundQuery::new(n, total, law).map_err(lib)?;
        let c = ghz_optimal(&q).map_err(lib)?;
        let num = numeric_ghz_optimum(&q);
        table.push(vec![n.into(), law.n.into(), c.t_star.into(), c.f_total.into(), c.delta_b().into(), num.t_star.into(), num.f_total.into()]);
    }
    Ok(table)
}

fn family_twist(family: OatsFamily, n: f64) -> (f64, f64) {
    let state = match family {
        OatsFamily::Ku => Table1State::KuOats,
        OatsFamily::Pe => Table1State::PeOats,
        OatsFamily::Css => Table1State::Css,
    };
    state.twist(n).unwrap_or((0.0, 0.0))
}

/// Twisted-state optimum over `N`.
pub fn oats(p: &Params, family: OatsFamily) -> Result<Table, CliError> {
    let mut table = Table::new("oats", &["N", "mu", "beta", "delta", "eta", "t_star", "f_total", "delta_b", "hp_ratio", "hp_status"]);
    let law = decay_law(p, &mut table)?;
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", default_probes())?;
    table.param("T", total);
    table.param("N", &ns);
    table.param("family", format!("{family:?}").to_lowercase());
    table.param("mu", p.mu);
    table.param("beta", p.beta);
    for &n in &ns {
        let (mu0, beta0) = family_twist(family, n);
        let (mu, beta) = (p.mu.unwrap_or(mu0), p.beta.unwrap_or(beta0));
        let o = oats_optimal(n, total, &law, mu, beta, HpMargins::default()).map_err(lib)?;
        table.push(vec![
            n.into(),
            mu.into(),
            beta.into(),
            o.delta.into(),
            o.eta.into(),
            o.t_star.into(),
            o.f_total.into(),
            (1.0 / o.f_total).sqrt().into(),
            o.hp.ratio.into(),
            format!("{:?}", o.hp.status).to_lowercase().into(),
        ]);
    }
    Ok(table)
}

/// Fitted exponents and prefactors of the comparison table.
pub fn table1(p: &Params, command: &str) -> Result<Table, CliError> {
    let mut table = Table::new(
        command,
        &["state", "regime", "exponent", "prefactor", "residual", "closed_exponent", "closed_prefactor", "leading_exponent", "leading_prefactor"],
    );
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", table1_probe_numbers())?;
    table.param("T", total);
    table.param("N", &ns);
    for state in Table1State::ALL {
        for regime in NoiseRegime::ALL {
            let fit = table1_row(state, regime, &ns, total, OptimizationMethod::Numeric).map_err(lib)?;
            let closed = table1_row(state, regime, &ns, total, OptimizationMethod::ClosedForm).map_err(lib)?;
            let (e, c) = table1_leading_order(state, regime);
            table.push(vec![
                format!("{state:?}").into(),
                format!("{regime:?}").into(),
                fit.exponent.into(),
                fit.prefactor.into(),
                fit.residual.into(),
                closed.exponent.into(),
                closed.prefactor.into(),
                e.into(),
                c.into(),
            ]);
        }
    }
    Ok(table)
}

/// Controlled single-run and total bounds for a pulse sequence.
pub fn control(p: &Params) -> Result<Table, CliError> {
    let model = p.require_noise()?;
    let seq = p.require_pulses()?;
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", vec![100.0])?;
    let mut table = Table::new(
        "control",
        &["N", "q_prime", "dp_rows", "dp_blocks", "single_run_bound", "condition", "total_bound", "delta_b2", "nogo_t_star", "nogo_delta_b2"],
    );
    table.param("noise", &model);
    table.param("pulses", &seq);
    table.param("T", total);
    table.param("N", &ns);
    let dp = match detect_dp_blocks(&seq) {
        Ok(c) => Some(c),
        Err(e) => {
            eprintln!("warning: no decoupling-block compression: {e}");
            None
        }
    };
    let blocks = dp.as_ref().map(|c| {
        c.blocks
            .iter()
            .map(|r| format!("{}-{}", r.start, r.end - 1))
            .collect::<Vec<_>>()
            .join("|")
    });
    let cov = build_segment_covariance(&model, &seq).map_err(lib)?;
    let qf = quadratic_form_bound(&cov).map_err(lib)?;
    let regime = match &model {
        NoiseModel::White { chi0, omega_c } => Some(NogoRegime::White { chi0: *chi0, omega_c: *omega_c }),
        NoiseModel::GaussianCutoff { alpha, s, omega_c } => {
            Some(NogoRegime::Colored { k: kq_hankel_gaussian(seq.q_prime(), *s, *alpha).map_err(lib)?, omega_c: *omega_c })
        }
        _ => None,
    };
    for &n in &ns {
        // The quadratic form caps the noiseless N^2 t^2 of a single run.
        let f = total / seq.t * (n * n * seq.t * seq.t).min(qf.value);
        let nogo = regime.map(|r| controlled_nogo_bound(n, total, r)).transpose().map_err(lib)?;
        table.push(vec![
            n.into(),
            seq.q_prime().into(),
            dp.as_ref().map(|c| c.rows()).into(),
            blocks.clone().into(),
            qf.value.into(),
            qf.condition.into(),
            f.into(),
            (1.0 / f).into(),
            nogo.map(|b| b.t_star).into(),
            nogo.map(|b| b.precision).into(),
        ]);
    }
    Ok(table)
}

fn moments(alpha: f64, s: f64) -> Vec<f64> {
    (0..64).map(|k| gaussian_cutoff_moment(alpha, s, 1.0, k)).collect()
}

/// `K_Q'` by the three routes.
pub fn kq(p: &Params) -> Result<Table, CliError> {
    let alpha = positive("alpha", p.alpha.unwrap_or(1.0))?;
    let ss = p.grid(&p.s, "s", vec![1.0])?;
    let qs = p.grid(&p.segments, "Q", (1..=8).map(f64::from).collect())?;
    let mut table = Table::new("kq", &["s", "q_prime", "hankel", "bruteforce", "numeric"]);
    table.param("alpha", alpha);
    table.param("s", &ss);
    table.param("Q", &qs);
    for &s in &ss {
        let mu = moments(alpha, s);
        for &qf in &qs {
            if qf < 1.0 || qf.fract() != 0.0 {
                return Err(CliError::Input(format!("--Q values must be positive integers, got {qf}")));
            }
            let q = qf as usize;
            let h = kq_hankel_gaussian(q, s, alpha).map_err(lib)?;
            let brute = (q <= DEFAULT_ENUMERATION_CAP).then(|| kq_bruteforce(q, &mu, DEFAULT_ENUMERATION_CAP)).transpose().map_err(lib)?;
            let fractions: Vec<f64> = (1..q).map(|k| k as f64 / q as f64).collect();
            let numeric = if q <= 8 {
                kq_numeric_with_moments(&mu, &fractions, DEFAULT_GRID_START).map(|k| k.k).ok()
            } else {
                None
            };
            table.push(vec![s.into(), q.into(), h.into(), brute.map(|b| b.enumerated).into(), numeric.into()]);
        }
    }
    Ok(table)
}

/// Empirical phase variance against `chi(t)`; fails when any point is
/// more than four standard errors away.
pub fn mc_validate(p: &Params, ensemble: Option<&std::path::Path>) -> Result<(Table, bool), CliError> {
    let model = p.require_noise()?;
    let ts = p.grid(&p.t, "t", vec![0.1, 0.3, 0.6, 1.0, 1.5])?;
    let count = p.count.unwrap_or(if p.quick { 10_000 } else { 100_000 });
    let seed = p.seed.unwrap_or(DEFAULT_SEED);
    let mut table = Table::new("mc-validate", &["t", "chi_exact", "chi_empirical", "standard_error", "z", "passed"]);
    table.param("noise", &model);
    table.param("t", &ts);
    table.param("count", count);
    table.param("seed", seed);
    if count < 2 {
        return Err(CliError::Input("--count must be at least 2".into()));
    }
    let ens = sample_phase_process(&model, &ts, count, seed).map_err(lib)?;
    if let Some(path) = ensemble {
        let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        ens.write_csv(std::io::BufWriter::new(file)).map_err(lib)?;
    }
    let mut ok = true;
    for (k, &t) in ts.iter().enumerate() {
        let col = ens.column(k);
        let n = col.len() as f64;
        let v = col.iter().map(|x| x * x).sum::<f64>() / n;
        let se = (col.iter().map(|x| (x * x - v).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let exact = chi_time_domain(&model, t).map_err(lib)?;
        let z = (v - exact) / se;
        let passed = z.abs() <= 4.0;
        ok &= passed;
        table.push(vec![t.into(), exact.into(), v.into(), se.into(), z.into(), passed.into()]);
    }
    Ok((table, ok))
}

/// Data behind the figures and the comparison table.
pub fn figures(p: &Params, which: FigureKind) -> Result<Table, CliError> {
    match which {
        FigureKind::Fig1Left => fig1(p, "fig1_left", Table1State::Ghz),
        FigureKind::Fig1Right => fig1(p, "fig1_right", Table1State::PeOats),
        FigureKind::Fig2 => fig2(p),
        FigureKind::Table1 => table1(p, "figures table1"),
    }
}

/// Precision against `N` for `n = 1, 2` and without noise, for the
/// chosen input and the state-independent bound, plus the precision
/// against run time at `N = 50`.
fn fig1(p: &Params, name: &str, state: Table1State) -> Result<Table, CliError> {
    let total = p.total_time()?;
    let ns = p.grid(&p.probes, "N", log_spaced(1e2, 1e4, 9))?;
    let ts = p.grid(&p.t, "t", log_spaced(1e-4, 1e0, 41))?;
    let chi0 = positive("chi0", p.chi0.unwrap_or(1.0))?;
    let wc = positive("omega-c", p.omega_c.unwrap_or(1.0))?;
    let input = if state == Table1State::Ghz { "ghz" } else { "pe_oats" };
    let mut table = Table::new(&format!("figures {name}"), &["series", "N", "t", "delta_b", "fitted_slope"]);
    table.param("T", total);
    table.param("N", &ns);
    table.param("t", &ts);
    table.param("chi0", chi0);
    table.param("omega-c", wc);
    table.param("input", input);
    let push_series = |table: &mut Table, label: String, values: Vec<f64>| {
        let slope = power_law_fit(&ns, &values).0;
        for (&n, v) in ns.iter().zip(values) {
            table.push(vec![label.clone().into(), n.into(), Cell::Empty, v.into(), slope.into()]);
        }
    };
    for n_exp in [1u32, 2] {
        let law = DecayLaw::from_chi0(n_exp, chi0, wc).map_err(lib)?;
        let mut bound = Vec::new();
        let mut series = Vec::new();
        for &n in &ns {
            let q = BoundQuery::new(n, total, law).map_err(lib)?;
            bound.push(optimal_time_and_bound(&q, None).map_err(lib)?.precision_variance().sqrt());
            series.push(precision_for(state, n, total, &law)?);
        }
        push_series(&mut table, format!("bound_n{n_exp}"), bound);
        push_series(&mut table, format!("{input}_n{n_exp}"), series);
    }
    let noiseless = ns
        .iter()
        .map(|&n| table1_precision(state, NoiseRegime::Noiseless, n, total, OptimizationMethod::Numeric).map(|v| v / total))
        .collect::<Result<Vec<_>, _>>()
        .map_err(lib)?;
    push_series(&mut table, format!("{input}_noiseless"), noiseless);
    // Inset: precision against run time at N = 50.
    let n50 = 50.0;
    for n_exp in [1u32, 2] {
        let law = DecayLaw::from_chi0(n_exp, chi0, wc).map_err(lib)?;
        for &t in &ts {
            let f = run_information(state, n50, total, &law, t)?;
            table.push(vec![format!("inset_{input}_n{n_exp}").into(), n50.into(), t.into(), (1.0 / f).sqrt().into(), Cell::Empty]);
        }
    }
    Ok(table)
}

/// Optimized `Delta b` of the chosen input.
fn precision_for(state: Table1State, n: f64, total: f64, law: &DecayLaw) -> Result<f64, CliError> {
    let f = match state.twist(n) {
        None => numeric_ghz_optimum(&BoundQuery::new(n, total, *law).map_err(lib)?).f_total,
        Some((mu, beta)) => oats_optimal(n, total, law, mu, beta, HpMargins::default()).map_err(lib)?.f_total,
    };
    Ok((1.0 / f).sqrt())
}

/// Total information `T/t F(t)` of the chosen input at run time `t`.
fn run_information(state: Table1State, n: f64, total: f64, law: &DecayLaw, t: f64) -> Result<f64, CliError> {
    let chi = law.chi(t);
    Ok(match state.twist(n) {
        None => dephasing::bounds::ghz_total_qfi(n, total, chi, t),
        Some((mu, beta)) => {
            let input = dephasing::phase_space::oats_input(n, mu, beta).map_err(lib)?;
            let (delta, _) = dephasing::phase_space::oats_params(mu, beta, input.j).map_err(lib)?;
            let gain = input.j * delta;
            total * gain * t / (1.0 + gain * chi)
        }
    })
}

/// `K_Q'` against the pulse number and the resulting precision floor.
fn fig2(p: &Params) -> Result<Table, CliError> {
    let alpha = positive("alpha", p.alpha.unwrap_or(1.0))?;
    let wc = positive("omega-c", p.omega_c.unwrap_or(1.0))?;
    let total = p.total_time()?;
    let ss = p.grid(&p.s, "s", vec![0.0, 1.0, 2.0])?;
    let qs = p.grid(&p.segments, "Q", (0..=64).map(f64::from).collect())?;
    let mut table = Table::new("figures fig2", &["s", "Q", "q_prime", "K", "delta_b2_times_N", "growth_exponent"]);
    table.param("alpha", alpha);
    table.param("omega-c", wc);
    table.param("T", total);
    table.param("s", &ss);
    table.param("Q", &qs);
    for &s in &ss {
        // Pulse numbers 8 to 64, i.e. 9 to 65 segments.
        let growth = kq_growth_exponent(s, alpha, 9, 65).map_err(lib)?;
        for &qf in &qs {
            if qf < 0.0 || qf.fract() != 0.0 {
                return Err(CliError::Input(format!("--Q values are pulse numbers (non-negative integers), got {qf}")));
            }
            let q_prime = qf as usize + 1;
            let k = kq_hankel_gaussian(q_prime, s, alpha).map_err(lib)?;
            let floor = controlled_nogo_bound(1.0, total, NogoRegime::Colored { k, omega_c: wc }).map_err(lib)?.precision;
            table.push(vec![s.into(), (qf as usize).into(), q_prime.into(), k.into(), floor.into(), growth.into()]);
        }
    }
    Ok(table)
}

/// Runs the validation checks; the table lists every measurement.
pub fn validate(p: &Params, args: &ValidateArgs) -> Result<(Table, serde_json::Value, bool), CliError> {
    let names: Vec<&str> = if !args.checks.is_empty() {
        for c in &args.checks {
            if !CHECK_NAMES.contains(&c.as_str()) {
                return Err(CliError::Input(format!("unknown check {c:?}; known: {}", CHECK_NAMES.join(", "))));
            }
        }
        args.checks.iter().map(String::as_str).collect()
    } else if args.all {
        CHECK_NAMES.to_vec()
    } else {
        INVARIANT_CHECKS.to_vec()
    };
    if let Some(c) = &args.corrupt {
        if !CHECK_NAMES.contains(&c.as_str()) {
            return Err(CliError::Input(format!("unknown check {c:?} for --corrupt")));
        }
    }
    let opts = ValidationOptions { quick: p.quick, seed: p.seed.unwrap_or(DEFAULT_SEED), corrupt: args.corrupt.clone() };
    let mut table = Table::new("validate", &["check", "label", "measured", "tolerance", "passed"]);
    table.param("checks", &names);
    table.param("quick", opts.quick);
    table.param("seed", opts.seed);
    table.param("corrupt", &opts.corrupt);
    let mut checks = Vec::new();
    for name in &names {
        let check = run_check(name, &opts).map_err(lib)?;
        eprintln!("{} {} ({:.1} s)", if check.passed { "PASS" } else { "FAIL" }, check.name, check.seconds);
        for m in &check.measurements {
            table.push(vec![check.name.clone().into(), m.label.clone().into(), m.measured.into(), m.tolerance.into(), m.passed.into()]);
        }
        checks.push(check);
    }
    let passed = checks.iter().all(|c| c.passed);
    let failing: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let report = serde_json::json!({
        "config": table.header(),
        "passed": passed,
        "failing": failing,
        "checks": checks.iter().map(|c| serde_json::json!({
            "name": c.name,
            "passed": c.passed,
            "detail": c.detail,
            "measurements": c.measurements.iter().map(|m| serde_json::json!({
                "label": m.label,
                "measured": if m.measured.is_finite() { serde_json::json!(m.measured) } else { serde_json::json!(m.measured.to_string()) },
                "tolerance": m.tolerance,
                "passed": m.passed,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok((table, report, passed))
}

