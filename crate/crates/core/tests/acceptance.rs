//! Acceptance report: one PASS/FAIL line per criterion with the measured
//! value next to its tolerance. A FAIL is a finding, not a crash, so the
//! binary exits 0 unless the pipeline itself errors.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use marchenko::inversion::*;
use marchenko::kernel::*;
use marchenko::morse::*;
use marchenko::quadrature::*;
use marchenko::specfun::{theta, theta_in, ThetaRegime};

const B_REFERENCE: f64 = 7.252681534782e-4;
const C_REFERENCE: f64 = 2.315574387346e-4;
const A0_REFERENCE: f64 = -4312.06224;

struct Report {
    passed: usize,
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, id);
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn info(text: String) {
    println!("     .. {text}");
}

fn max_abs_diff(a: &ReconstructionResult, b: &ReconstructionResult, lo: f64, hi: f64) -> f64 {
    a.r_grid
        .iter()
        .zip(a.v.iter().zip(&b.v))
        .filter(|(&r, _)| r >= lo - 1e-12 && r <= hi + 1e-12)
        .map(|(_, (p, q))| (p - q).abs())
        .fold(0.0, f64::max)
}

fn levinson(rep: &mut Report, m: &MorseModel, opts: &PhaseOptions) {
    let t0 = Instant::now();
    let grid = log_grid(1e-9, 100.0, 64);
    let table = phase_table(m, &grid, "auto", opts).expect("phase table");
    let secs = t0.elapsed().as_secs_f64();
    let first = table.entries[0].delta;
    let last = table.entries[table.entries.len() - 1].delta;
    let diff = first - last;
    let err = (diff - PI).abs();
    rep.line(
        1,
        "Levinson",
        err < 1e-6 && secs < 30.0,
        format!(
            "d(1e-9) - d(100) - pi = {:.3e} (tol 1e-6), table of {} k in {secs:.2} s (limit 30 s)",
            diff - PI,
            grid.len()
        ),
    );
    let a0 = scattering_length_from_table(&table, SCATTERING_LENGTH_WINDOW).expect("a0").a0;
    let hk = high_k_coefficients(m, HIGH_K_WINDOW, opts).expect("high-k");
    info(format!(
        "d(100) = {last:.6e} ~ a1/100; with both ends carried to their limits the residual is {:.2e}",
        table.levinson_residual_extrapolated(a0, &hk)
    ));
}

fn scattering_len(rep: &mut Report, m: &MorseModel, opts: &PhaseOptions) {
    let fit = scattering_length(m, SCATTERING_LENGTH_WINDOW, opts).expect("scattering length");
    let rel = ((fit.a0 - A0_REFERENCE) / A0_REFERENCE).abs();
    rep.line(
        2,
        "scattering length",
        rel < 1e-5,
        format!("a0 = {:.6} vs {A0_REFERENCE}, rel err {rel:.2e} (tol 1e-5)", fit.a0),
    );
}

fn route_agreement(rep: &mut Report, m: &MorseModel, opts: &PhaseOptions) {
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut first_err = None;
    let mut agree_to = 0.0f64;
    for i in 0..50 {
        let k = 0.5 * (200.0f64).powf(i as f64 / 49.0);
        let s = phase_shift_series(m, k, opts).expect("series");
        match asymptotic_phase_detailed(m, k) {
            Ok(d) => {
                let e = principal(s - d.delta).abs();
                worst = worst.max(e);
                if e >= 1e-8 {
                    failures += 1;
                } else {
                    agree_to = agree_to.max(k);
                }
            }
            Err(e) => {
                failures += 1;
                first_err.get_or_insert((k, e.to_string()));
            }
        }
    }
    rep.line(
        3,
        "series vs asymptotic route",
        failures == 0,
        format!("{failures}/50 k in [0.5, 100] outside 1e-8 or unevaluable; worst evaluated gap {worst:.3e}"),
    );
    if let Some((k, e)) = first_err {
        info(format!("first unevaluable k = {k:.3}: {e}"));
    }
    info(format!(
        "the ratio series of the asymptotic route only converge while beta^2 stays well below y0 = {:.2}",
        m.y0()
    ));
}

fn theta_checks(rep: &mut Report) {
    let small = (theta_in(ThetaRegime::Small, 0.1).unwrap().value - theta_in(ThetaRegime::Mid, 0.1).unwrap().value).abs();
    let large = (theta_in(ThetaRegime::Mid, 20.0).unwrap().value - theta_in(ThetaRegime::Large, 20.0).unwrap().value).abs();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/theta_oracle.txt");
    let text = std::fs::read_to_string(path).expect("theta oracle");
    let mut rows = 0;
    let mut worst = 0.0f64;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        worst = worst.max((theta(v[0]).unwrap().value - v[1]).abs());
        rows += 1;
    }
    let ok = small < 1e-9 && large < 1e-9 && worst < 1e-9 && rows == 20;
    rep.line(
        4,
        "Riemann-Siegel theta",
        ok,
        format!("branch gap {small:.1e} at 0.1, {large:.1e} at 20; oracle max err {worst:.1e} over {rows} values (tol 1e-9)"),
    );
}

fn tails(rep: &mut Report, kernel: &KernelRep, m: &MorseModel) {
    // the stored kernel is the tail itself past x = 30, so compare the fit
    // with the transform evaluated directly
    let direct = PhaseTransform::from_model(m, &KernelOptions::default()).expect("transform");
    let t = kernel.scattering().tail;
    let mut two_exp = 0.0f64;
    let mut with_pole = 0.0f64;
    for i in 0..=60 {
        let x = 30.0 + 0.5 * i as f64;
        let v = direct.eval(x).expect("direct transform");
        let (f, g) = (v.f, v.g);
        let (tf, tg) = t.two_exponential(x);
        two_exp = two_exp.max((f - tf).abs()).max((g - tg).abs());
        with_pole = with_pole.max((f - t.f(x)).abs()).max((g - t.g(x)).abs());
    }
    let rb = ((t.b - B_REFERENCE) / B_REFERENCE).abs();
    let rc = ((t.c - C_REFERENCE) / C_REFERENCE).abs();
    let ok = two_exp < 1e-9 && rb < 0.01 && rc < 0.01;
    rep.line(
        5,
        "kernel tails",
        ok,
        format!("two-exponential tail vs direct transform, max gap on [30, 60] {two_exp:.3e} (tol 1e-9); b rel err {rb:.1e}, c rel err {rc:.1e} (tol 1e-2)"),
    );
    info(format!("b = {:.10e}, c = {:.10e}; c ~ 1/|a0| = {:.10e}", t.b, t.c, 1.0 / A0_REFERENCE.abs()));
    info(format!(
        "the gap is the bound-state double pole (d + e x) e^(-{:.4} x), d = {:.4} ~ -(pi/4) s0^2 = {:.4}, e = {:.4}; with it the max gap is {with_pole:.2e}",
        t.bound_rate,
        t.d,
        -PI / 4.0 * 6.0 * (10.0f64 / 3.0).exp(),
        t.e
    ));
}

fn fixture(rep: &mut Report, kernel: &KernelRep) {
    let fix = RationalFitFixture::bundled().expect("fixture");
    let devs = fixture_deviations(kernel.scattering(), &fix, 200).expect("deviations");
    let worst = devs.iter().map(|d| d.max_abs).fold(0.0, f64::max);
    let bad = devs.iter().filter(|d| d.max_abs >= 5e-6).count();
    rep.line(
        6,
        "rational-fit fixtures",
        bad == 0,
        format!("{bad}/{} ranges above 5e-6, worst {worst:.3e}", devs.len()),
    );
    for d in &devs {
        info(format!("{:?} on [{}, {}]: max {:.3e} at x = {:.4}", d.which, d.lo, d.hi, d.max_abs, d.at));
    }
}

fn round_trip(rep: &mut Report, kernel: &KernelRep, m: &MorseModel, opts: &PhaseOptions) {
    let mut worst = 0.0f64;
    for &k in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let ic = kernel.inverse_check(k).expect("inverse check");
        let d = phase_shift_series(m, k, opts).unwrap();
        worst = worst
            .max((ic.sin_sq_delta - d.sin().powi(2)).abs())
            .max((ic.sin_2delta - (2.0 * d).sin()).abs());
    }
    rep.line(7, "Fourier round trip", worst < 1e-5, format!("max error over 7 k {worst:.3e} (tol 1e-5)"));
}

fn quadrature_props(rep: &mut Report, m: &MorseModel, opts: &PhaseOptions) {
    let mut worst = 0.0f64;
    for &n in &[2usize, 8, 64] {
        let r = gauss_legendre(n, -1.0, 1.0).unwrap();
        for j in (0..2 * n).step_by(2) {
            let want = 2.0 / (j as f64 + 1.0);
            worst = worst.max((r.integrate(|x| x.powi(j as i32)) - want).abs() / want);
        }
    }
    let grid = FilonGrid::new(20.0, 100.0, 1600).unwrap();
    let s2: Vec<f64> = grid.nodes().iter().map(|&k| (2.0 * phase_shift_series(m, k, opts).unwrap()).sin()).collect();
    let c2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&k| 2.0 * phase_shift_series(m, k, opts).unwrap().sin().powi(2))
        .collect();
    let oracle = QuadratureRule::composite(24, &linear_panels(20.0, 100.0, 640)).unwrap();
    let os: Vec<f64> = oracle.nodes.iter().map(|&k| phase_shift_series(m, k, opts).unwrap()).collect();
    let mut filon = 0.0f64;
    for &x in &[20.0, 25.0, 30.0, 40.0, 60.0, 100.0] {
        let fs = grid.integrate(&s2, x, Oscillator::Sin);
        let fc = grid.integrate(&c2, x, Oscillator::Cos);
        let (mut rs, mut rc) = (0.0, 0.0);
        for ((&k, &w), &d) in oracle.nodes.iter().zip(&oracle.weights).zip(&os) {
            rs += w * (2.0 * d).sin() * (k * x).sin();
            rc += w * 2.0 * d.sin().powi(2) * (k * x).cos();
        }
        filon = filon.max((fs - rs).abs()).max((fc - rc).abs());
    }
    rep.line(
        11,
        "quadrature",
        worst < 1e-14 && filon < 1e-10,
        format!("GL exactness max rel err {worst:.1e} (tol 1e-14); Filon vs oversampled oracle {filon:.1e} (tol 1e-10)"),
    );
}

fn main() {
    let start = Instant::now();
    let m = MorseModel::default();
    let opts = PhaseOptions::default();
    let mut rep = Report { passed: 0, failed: Vec::new() };

    levinson(&mut rep, &m, &opts);
    scattering_len(&mut rep, &m, &opts);
    route_agreement(&mut rep, &m, &opts);
    theta_checks(&mut rep);

    let t0 = Instant::now();
    let kernel = KernelRep::build(&m, &KernelOptions::default()).expect("kernel build");
    info(format!("kernel built in {:.1} s", t0.elapsed().as_secs_f64()));
    tails(&mut rep, &kernel, &m);
    fixture(&mut rep, &kernel);
    round_trip(&mut rep, &kernel, &m, &opts);

    let rg = RGrid::default();
    let spec = NystromSpec::default();
    let grid = NystromGrid::new(spec).unwrap();
    let audited = ReconstructOptions::default();
    let t0 = Instant::now();
    let base = reconstruct(&kernel, &rg, &grid, &audited).expect("default reconstruction");
    let dev = base.max_deviation(&m, 0.5, 10.0);
    let v_re = base.v_near(m.re);
    rep.line(
        8,
        "end-to-end reconstruction",
        dev < 1e-3 * m.d && (v_re + m.d).abs() < 1e-3,
        format!("max |V - Morse| on [0.5, 10] = {dev:.3e} (tol 1e-3 D); V(Re) = {v_re:.6} (tol 1e-3)"),
    );
    let cmax = base.conditions.iter().cloned().fold(0.0, f64::max);
    let rmax = base.residual_report.iter().cloned().fold(0.0, f64::max);
    info(format!(
        "{} radii, {} nodes, in {:.1} s; condition max {cmax:.1}; off-node residual max {rmax:.1e}",
        base.r_grid.len(),
        grid.len(),
        t0.elapsed().as_secs_f64()
    ));

    let wrong = KernelRep::wrong_sign_experiment(Arc::clone(kernel.scattering()), kernel.bound_terms().to_vec());
    match sign_experiment(&wrong, &rg, &grid, &audited) {
        SignOutcome::Solved { result } => {
            let d = result.max_deviation(&m, 1.0, 5.0);
            rep.line(
                9,
                "sign dispute",
                d > 0.1 * m.d,
                format!("plus sign solves but max |V - Morse| on [1, 5] = {d:.3e} (needs > 0.1 D)"),
            );
        }
        SignOutcome::Failed { error } => rep.line(9, "sign dispute", true, format!("plus sign breaks the inversion: {error}")),
    }

    let quick = ReconstructOptions {
        residual_tolerance: None,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, s) in [
        ("R 15 -> 30", NystromSpec { r_split: 30.0, ..spec }),
        ("Delta 1e4 -> 2e4", NystromSpec { delta: 20_000.0, ..spec }),
        ("panels 2 -> 4", NystromSpec { finite_panels: 4, ..spec }),
        ("R 15 -> 20", NystromSpec { r_split: 20.0, ..spec }),
    ] {
        let r = reconstruct(&kernel, &rg, &NystromGrid::new(s).unwrap(), &quick).expect("variant");
        let d = max_abs_diff(&base, &r, 0.5, 10.0);
        worst = worst.max(d);
        parts.push(format!("{name}: {d:.1e}"));
    }
    rep.line(
        10,
        "discretization robustness",
        worst < 1e-4 * m.d,
        format!("max pointwise change on [0.5, 10] {worst:.2e} (tol 1e-4 D)"),
    );
    info(parts.join("; "));

    quadrature_props(&mut rep, &m, &opts);

    let theo = kernel.bound_terms()[0].s_sq;
    let sweep = [0.0, 100.0, theo];
    let family = isospectral_family(&kernel, &sweep[..2], &rg, &grid, &audited).expect("family");
    let members: Vec<(f64, &ReconstructionResult)> = family.iter().map(|f| (f.s0_sq, &f.result)).chain([(theo, &base)]).collect();
    let mut smooth = true;
    for (s, r) in &members {
        let finite = r.v.iter().all(|v| v.is_finite() && v.abs() < 1e3);
        // h^4 V'''' against the local size of V: a pole or kink shows up as O(1)
        let d4 =
            r.v.windows(5)
                .map(|w| (w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4]).abs() / w[2].abs().max(m.d))
                .fold(0.0, f64::max);
        smooth &= finite && d4 < 1e-3;
        info(format!(
            "s0^2 = {s:.5}: V(0.3) = {:.4}, min V = {:.4}, max scaled fourth difference {d4:.1e} (tol 1e-3)",
            r.v[0],
            r.v.iter().cloned().fold(f64::INFINITY, f64::min)
        ));
    }
    let shared = sweep.iter().all(|&s| {
        let k = kernel.with_s0_sq(s).unwrap();
        let sp = k.scattering();
        Arc::ptr_eq(sp, kernel.scattering())
            && sp.f_samples.iter().zip(&kernel.scattering().f_samples).all(|(a, b)| a.to_bits() == b.to_bits())
            && sp.g_samples.iter().zip(&kernel.scattering().g_samples).all(|(a, b)| a.to_bits() == b.to_bits())
    });
    let removed = family[0].result.max_deviation(&m, 1.0, 5.0);
    rep.line(
        12,
        "isospectral family",
        smooth && shared && removed > 0.05 * m.d,
        format!("smooth {smooth}, shared samples {shared}, s0 = 0 member max |V - Morse| on [1, 5] = {removed:.3} (needs > 0.05 D)"),
    );
    let a_small: Vec<String> = members.iter().map(|(s, r)| format!("{s:.2}: {:.6}", r.a_diag[0])).collect();
    info(format!("A(r, r) at r = 0.3 by s0^2: {}", a_small.join(", ")));

    rep.failed.sort();
    println!(
        "acceptance: {} PASS, {} FAIL {:?}, {:.0} s",
        rep.passed,
        rep.failed.len(),
        rep.failed,
        start.elapsed().as_secs_f64()
    );
}
