use std::f64::consts::PI;

use marchenko::morse::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn model() -> MorseModel {
    MorseModel::default()
}

/// Φ(p, c; y) summed directly, then S = e^{−y/2}Φ(−a + c + 1/2, 2c + 1; y).
/// Also returns e^{−y/2}Σ|terms|, the scale of the rounding error of either sum.
fn s_via_confluent(a: f64, c: Complex64, y: f64) -> (Complex64, f64) {
    let p = -a + c + 0.5;
    let cc = 2.0 * c + 1.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut scale = 1.0;
    for n in 0..2000 {
        let nf = n as f64;
        term *= (p + nf) / (cc + nf) * y / (nf + 1.0);
        sum += term;
        scale += term.norm();
        if term.norm() < 1e-18 * sum.norm() && nf > y {
            break;
        }
    }
    let e = (-0.5 * y).exp();
    (sum * e, scale * e)
}

/// Σ|Bₙ| of the three-term recurrence, the rounding scale of `s_function`.
fn recurrence_scale(a: f64, c: Complex64, y: f64) -> f64 {
    let (mut b0, mut b1) = (Complex64::new(1.0, 0.0), -a * y / (2.0 * c + 1.0));
    let mut total = 1.0 + b1.norm();
    for n in 2..5000 {
        let nf = n as f64;
        let b2 = y / (nf * (2.0 * c + nf)) * (-a * b1 + 0.25 * y * b0);
        total += b2.norm();
        b0 = b1;
        b1 = b2;
        if nf > y && b1.norm() + b0.norm() < 1e-20 * total {
            break;
        }
    }
    total
}

#[test]
fn potential_values() {
    let m = model();
    assert!((morse_eval(&m, m.re) + 1.0).abs() < 1e-15);
    assert!(morse_eval(&m, m.re - 2f64.ln() / m.alpha).abs() < 1e-15);
    assert!(morse_eval(&m, 50.0).abs() < 1e-12);
}

#[test]
fn levels_of_default_and_ne2() {
    let lv = bound_levels(&model());
    assert_eq!(lv.len(), 1);
    assert_eq!(lv[0].n, 0);
    assert!((lv[0].energy + 4.0 / 9.0).abs() < 1e-15);
    assert!((lv[0].gamma - 2.0 / 3.0).abs() < 1e-15);
    let ne2 = MorseModel::new(1.0, 0.4879, 2.5, 1.0).unwrap();
    let l = bound_levels(&ne2);
    assert!((l[0].energy + 0.5716).abs() < 1e-4);
    // the quantization formula also admits n = 1 for a = 1/0.4879
    assert_eq!(l.len(), 2);
    assert!((l[1].energy + 0.0719).abs() < 1e-4);
    let shallow = MorseModel::new(1.0, 2.5, 2.5, 1.0).unwrap();
    assert!(bound_levels(&shallow).is_empty());
    assert!(MorseModel::new(-1.0, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn quantization_formula_is_exact() {
    for &alpha in &[0.1, 0.2, 0.33, 0.5] {
        let m = MorseModel::new(2.0, alpha, 1.5, 1.3).unwrap();
        let a = m.a();
        for l in m.levels() {
            let q = (l.n as f64 + 0.5) / a;
            assert!(q < 1.0);
            assert_eq!(l.energy, -m.d * (1.0 - q) * (1.0 - q));
            assert_eq!(l.gamma, (-l.energy / m.c).sqrt());
        }
        assert!((m.levels().len() as f64 + 0.5) / a >= 1.0);
    }
}

#[test]
fn bound_wavefunction_shape() {
    let m = model();
    // y(r) = 2 at r = Re − ln(2/2a)/α
    let r2 = m.re - (2.0 / (2.0 * m.a())).ln() / m.alpha;
    assert!((bound_wavefunction(&m, r2) - 2.0 * (-1f64).exp()).abs() < 1e-12);
    assert!(bound_wavefunction(&m, 200.0).abs() < 1e-30);
    let samples: Vec<f64> = (0..2000).map(|i| bound_wavefunction(&m, 0.01 * i as f64)).collect();
    let imax = samples.iter().enumerate().fold(0, |b, (i, &v)| if v > samples[b] { i } else { b });
    assert!((0.01 * imax as f64 - r2).abs() < 0.011);
}

#[test]
fn norming_constant_values() {
    let m = model();
    let nc = norming_constant(&m).unwrap();
    assert!((nc.s0_sq_exact - 6.0 * (10.0f64 / 3.0).exp()).abs() < 1e-12);
    assert!((nc.s0_sq_exact - 168.18975).abs() < 1e-5);
    let y0 = m.y0();
    let analytic = nc.s0_sq_exact / (1.0 - (1.0 + y0) * (-y0).exp());
    assert!((nc.s0_sq_integral - analytic).abs() / analytic < 1e-12);
    // the correction is about 2e-6 relative for the default well
    let rel = (nc.s0_sq_integral - nc.s0_sq_exact) / nc.s0_sq_exact;
    assert!(rel > 1e-6 && rel < 3e-6, "{rel}");
    let deep = MorseModel::new(1.0, 2.0 / 3.0, 6.0, 1.0).unwrap();
    let d = norming_constant(&deep).unwrap();
    assert!((d.s0_sq_integral - d.s0_sq_exact).abs() / d.s0_sq_exact < 1e-15);
}

#[test]
fn s_series_against_confluent_oracle() {
    let m = model();
    let opts = SeriesOptions::default();
    for &k in &[1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
        for &y in &[0.0, 0.5, 3.0, m.y0()] {
            let s = s_series(&m, k, y, &opts).unwrap();
            let c = Complex64::new(0.0, k / m.alpha);
            let (o, scale) = s_via_confluent(m.a(), c, y);
            // both sums carry rounding of order ε·Σ|terms|
            let tol = 10.0 * opts.tolerance * o.norm().max(scale).max(recurrence_scale(m.a(), c, y));
            assert!((s.value - o).norm() < tol, "k = {k}, y = {y}: {:e}", (s.value - o).norm());
            assert!((s.magnitude - s.value.norm()).abs() == 0.0);
            assert!(s.argument > -PI && s.argument <= PI);
        }
    }
    let s = s_series(&m, 1.0, 0.0, &opts).unwrap();
    assert_eq!(s.value, Complex64::new(1.0, 0.0));
    let near = s_series(&m, 1.0, 1e-10, &opts).unwrap();
    assert!((near.magnitude - 1.0).abs() < 1e-9);
}

#[test]
fn s_series_reports_nonconvergence_when_capped() {
    let m = model();
    let opts = SeriesOptions {
        tolerance: 1e-14,
        max_terms: 5,
    };
    assert!(matches!(s_series(&m, 1.0, m.y0(), &opts), Err(marchenko::Error::NonConvergence { .. })));
}

#[test]
fn low_energy_form() {
    let m = model();
    let opts = PhaseOptions::default();
    let y0 = m.y0();
    for &beta in &[1e-8, 1e-7] {
        let k = beta * m.alpha;
        let le = s_series_low_energy(&m, k, y0, &opts).unwrap();
        let full = s_series(&m, k, y0, &opts.series).unwrap();
        // the full series cancels about six digits at y0 (terms up to 1e4, |S| ~ 5e-3)
        let scale = recurrence_scale(m.a(), Complex64::new(0.0, beta), y0);
        assert!((le.magnitude - full.magnitude).abs() < 1e-14 * scale, "{scale}");
        assert!((le.argument - full.argument).abs() < 1e-12, "beta = {beta}");
        // real part is Φ₀ = 1 − y for a = 3/2; |S| also carries β²Φ₁²
        let closed = (-0.5 * y0).exp() * (1.0 - y0);
        assert!((le.value.re - closed).abs() < 1e-12 * closed.abs());
    }
    // closed form for a = 3/2: e^{−y/2}{1 − y + iβy[3 − Σ m!/((m+2)!)² y^{m+1}]}
    let beta = 3e-7;
    for &y in &[0.3, 2.0, y0] {
        let mut s = 0.0;
        let mut fact_m = 1.0;
        for mm in 0..80 {
            let mf = mm as f64;
            if mm > 0 {
                fact_m *= mf;
            }
            let fact_m2 = fact_m * (mf + 1.0) * (mf + 2.0);
            s += fact_m / (fact_m2 * fact_m2) * y.powi(mm + 1);
        }
        let want = Complex64::new(1.0 - y, beta * y * (3.0 - s)) * (-0.5 * y).exp();
        let got = s_series_low_energy(&m, beta * m.alpha, y, &opts).unwrap().value;
        assert!((got - want).norm() < 1e-13 * want.norm(), "y = {y}: {got} vs {want}");
    }
    let one = s_series_low_energy(&m, 1e-9, 0.0, &opts).unwrap();
    assert_eq!(one.value, Complex64::new(1.0, 0.0));
    assert!(s_series_low_energy(&m, 1e-3, y0, &opts).is_err());
}

#[test]
fn low_energy_argument_is_linear_in_beta() {
    let m = model();
    let opts = PhaseOptions {
        low_energy_beta: 1e-5,
        ..PhaseOptions::default()
    };
    let ratios: Vec<f64> = [1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&beta| {
            let s = s_series_low_energy(&m, beta * m.alpha, m.y0(), &opts).unwrap();
            // arg near π: distance from the real axis scales with β
            principal(s.argument - PI) / beta
        })
        .collect();
    assert!((ratios[0] - ratios[2]).abs() < 1e-4 * ratios[2].abs());
    assert!((ratios[1] - ratios[2]).abs() < 1e-6 * ratios[2].abs());
}

#[test]
fn phase_limits_and_high_k() {
    let m = model();
    let opts = PhaseOptions::default();
    let d = phase_shift_series(&m, 100.0, &opts).unwrap();
    let a1 = m.a1();
    assert!((a1 + 0.5 * ((10.0f64 / 3.0).exp() * 0.75 - 3.0 * (5.0f64 / 3.0).exp())).abs() < 1e-12);
    assert!(a1 < 0.0);
    assert!(((d - a1 / 100.0) / d).abs() < 1e-3);
    let small = phase_shift_series(&m, 1e-9, &opts).unwrap();
    assert!((small.abs() - PI).abs() < 1e-5);
}

#[test]
fn a1_matches_quadrature_of_potential() {
    let m = model();
    let rule = marchenko::quadrature::QuadratureRule::composite(64, &marchenko::quadrature::linear_panels(0.0, 80.0, 40)).unwrap();
    let integral = rule.integrate(|r| m.potential(r));
    assert!((m.a1() + integral / (2.0 * m.c)).abs() < 1e-12);
}

#[test]
fn phase_table_levinson_and_determinism() {
    let m = model();
    let opts = PhaseOptions::default();
    let grid = log_grid(1e-9, 100.0, 64);
    let t = phase_table(&m, &grid, "auto", &opts).unwrap();
    assert_eq!(t.entries.len(), grid.len());
    assert!(t.entries.windows(2).all(|w| (w[1].delta - w[0].delta).abs() < PI / 2.0));
    assert!((t.entries[0].delta - PI).abs() < 1e-5);
    assert!(t.entries.last().unwrap().delta.abs() < 0.03);
    // endpoints carried to k → 0 and k → ∞
    let a0 = scattering_length_from_table(&t, SCATTERING_LENGTH_WINDOW).unwrap().a0;
    let hk = high_k_coefficients(&m, HIGH_K_WINDOW, &opts).unwrap();
    assert!(t.levinson_residual_extrapolated(a0, &hk) < 1e-9);
    // raw residual is dominated by δ(100) ≈ a₁/100
    assert!((t.levinson_residual - (t.entries.last().unwrap().delta.abs() + (t.entries[0].delta - PI))).abs() < 1e-12);
    let auto = phase_methods().get("auto").unwrap();
    let mut rev = grid.clone();
    rev.reverse();
    let mut again: Vec<f64> = rev.iter().map(|&k| auto.phase(&m, k, &opts).unwrap().delta).collect();
    again.reverse();
    for (e, d) in t.entries.iter().zip(&again) {
        assert_eq!(principal(e.delta), *d);
    }
    let t2 = phase_table(&m, &grid, "auto", &opts).unwrap();
    assert_eq!(t, t2);
    assert!(t.entries.iter().any(|e| e.method == PhaseMethodKind::LowEnergy));
    assert!(t.entries.iter().any(|e| e.method == PhaseMethodKind::Series));
}

#[test]
fn phase_table_rejects_bad_grids() {
    let m = model();
    let opts = PhaseOptions::default();
    assert!(phase_table(&m, &[1.0, 0.5], "auto", &opts).is_err());
    assert!(phase_table(&m, &[0.0, 0.5], "auto", &opts).is_err());
    assert!(matches!(phase_table(&m, &[1.0], "nope", &opts), Err(marchenko::Error::UnknownStrategy { .. })));
    // δ drops by about 3.7 rad between these two points
    assert!(matches!(
        phase_table(&m, &[1e-3, 1.0], "auto", &opts),
        Err(marchenko::Error::BranchAmbiguity { .. })
    ));
}

#[test]
fn scattering_length_default() {
    let m = model();
    let opts = PhaseOptions::default();
    let fit = scattering_length(&m, SCATTERING_LENGTH_WINDOW, &opts).unwrap();
    assert!(((fit.a0 + 4312.06224) / 4312.06224).abs() < 1e-5, "{}", fit.a0);
    let wf = scattering_length_from_wavefunction(&m, 1e-9, 100.0, 300.0, &opts).unwrap();
    assert!(((wf - fit.a0) / fit.a0).abs() < 1e-5, "{wf} vs {}", fit.a0);
    let deep = MorseModel::new(1.0, 1.2, 2.5, 1.0).unwrap();
    assert_eq!(deep.bound_count(), 1);
    let fd = scattering_length(&deep, SCATTERING_LENGTH_WINDOW, &opts).unwrap();
    assert!(fd.a0.abs() > 0.5 && fd.a0.abs() < 100.0, "{}", fd.a0);
}

#[test]
fn high_k_fit_quality() {
    let m = model();
    let hk = high_k_coefficients(&m, HIGH_K_WINDOW, &PhaseOptions::default()).unwrap();
    assert!(hk.max_residual < 1e-8);
    assert!((hk.a1 + 2.570_124_259_742_257).abs() < 1e-12);
}

#[test]
fn wavefunction_properties() {
    let m = model();
    let opts = PhaseOptions::default();
    for &k in &[1e-9, 1e-4, 0.1, 1.0, 7.0, 40.0] {
        assert!(scattering_wavefunction(&m, k, 0.0, &opts).unwrap().abs() < 1e-10);
    }
    for &k in &[0.5, 2.0, 10.0] {
        let delta = phase_shift_series(&m, k, &opts).unwrap();
        for &r in &[60.0, 80.0] {
            let psi = scattering_wavefunction(&m, k, r, &opts).unwrap();
            assert!((psi - (k * r + delta).sin()).abs() < 1e-8);
        }
    }
    // linear in r at very small k, zero at r = a₀ (< 0, so checked through the slope)
    let k = 1e-9;
    let p: Vec<f64> = [50.0, 100.0, 150.0]
        .iter()
        .map(|&r| scattering_wavefunction(&m, k, r, &opts).unwrap())
        .collect();
    assert!(((p[2] - p[1]) - (p[1] - p[0])).abs() < 1e-6 * (p[1] - p[0]).abs());
}

#[test]
fn wavefunction_solves_the_radial_equation() {
    let m = model();
    let opts = PhaseOptions::default();
    let h = 1e-3;
    for &k in &[0.3, 1.5] {
        for &r in &[0.7, 2.0, 4.0] {
            let f = |x: f64| scattering_wavefunction(&m, k, x, &opts).unwrap();
            let d2 = (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h)) / (12.0 * h * h);
            let lhs = -m.c * d2 + m.potential(r) * f(r);
            assert!((lhs - m.c * k * k * f(r)).abs() < 1e-6, "k = {k}, r = {r}: {lhs} vs {}", k * k * f(r));
        }
    }
}

#[test]
fn asymptotic_route_in_its_valid_region() {
    // deep well: y₀ ≈ 60, the ratio series converge far enough for k ≤ 2
    let m = MorseModel::new(1.0, 2.0 / 3.0, 4.5, 1.0).unwrap();
    let opts = PhaseOptions::default();
    for &k in &[0.5, 1.0, 1.5, 2.0] {
        let s = phase_shift_series(&m, k, &opts).unwrap();
        let a = phase_shift_asymptotic(&m, k, &opts).unwrap();
        assert!(principal(s - a).abs() < 1e-8, "k = {k}: {s} vs {a}");
    }
}

#[test]
fn asymptotic_route_needs_half_integer_a() {
    let m = MorseModel::new(1.0, 0.5, 2.5, 1.0).unwrap();
    assert!(matches!(asymptotic_phase_detailed(&m, 1.0), Err(marchenko::Error::Domain(_))));
}

#[test]
fn asymptotic_route_on_default_well_reports_its_error() {
    let m = model();
    let opts = PhaseOptions::default();
    let d = asymptotic_phase_detailed(&m, 0.5).unwrap();
    let s = phase_shift_series(&m, 0.5, &opts).unwrap();
    let err = principal(s - d.delta).abs();
    assert!(err < 1e-6, "{err}");
    assert!(d.error_estimate > 1e-9);
    assert!(err < 10.0 * d.error_estimate);
    // beyond β² ≈ y₀ the ratio series never start to converge
    assert!(phase_shift_asymptotic(&m, 20.0, &opts).is_err());
}

#[test]
fn half_line_spectrum_differs_slightly_from_closed_form() {
    let m = model();
    let closed = bound_spectra().get("closed_form").unwrap().states(&m).unwrap();
    let exact = bound_spectra().get("half_line").unwrap().states(&m).unwrap();
    assert_eq!(closed.len(), 1);
    assert_eq!(exact.len(), 1);
    assert!((exact[0].gamma - closed[0].gamma).abs() < 1e-3);
    assert!(exact[0].gamma < closed[0].gamma);
    let s = s_function(m.a(), Complex64::new(exact[0].gamma / m.alpha, 0.0), m.y0(), &SeriesOptions::default()).unwrap();
    assert!(s.value.norm() < 1e-9);
    assert!((exact[0].s_sq - closed[0].s_sq).abs() / closed[0].s_sq < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn series_matches_confluent_everywhere(k in 1e-3f64..60.0, frac in 0.0f64..1.0) {
        let m = model();
        let y = frac * m.y0();
        let s = s_series(&m, k, y, &SeriesOptions::default()).unwrap();
        let c = Complex64::new(0.0, k / m.alpha);
        let (o, scale) = s_via_confluent(m.a(), c, y);
        prop_assert!((s.value - o).norm() < 1e-13 * o.norm().max(scale).max(recurrence_scale(m.a(), c, y)));
    }

    #[test]
    fn regular_at_origin(k in 1e-6f64..80.0) {
        let v = scattering_wavefunction(&model(), k, 0.0, &PhaseOptions::default()).unwrap();
        prop_assert!(v.abs() < 1e-10);
    }
}
