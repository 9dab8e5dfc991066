use std::sync::Arc;

use marchenko::inversion::{isospectral_family, reconstruct, NystromGrid, ReconstructionResult};
use marchenko::kernel::{fixture_deviations, BoundTerm, KernelRep, RationalFitFixture};
use marchenko::morse::{
    bound_spectra, high_k_coefficients, log_grid, phase_shift_series, phase_table, scattering_length_from_table, HIGH_K_WINDOW, SCATTERING_LENGTH_WINDOW,
};
use marchenko::specfun::theta;
use marchenko::MorseModel;
use serde_json::json;

use crate::cache;
use crate::config::{PipelineConfig, S0Policy, S0Value};
use crate::error::{CliError, Stage};
use crate::output::{num, Outputs};

pub const B_REFERENCE: f64 = 7.252681534782e-4;
pub const C_REFERENCE: f64 = 2.315574387346e-4;
/// Reconstruction budget: max |V − Morse| over [0.5, 10] below this times D.
pub const MATCH_BUDGET: f64 = 1e-3;
const ROUND_TRIP_K: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

fn echo_config(out: &mut Outputs, cfg: &PipelineConfig) -> Result<(), CliError> {
    out.json("config.json", cfg)
}

fn theoretical_s0_sq(model: &MorseModel) -> Result<f64, CliError> {
    let states = bound_spectra().get("closed_form").and_then(|s| s.states(model)).stage("direct")?;
    match states.as_slice() {
        [s] => Ok(s.s_sq),
        _ => Err(CliError::Numerical {
            stage: "direct",
            source: marchenko::Error::Domain(format!("s0 needs exactly one bound level (model has {})", states.len())),
        }),
    }
}

pub fn direct(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let model = cfg.model().stage("direct")?;
    let opts = cfg.phase_options();
    let grid = log_grid(cfg.k_grid.k_min, cfg.k_grid.k_max, cfg.k_grid.per_decade);
    let table = phase_table(&model, &grid, "auto", &opts).stage("direct")?;
    let states = bound_spectra().get("closed_form").and_then(|s| s.states(&model)).stage("direct")?;
    let mut out = Outputs::default();
    out.csv(
        "phase.csv",
        &["k", "delta", "method"],
        table.entries.iter().map(|e| vec![num(e.k), num(e.delta), e.method.as_str().to_string()]),
    )?;
    let levels: Vec<_> = states
        .iter()
        .map(|s| json!({"n": s.n, "E": s.energy, "gamma": s.gamma, "s_sq": s.s_sq}))
        .collect();
    let mut doc = json!({"bound_count": states.len(), "levels": levels});
    if let Some(s) = states.first() {
        doc["E0"] = json!(s.energy);
        doc["gamma0"] = json!(s.gamma);
        doc["s0_sq"] = json!(s.s_sq);
    }
    out.json("levels.json", &doc)?;

    let fit = scattering_length_from_table(&table, SCATTERING_LENGTH_WINDOW);
    let hk = high_k_coefficients(&model, HIGH_K_WINDOW, &opts).stage("direct")?;
    let mut report = json!({
        "levinson_residual": table.levinson_residual,
        "delta_first": table.entries[0].delta,
        "delta_last": table.entries[table.entries.len() - 1].delta,
        "high_k": {"a1": hk.a1, "a3": hk.a3, "a5": hk.a5, "max_residual": hk.max_residual},
    });
    match fit {
        Ok(f) => {
            report["a0"] = json!(f.a0);
            report["a0_fit_residual"] = json!(f.max_residual);
            report["a0_fit_points"] = json!(f.points);
            report["levinson_residual_extrapolated"] = json!(table.levinson_residual_extrapolated(f.a0, &hk));
        }
        // a grid that skips the low-k window still gets its table
        Err(e) => report["a0_error"] = json!(e.to_string()),
    }
    out.json("scattering_length.json", &report)?;
    echo_config(&mut out, cfg)?;
    Ok(out)
}

pub struct KernelRun {
    pub kernel: KernelRep,
    pub theoretical: f64,
    pub from_cache: bool,
}

/// Kernel with the configured single s₀² (theoretical for a sweep).
pub fn build_kernel(cfg: &PipelineConfig) -> Result<KernelRun, CliError> {
    let model = cfg.model().stage("kernel")?;
    let theoretical = theoretical_s0_sq(&model)?;
    let built = cache::scattering_part(cfg, &model)?;
    let gamma = model.levels()[0].gamma;
    let s0 = match &cfg.s0 {
        S0Policy::Single(v) => v.resolve(theoretical),
        S0Policy::Sweep(_) => theoretical,
    };
    let kernel = KernelRep::new(Arc::new(built.scattering), vec![BoundTerm { s_sq: s0, gamma }]);
    Ok(KernelRun {
        kernel,
        theoretical,
        from_cache: built.from_cache,
    })
}

pub fn kernel(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let model = cfg.model().stage("kernel")?;
    let run = build_kernel(cfg)?;
    let k = &run.kernel;
    let sp = k.scattering();
    let mut xs = sp.sample_grid.clone();
    let mut x = sp.tail_start + 0.5;
    while x <= cfg.kernel.export_end + 1e-12 {
        xs.push(x);
        x += 0.5;
    }
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        rows.push(vec![
            num(x),
            num(sp.f(x).stage("kernel")?),
            num(sp.g(x).stage("kernel")?),
            num(k.scattering_kernel(x).stage("kernel")?),
            num(k.full_kernel(x).stage("kernel")?),
        ]);
    }
    let mut out = Outputs::default();
    out.csv("kernel.csv", &["x", "f", "g", "A_s", "A0"], rows)?;

    let t = sp.tail;
    out.json(
        "tail_fit.json",
        &json!({
            "amplitude": t.amplitude, "rate": t.rate,
            "b": t.b, "c": t.c,
            "b_reference": B_REFERENCE, "c_reference": C_REFERENCE,
            "b_rel_err": (t.b - B_REFERENCE) / B_REFERENCE,
            "c_rel_err": (t.c - C_REFERENCE) / C_REFERENCE,
            "pole_d": t.d, "pole_e": t.e, "pole_rate": t.bound_rate,
            "window": [t.window.0, t.window.1],
            "max_residual": t.max_residual,
        }),
    )?;

    let opts = cfg.phase_options();
    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    for &kk in &ROUND_TRIP_K {
        let ic = k.inverse_check(kk).stage("inverse-check")?;
        let d = phase_shift_series(&model, kk, &opts).stage("inverse-check")?;
        let e1 = (ic.sin_sq_delta - d.sin().powi(2)).abs();
        let e2 = (ic.sin_2delta - (2.0 * d).sin()).abs();
        worst = worst.max(e1).max(e2);
        checks.push(json!({"k": kk, "sin_sq_delta": ic.sin_sq_delta, "sin_2delta": ic.sin_2delta, "err_sin_sq": e1, "err_sin_2delta": e2}));
    }
    out.json("inverse_check.json", &json!({"max_error": worst, "points": checks}))?;

    let fix = RationalFitFixture::bundled().stage("fixtures")?;
    let devs = fixture_deviations(sp, &fix, 200).stage("fixtures")?;
    let ranges: Vec<_> = devs
        .iter()
        .map(|d| json!({"function": format!("{:?}", d.which).to_lowercase(), "lo": d.lo, "hi": d.hi, "max_abs": d.max_abs, "at": d.at}))
        .collect();
    let max_dev = devs.iter().map(|d| d.max_abs).fold(0.0, f64::max);
    out.json("fixtures.json", &json!({"max_deviation": max_dev, "samples_per_range": 200, "ranges": ranges}))?;
    out.json(
        "kernel_report.json",
        &json!({
            "from_cache": run.from_cache, "cache_key": cache::key(cfg),
            "audit_max": sp.audit_max, "split_max": sp.split_max,
            "s0_sq": k.bound_terms()[0].s_sq, "s0_sq_theoretical": run.theoretical,
        }),
    )?;
    echo_config(&mut out, cfg)?;
    Ok(out)
}

fn reconstruction_rows(r: &ReconstructionResult) -> Vec<Vec<String>> {
    r.r_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| vec![num(x), num(r.a_diag[i]), num(r.v[i]), num(r.residual_report[i])])
        .collect()
}

fn summary(model: &MorseModel, r: &ReconstructionResult, nodes: usize) -> serde_json::Value {
    let dev = r.max_deviation(model, 0.5, 10.0);
    let c = &r.conditions;
    json!({
        "s0_sq_used": r.s0_sq_used,
        "max_deviation_vs_morse": dev,
        "deviation_window": [0.5, 10.0],
        "matches_model": dev < MATCH_BUDGET * model.d,
        "V_at_Re": r.v_near(model.re),
        "nodes": nodes,
        "condition": {
            "min": c.iter().cloned().fold(f64::INFINITY, f64::min),
            "max": c.iter().cloned().fold(0.0, f64::max),
            "mean": c.iter().sum::<f64>() / c.len() as f64,
        },
        "max_linear_residual": r.linear_residuals.iter().cloned().fold(0.0, f64::max),
        "max_off_node_residual": r.residual_report.iter().cloned().fold(0.0, f64::max),
    })
}

pub fn solve(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    if let S0Policy::Sweep(_) = cfg.s0 {
        return Err(CliError::Config("s0 is a sweep list; use the `family` command or give a single value".into()));
    }
    let model = cfg.model().stage("solve")?;
    let run = build_kernel(cfg)?;
    let grid = NystromGrid::new(cfg.nystrom_spec()).stage("solve")?;
    let res = reconstruct(&run.kernel, &cfg.r_grid(), &grid, &cfg.reconstruct_options()).stage("solve")?;
    let mut out = Outputs::default();
    out.csv("reconstruction.csv", &["r", "A_diag", "V", "residual"], reconstruction_rows(&res))?;
    out.json("reconstruction.json", &summary(&model, &res, grid.len()))?;
    echo_config(&mut out, cfg)?;
    Ok(out)
}

/// A single-valued s0 policy falls back to the default sweep; the echoed
/// config records the sweep actually run.
pub fn family(cfg: &PipelineConfig) -> Result<Outputs, CliError> {
    let model = cfg.model().stage("family")?;
    let values = match &cfg.s0 {
        S0Policy::Sweep(v) if !v.is_empty() => v.clone(),
        S0Policy::Sweep(_) => return Err(CliError::Config("s0 sweep list is empty".into())),
        S0Policy::Single(_) => S0Policy::default_sweep(),
    };
    let cfg = &PipelineConfig {
        s0: S0Policy::Sweep(values.clone()),
        ..cfg.clone()
    };
    let run = build_kernel(cfg)?;
    let s0s: Vec<f64> = values.iter().map(|v| v.resolve(run.theoretical)).collect();
    let grid = NystromGrid::new(cfg.nystrom_spec()).stage("family")?;
    let members = isospectral_family(&run.kernel, &s0s, &cfg.r_grid(), &grid, &cfg.reconstruct_options()).stage("family")?;
    let mut out = Outputs::default();
    let mut docs = Vec::new();
    for (i, m) in members.iter().enumerate() {
        out.csv(&format!("family_{i}.csv"), &["r", "A_diag", "V", "residual"], reconstruction_rows(&m.result))?;
        let mut s = summary(&model, &m.result, grid.len());
        s["file"] = json!(format!("family_{i}.csv"));
        s["theoretical"] = json!(matches!(values[i], S0Value::Named(_)) || m.s0_sq == run.theoretical);
        docs.push(s);
    }
    let mut header = vec!["r".to_string(), "V_morse".to_string()];
    header.extend(members.iter().map(|m| format!("V_s0sq_{}", m.s0_sq)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let r_grid = &members[0].result.r_grid;
    let rows = r_grid.iter().enumerate().map(|(i, &r)| {
        let mut row = vec![num(r), num(model.potential(r))];
        row.extend(members.iter().map(|m| num(m.result.v[i])));
        row
    });
    out.csv("family.csv", &header_refs, rows)?;
    out.json("family.json", &json!({"s0_sq_theoretical": run.theoretical, "members": docs}))?;
    echo_config(&mut out, cfg)?;
    Ok(out)
}

pub fn theta_lines(betas: &[f64]) -> Result<Vec<String>, CliError> {
    betas
        .iter()
        .map(|&b| {
            let t = theta(b).stage("theta")?;
            Ok(format!("{b} {} {} {:.1e}", num(t.value), t.regime.as_str(), t.error_estimate))
        })
        .collect()
}
