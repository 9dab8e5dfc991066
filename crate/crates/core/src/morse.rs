//! Direct problem for the Morse well on the half line: potential, bound
//! spectrum, norming constants, the S-function and the phase shift.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{linear_panels, log_panels, QuadratureRule};
use crate::registry::{Named, Registry};
use crate::specfun::gamma_arg_b;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseModel {
    pub d: f64,
    pub alpha: f64,
    pub re: f64,
    pub c: f64,
}

impl Default for MorseModel {
    fn default() -> Self {
        MorseModel {
            d: 1.0,
            alpha: 2.0 / 3.0,
            re: 2.5,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundLevel {
    pub n: usize,
    pub energy: f64,
    pub gamma: f64,
}

impl MorseModel {
    pub fn new(d: f64, alpha: f64, re: f64, c: f64) -> Result<Self> {
        let m = MorseModel { d, alpha, re, c };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("D", self.d), ("alpha", self.alpha), ("Re", self.re), ("C", self.c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("Morse parameter {name} must be positive and finite (got {v})")));
            }
        }
        Ok(())
    }

    /// a = √(D/C)/α
    pub fn a(&self) -> f64 {
        (self.d / self.c).sqrt() / self.alpha
    }

    /// y₀ = 2a·e^{αRe}, the value of y at r = 0.
    pub fn y0(&self) -> f64 {
        2.0 * self.a() * (self.alpha * self.re).exp()
    }

    pub fn y(&self, r: f64) -> f64 {
        2.0 * self.a() * (-self.alpha * (r - self.re)).exp()
    }

    /// V(r) = D[e^{−2α(r−Re)} − 2e^{−α(r−Re)}]
    pub fn potential(&self, r: f64) -> f64 {
        let e = (-self.alpha * (r - self.re)).exp();
        self.d * (e * e - 2.0 * e)
    }

    pub fn levels(&self) -> Vec<BoundLevel> {
        let a = self.a();
        (0..)
            .map(|n| (n, (n as f64 + 0.5) / a))
            .take_while(|&(_, q)| q < 1.0)
            .map(|(n, q)| {
                let energy = -self.d * (1.0 - q) * (1.0 - q);
                BoundLevel {
                    n,
                    energy,
                    gamma: (-energy / self.c).sqrt(),
                }
            })
            .collect()
    }

    pub fn bound_count(&self) -> usize {
        self.levels().len()
    }

    /// N with a = N + 1/2, when a − 1/2 is a nonnegative integer.
    pub fn half_integer_index(&self) -> Option<u32> {
        let n = self.a() - 0.5;
        let r = n.round();
        (r >= 0.0 && (n - r).abs() < 1e-12).then_some(r as u32)
    }

    /// a₁ = −(2C)⁻¹ ∫₀^∞ V dr in closed form.
    pub fn a1(&self) -> f64 {
        let (al, re) = (self.alpha, self.re);
        -self.d / (2.0 * self.c) * ((2.0 * al * re).exp() / (2.0 * al) - 2.0 * (al * re).exp() / al)
    }
}

pub fn morse_eval(model: &MorseModel, r: f64) -> f64 {
    model.potential(r)
}

pub fn bound_levels(model: &MorseModel) -> Vec<BoundLevel> {
    model.levels()
}

/// e^{−y/2}·y with y = y(r); unnormalized.
pub fn bound_wavefunction(model: &MorseModel, r: f64) -> f64 {
    let y = model.y(r);
    (-0.5 * y).exp() * y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormingConstant {
    pub s0_sq_exact: f64,
    pub s0_sq_integral: f64,
}

pub fn norming_constant(model: &MorseModel) -> Result<NormingConstant> {
    let n = model.bound_count();
    if n != 1 {
        return Err(Error::Domain(format!("norming constant needs exactly one level (model has {n})")));
    }
    let y0 = model.y0();
    let exact = y0 * y0 * model.alpha;
    let rule = QuadratureRule::composite(64, &linear_panels(y0, y0 + 60.0, 8))?;
    let tail = rule.integrate(|y| (-y).exp() * y);
    Ok(NormingConstant {
        s0_sq_exact: exact,
        s0_sq_integral: exact / (1.0 - tail),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            tolerance: 1e-14,
            max_terms: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseOptions {
    pub series: SeriesOptions,
    /// β below which the first-order low-energy form replaces the full series.
    pub low_energy_beta: f64,
    /// Largest acceptable truncation estimate of the asymptotic route.
    pub asymptotic_tolerance: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            series: SeriesOptions::default(),
            low_energy_beta: 1e-6,
            asymptotic_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SFunctionValue {
    pub value: Complex64,
    pub magnitude: f64,
    pub argument: f64,
    pub terms_used: usize,
    pub truncation_estimate: f64,
}

impl SFunctionValue {
    fn from_value(value: Complex64, terms_used: usize, truncation_estimate: f64) -> Self {
        SFunctionValue {
            value,
            magnitude: value.norm(),
            argument: principal(value.arg()),
            terms_used,
            truncation_estimate,
        }
    }
}

/// Reduces an angle to (−π, π].
pub fn principal(x: f64) -> f64 {
    let mut v = x.rem_euclid(2.0 * PI);
    if v > PI {
        v -= 2.0 * PI;
    }
    v
}

/// S(a, c; y) = Σ Bₙ with B₀ = 1, B₁ = −ay/(2c+1), Bₙ = y/(n(2c+n))·(−aBₙ₋₁ + (y/4)Bₙ₋₂).
pub fn s_function(a: f64, c: Complex64, y: f64, opts: &SeriesOptions) -> Result<SFunctionValue> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("S-function needs y >= 0 (got {y})")));
    }
    if y == 0.0 {
        return Ok(SFunctionValue::from_value(Complex64::new(1.0, 0.0), 1, 0.0));
    }
    let two_c = 2.0 * c;
    let mut b_prev = Complex64::new(1.0, 0.0);
    let mut b_cur = -a * y / (two_c + 1.0);
    let mut sum = b_prev + b_cur;
    for n in 2..=opts.max_terms {
        let nf = n as f64;
        let b_next = y / (nf * (two_c + nf)) * (-a * b_cur + 0.25 * y * b_prev);
        sum += b_next;
        b_prev = b_cur;
        b_cur = b_next;
        let est = (b_cur.norm() + b_prev.norm()) / sum.norm();
        if est < opts.tolerance {
            return Ok(SFunctionValue::from_value(sum, n + 1, est));
        }
    }
    Err(Error::NonConvergence {
        what: "S-function series",
        terms: opts.max_terms,
        estimate: (b_cur.norm() + b_prev.norm()) / sum.norm(),
    })
}

pub fn s_series(model: &MorseModel, k: f64, y: f64, opts: &SeriesOptions) -> Result<SFunctionValue> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("S-series needs k > 0 (got {k})")));
    }
    s_function(model.a(), Complex64::new(0.0, k / model.alpha), y, opts)
}

#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.v * o.d + self.d * o.v,
        }
    }

    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

/// e^{−y/2}[Φ₀(y) + iβΦ₁(y)]: the confluent series Φ(½ − a + ε, 1 + 2ε; y)
/// carried to first order in ε = iβ.
pub fn s_series_low_energy(model: &MorseModel, k: f64, y: f64, opts: &PhaseOptions) -> Result<SFunctionValue> {
    let beta = k / model.alpha;
    if !(beta > 0.0) || beta >= opts.low_energy_beta {
        return Err(Error::Domain(format!("low-energy form needs 0 < beta < {} (got {beta})", opts.low_energy_beta)));
    }
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("S-function needs y >= 0 (got {y})")));
    }
    let p0 = 0.5 - model.a();
    let mut term = Dual { v: 1.0, d: 0.0 };
    let mut sum = term;
    let mut n = 0usize;
    let max = opts.series.max_terms;
    let mut est = 0.0;
    while n < max {
        let nf = n as f64;
        let num = Dual { v: p0 + nf, d: 1.0 };
        let den = Dual { v: 1.0 + nf, d: 2.0 };
        term = term.mul(num).div(den).mul(Dual { v: y / (nf + 1.0), d: 0.0 });
        sum.v += term.v;
        sum.d += term.d;
        n += 1;
        let scale = sum.v.abs() + sum.d.abs();
        est = (term.v.abs() + term.d.abs()) / scale;
        if nf > -p0 + 1.0 && est < opts.series.tolerance {
            let pre = (-0.5 * y).exp();
            let value = Complex64::new(pre * sum.v, pre * beta * sum.d);
            return Ok(SFunctionValue::from_value(value, n + 1, est));
        }
    }
    Err(Error::NonConvergence {
        what: "low-energy confluent series",
        terms: max,
        estimate: est,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseMethodKind {
    Series,
    Asymptotic,
    LowEnergy,
}

impl PhaseMethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseMethodKind::Series => "series",
            PhaseMethodKind::Asymptotic => "asymptotic",
            PhaseMethodKind::LowEnergy => "low_energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub k: f64,
    /// Principal value in (−π, π].
    pub delta: f64,
    pub method: PhaseMethodKind,
    pub error_estimate: f64,
}

/// A route from (model, k) to δ(k) modulo 2π.
pub trait PhaseMethod: Named + Send + Sync {
    fn phase(&self, model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<PhaseSample>;
}

pub struct SeriesPhase;
pub struct LowEnergyPhase;
pub struct AsymptoticPhase;
/// Low-energy form below the threshold, full series above, asymptotic
/// route if the series runs out of terms.
pub struct AutoPhase;

impl Named for SeriesPhase {
    fn name(&self) -> &'static str {
        "series"
    }
}

impl PhaseMethod for SeriesPhase {
    fn phase(&self, model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<PhaseSample> {
        let s = s_series(model, k, model.y0(), &opts.series)?;
        Ok(PhaseSample {
            k,
            delta: s.argument,
            method: PhaseMethodKind::Series,
            error_estimate: s.truncation_estimate,
        })
    }
}

impl Named for LowEnergyPhase {
    fn name(&self) -> &'static str {
        "low_energy"
    }
}

impl PhaseMethod for LowEnergyPhase {
    fn phase(&self, model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<PhaseSample> {
        let s = s_series_low_energy(model, k, model.y0(), opts)?;
        let beta = k / model.alpha;
        Ok(PhaseSample {
            k,
            delta: s.argument,
            method: PhaseMethodKind::LowEnergy,
            error_estimate: s.truncation_estimate + beta * beta,
        })
    }
}

impl Named for AsymptoticPhase {
    fn name(&self) -> &'static str {
        "asymptotic"
    }
}

impl PhaseMethod for AsymptoticPhase {
    fn phase(&self, model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<PhaseSample> {
        let a = asymptotic_phase_detailed(model, k)?;
        if !(a.error_estimate <= opts.asymptotic_tolerance) {
            return Err(Error::NonConvergence {
                what: "asymptotic ratio series",
                terms: a.terms,
                estimate: a.error_estimate,
            });
        }
        Ok(PhaseSample {
            k,
            delta: a.delta,
            method: PhaseMethodKind::Asymptotic,
            error_estimate: a.error_estimate,
        })
    }
}

impl Named for AutoPhase {
    fn name(&self) -> &'static str {
        "auto"
    }
}

impl PhaseMethod for AutoPhase {
    fn phase(&self, model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<PhaseSample> {
        if k / model.alpha < opts.low_energy_beta {
            return LowEnergyPhase.phase(model, k, opts);
        }
        match SeriesPhase.phase(model, k, opts) {
            Err(Error::NonConvergence { .. }) if model.half_integer_index().is_some() => AsymptoticPhase.phase(model, k, opts),
            other => other,
        }
    }
}

pub fn phase_methods() -> &'static Registry<dyn PhaseMethod> {
    static REG: OnceLock<Registry<dyn PhaseMethod>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn PhaseMethod> = Registry::new("phase-shift method");
        reg.register(Box::new(AutoPhase))
            .register(Box::new(SeriesPhase))
            .register(Box::new(LowEnergyPhase))
            .register(Box::new(AsymptoticPhase));
        reg
    })
}

/// δ(k) = arg S(a, iβ; y₀), principal value.
pub fn phase_shift_series(model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<f64> {
    if k / model.alpha < opts.low_energy_beta {
        return Ok(LowEnergyPhase.phase(model, k, opts)?.delta);
    }
    Ok(SeriesPhase.phase(model, k, opts)?.delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticDetail {
    pub delta: f64,
    /// Offset α₀ = β ln 2a + β_N − B + kRe.
    pub phase_offset: f64,
    /// tan(α₀ + δ) as given by the ratio of the two series.
    pub tan_total: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub error_estimate: f64,
    pub terms: usize,
}

/// Sums an asymptotic series Σ tₙ, tₙ = tₙ₋₁·ratio(n), up to its smallest term.
fn optimally_truncated<F: Fn(usize) -> f64>(ratio: F, tol: f64, cap: usize) -> (f64, f64, usize) {
    let mut t = 1.0f64;
    let mut sum = 1.0f64;
    for n in 1..=cap {
        let next = t * ratio(n);
        if next.abs() >= t.abs() {
            return (sum, t.abs(), n);
        }
        t = next;
        sum += t;
        if t.abs() < tol * sum.abs() {
            return (sum, t.abs(), n);
        }
    }
    (sum, t.abs(), cap)
}

/// Phase shift from the large-y₀ connection formula:
/// tan(α₀ + δ) = β·α_N²·e^{y₀}·Den / (y₀^{2N+1}·cosh(πβ)·Num), with
/// Num = Σ (−1)ⁿ Π_{j<n}((N−j)²+β²)/(n! y₀ⁿ), Den = Σ Π_{j≤n}((N+j)²+β²)/(n! y₀ⁿ)
/// and α_N² = Π_{j≤N}(j²+β²). The quadrant follows from the signs of both sides.
pub fn asymptotic_phase_detailed(model: &MorseModel, k: f64) -> Result<AsymptoticDetail> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("asymptotic phase needs k > 0 (got {k})")));
    }
    let nn = model
        .half_integer_index()
        .ok_or_else(|| Error::Domain(format!("asymptotic phase needs a - 1/2 to be a nonnegative integer (a = {})", model.a())))?;
    let n = nn as f64;
    let beta = k / model.alpha;
    let b2 = beta * beta;
    let y0 = model.y0();
    let (num, num_err, num_terms) = optimally_truncated(|j| -((n - (j - 1) as f64).powi(2) + b2) / (j as f64 * y0), 1e-17, 10_000);
    let (den, den_err, den_terms) = optimally_truncated(|j| ((n + j as f64).powi(2) + b2) / (j as f64 * y0), 1e-17, 10_000);
    let alpha_n_sq: f64 = (1..=nn).map(|j| (j as f64).powi(2) + b2).product();
    let beta_n: f64 = (1..=nn).map(|j| beta.atan2(j as f64)).sum();
    let b = gamma_arg_b(beta)?;
    let offset = beta * (2.0 * model.a()).ln() + beta_n - b + k * model.re;
    // e^{iα₀+iδ}|S₀| ∝ (−1)^N [cosh(πβ) e^{−y/2} y^N Num/(βα_N²) + i e^{y/2} y^{−N−1} Den],
    // both parts scaled by e^{−πβ}.
    let ln_y = y0.ln();
    let xs = 0.5 * (1.0 + (-2.0 * PI * beta).exp()) * (-0.5 * y0 + n * ln_y).exp() / (beta * alpha_n_sq);
    let ys = (0.5 * y0 - PI * beta - (n + 1.0) * ln_y).exp();
    let angle = |num: f64, den: f64| n * PI + (ys * den).atan2(xs * num);
    let delta = principal(angle(num, den) - offset);
    // spread of the angle over the truncation boxes of both series
    let mut err = 0.0f64;
    if num_err >= num.abs() || den_err >= den.abs() {
        err = PI;
    } else {
        for (sn, sd) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let a = angle(num + sn * num_err, den + sd * den_err);
            err = err.max(principal(a - angle(num, den)).abs());
        }
    }
    let (x, y) = (xs * num, ys * den);
    Ok(AsymptoticDetail {
        delta,
        phase_offset: offset,
        tan_total: y / x,
        numerator: num,
        denominator: den,
        error_estimate: err,
        terms: num_terms.max(den_terms),
    })
}

pub fn phase_shift_asymptotic(model: &MorseModel, k: f64, opts: &PhaseOptions) -> Result<f64> {
    Ok(AsymptoticPhase.phase(model, k, opts)?.delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEntry {
    pub k: f64,
    pub delta: f64,
    pub method: PhaseMethodKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub entries: Vec<PhaseEntry>,
    pub bound_count: usize,
    /// |δ(first) − δ(last) − Nπ|
    pub levinson_residual: f64,
}

impl PhaseTable {
    pub fn ks(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.k).collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.delta).collect()
    }

    /// Levinson residual with both ends carried to their limits: δ(0⁺) from
    /// δ ≈ Nπ − arctan(k a₀) and δ(∞) from δ ≈ a₁/k + a₃/k³ + a₅/k⁵.
    pub fn levinson_residual_extrapolated(&self, a0: f64, hk: &HighK) -> f64 {
        let first = &self.entries[0];
        let last = &self.entries[self.entries.len() - 1];
        let at_zero = first.delta + (first.k * a0).atan();
        let at_inf = last.delta - hk.delta(last.k);
        (at_zero - at_inf - self.bound_count as f64 * PI).abs()
    }
}

/// Logarithmic grid with `per_decade` points per decade, both ends included.
pub fn log_grid(k_min: f64, k_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (k_max / k_min).log10();
    let n = (decades * per_decade as f64).round() as usize;
    let (la, lb) = (k_min.ln(), k_max.ln());
    (0..=n)
        .map(|i| {
            if i == 0 {
                k_min
            } else if i == n {
                k_max
            } else {
                (la + (lb - la) * i as f64 / n as f64).exp()
            }
        })
        .collect()
}

/// Principal values on `grid`, unwrapped into a continuous branch with the
/// largest-k entry taken as its principal value (δ(∞) = 0 normalization).
pub fn phase_table(model: &MorseModel, grid: &[f64], method: &str, opts: &PhaseOptions) -> Result<PhaseTable> {
    if grid.is_empty() {
        return Err(Error::Domain("empty k grid".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!("k grid must be strictly increasing ({} then {})", w[0], w[1])));
        }
    }
    if !(grid[0] > 0.0) {
        return Err(Error::Domain("k grid must be positive".into()));
    }
    let m = phase_methods().get(method)?;
    let samples: Vec<PhaseSample> = grid.par_iter().map(|&k| m.phase(model, k, opts)).collect::<Result<Vec<_>>>()?;
    unwrap_samples(&samples, model.bound_count())
}

fn unwrap_samples(samples: &[PhaseSample], bound_count: usize) -> Result<PhaseTable> {
    let n = samples.len();
    let mut out = vec![0.0; n];
    out[n - 1] = samples[n - 1].delta;
    for i in (0..n - 1).rev() {
        let p = samples[i].delta;
        let next = out[i + 1];
        let shift = ((next - p) / (2.0 * PI)).round();
        let v = p + 2.0 * PI * shift;
        let jump = v - next;
        if jump.abs() >= PI / 2.0 {
            return Err(Error::BranchAmbiguity {
                k_prev: samples[i].k,
                k: samples[i + 1].k,
                jump,
            });
        }
        out[i] = v;
    }
    let entries: Vec<PhaseEntry> = samples
        .iter()
        .zip(&out)
        .map(|(s, &d)| PhaseEntry {
            k: s.k,
            delta: d,
            method: s.method,
        })
        .collect();
    let levinson_residual = (out[0] - out[n - 1] - bound_count as f64 * PI).abs();
    Ok(PhaseTable {
        entries,
        bound_count,
        levinson_residual,
    })
}

/// Ψ(k, r) = |S(y)|·sin(kr + arg S₀ − arg S(y)).
pub fn scattering_wavefunction(model: &MorseModel, k: f64, r: f64, opts: &PhaseOptions) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("wavefunction needs r >= 0 (got {r})")));
    }
    let eval = |y: f64| {
        if k / model.alpha < opts.low_energy_beta {
            s_series_low_energy(model, k, y, opts)
        } else {
            s_series(model, k, y, &opts.series)
        }
    };
    let s0 = eval(model.y0())?;
    let s = eval(model.y(r))?;
    Ok(s.magnitude * (k * r + s0.argument - s.argument).sin())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringLengthFit {
    pub a0: f64,
    pub max_residual: f64,
    pub points: usize,
}

pub const SCATTERING_LENGTH_WINDOW: (f64, f64) = (1e-9, 1e-6);
const SCATTERING_LENGTH_TOL: f64 = 1e-8;

/// Least-squares fit of δ(k) = Nπ − arctan(k a₀) over a low-k window.
pub fn scattering_length(model: &MorseModel, window: (f64, f64), opts: &PhaseOptions) -> Result<ScatteringLengthFit> {
    let grid = log_grid(window.0, window.1, 16);
    let table = phase_table(model, &grid, "auto", opts)?;
    scattering_length_from_table(&table, window)
}

pub fn scattering_length_from_table(table: &PhaseTable, window: (f64, f64)) -> Result<ScatteringLengthFit> {
    let base = table.bound_count as f64 * PI;
    let pts: Vec<(f64, f64)> = table
        .entries
        .iter()
        .filter(|e| e.k >= window.0 && e.k <= window.1)
        .map(|e| (e.k, e.delta))
        .collect();
    if pts.len() < 2 {
        return Err(Error::FitFailure {
            what: "scattering length",
            residual: f64::INFINITY,
            tolerance: SCATTERING_LENGTH_TOL,
        });
    }
    // tan(Nπ − δ) = k a₀
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), &(k, d)| (sxy + k * (base - d).tan(), sxx + k * k));
    let a0 = sxy / sxx;
    let max_residual = pts.iter().map(|&(k, d)| principal(d - (base - (k * a0).atan())).abs()).fold(0.0, f64::max);
    if max_residual > SCATTERING_LENGTH_TOL {
        return Err(Error::FitFailure {
            what: "scattering length",
            residual: max_residual,
            tolerance: SCATTERING_LENGTH_TOL,
        });
    }
    Ok(ScatteringLengthFit {
        a0,
        max_residual,
        points: pts.len(),
    })
}

/// a₀ from the linear large-r behaviour Ψ ∝ k(r − a₀) at very small k.
pub fn scattering_length_from_wavefunction(model: &MorseModel, k: f64, r1: f64, r2: f64, opts: &PhaseOptions) -> Result<f64> {
    let p1 = scattering_wavefunction(model, k, r1, opts)?;
    let p2 = scattering_wavefunction(model, k, r2, opts)?;
    let slope = (p2 - p1) / (r2 - r1);
    Ok(r1 - p1 / slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighK {
    pub a1: f64,
    pub a3: f64,
    pub a5: f64,
    pub max_residual: f64,
}

impl HighK {
    pub fn delta(&self, k: f64) -> f64 {
        let u = 1.0 / k;
        let u2 = u * u;
        u * (self.a1 + u2 * (self.a3 + u2 * self.a5))
    }
}

pub const HIGH_K_WINDOW: (f64, f64) = (50.0, 100.0);

/// a₁ in closed form; a₃, a₅ from a least-squares fit of kδ − a₁ against k⁻², k⁻⁴.
pub fn high_k_coefficients(model: &MorseModel, window: (f64, f64), opts: &PhaseOptions) -> Result<HighK> {
    let grid: Vec<f64> = (0..=50).map(|i| window.0 + (window.1 - window.0) * i as f64 / 50.0).collect();
    let table = phase_table(model, &grid, "auto", opts)?;
    high_k_from_samples(model.a1(), &table.ks(), &table.deltas())
}

pub fn high_k_from_samples(a1: f64, ks: &[f64], deltas: &[f64]) -> Result<HighK> {
    let kref = ks[0];
    // columns scaled to O(1): u = (kref/k)², v = u²
    let (mut suu, mut suv, mut svv, mut suz, mut svz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&k, &d) in ks.iter().zip(deltas) {
        let u = (kref / k).powi(2);
        let v = u * u;
        let z = k * d - a1;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        suz += u * z;
        svz += v * z;
    }
    let det = suu * svv - suv * suv;
    let cu = (suz * svv - svz * suv) / det;
    let cv = (svz * suu - suz * suv) / det;
    let hk = HighK {
        a1,
        a3: cu * kref * kref,
        a5: cv * kref.powi(4),
        max_residual: 0.0,
    };
    let mut worst = 0.0f64;
    for (&k, &d) in ks.iter().zip(deltas) {
        worst = worst.max((d - hk.delta(k)).abs() / d.abs());
    }
    if worst > 1e-8 {
        return Err(Error::FitFailure {
            what: "high-k coefficients",
            residual: worst,
            tolerance: 1e-8,
        });
    }
    Ok(HighK { max_residual: worst, ..hk })
}

/// One bound level with its norming constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub n: usize,
    pub energy: f64,
    pub gamma: f64,
    pub s_sq: f64,
}

/// A way of assigning bound energies and norming constants to the model.
pub trait BoundSpectrum: Named + Send + Sync {
    fn states(&self, model: &MorseModel) -> Result<Vec<BoundState>>;
}

/// Closed-form levels with s₀² = y₀²α.
pub struct ClosedFormSpectrum;

/// Level from the zero of S(a, c; y₀) for real c, with s₀² from the
/// normalization integral of the Jost solution e^{−γr}S(a, c; y(r)).
pub struct HalfLineSpectrum;

impl Named for ClosedFormSpectrum {
    fn name(&self) -> &'static str {
        "closed_form"
    }
}

impl BoundSpectrum for ClosedFormSpectrum {
    fn states(&self, model: &MorseModel) -> Result<Vec<BoundState>> {
        let levels = model.levels();
        if levels.is_empty() {
            return Ok(Vec::new());
        }
        let nc = norming_constant(model)?;
        let l = levels[0];
        Ok(vec![BoundState {
            n: l.n,
            energy: l.energy,
            gamma: l.gamma,
            s_sq: nc.s0_sq_exact,
        }])
    }
}

impl Named for HalfLineSpectrum {
    fn name(&self) -> &'static str {
        "half_line"
    }
}

impl BoundSpectrum for HalfLineSpectrum {
    fn states(&self, model: &MorseModel) -> Result<Vec<BoundState>> {
        let levels = model.levels();
        if levels.len() > 1 {
            return Err(Error::Domain("half-line spectrum supports a single level".into()));
        }
        if levels.is_empty() {
            return Ok(Vec::new());
        }
        let opts = SeriesOptions::default();
        let a = model.a();
        let y0 = model.y0();
        let s_at = |c: f64| -> Result<f64> { Ok(s_function(a, Complex64::new(c, 0.0), y0, &opts)?.value.re) };
        let c0 = levels[0].gamma / model.alpha;
        let (mut lo, mut hi) = (c0 * 0.9, (c0 * 1.1).min(a));
        let (mut flo, fhi) = (s_at(lo)?, s_at(hi)?);
        if flo * fhi > 0.0 {
            return Err(Error::FitFailure {
                what: "half-line bound state bracket",
                residual: flo.abs().min(fhi.abs()),
                tolerance: 0.0,
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = s_at(mid)?;
            if fm == 0.0 || hi - lo < 1e-15 * mid {
                lo = mid;
                hi = mid;
                break;
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        let c = 0.5 * (lo + hi);
        let gamma = model.alpha * c;
        // ∫₀^∞ e^{−2γr} S(y(r))² dr = ∫₀^{y₀} (y/y₀)^{2c} S(y)² dy/(αy)
        let mut panels = log_panels(1e-12, 1e-2, 2);
        panels.extend(linear_panels(1e-2, y0, 32));
        let rule = QuadratureRule::composite(64, &panels)?;
        let mut norm = 0.0;
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let s = s_function(a, Complex64::new(c, 0.0), y, &opts)?.value.re;
            norm += w * (y / y0).powf(2.0 * c) * s * s / (model.alpha * y);
        }
        Ok(vec![BoundState {
            n: 0,
            energy: -model.c * gamma * gamma,
            gamma,
            s_sq: 1.0 / norm,
        }])
    }
}

pub fn bound_spectra() -> &'static Registry<dyn BoundSpectrum> {
    static REG: OnceLock<Registry<dyn BoundSpectrum>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn BoundSpectrum> = Registry::new("bound spectrum");
        reg.register(Box::new(ClosedFormSpectrum)).register(Box::new(HalfLineSpectrum));
        reg
    })
}
