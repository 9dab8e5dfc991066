//! Bernoulli numbers, Hurwitz zeta, the Riemann–Siegel theta function in
//! three regimes, the integral I(β), the arg-gamma combination B(β) and the
//! generalized exponential integral E_n(z).

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{CompensatedSum, QuadratureRule};
use crate::registry::{Named, Registry};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Value with a truncation/discretization estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub terms: usize,
}

const BERNOULLI_CACHE_LEN: usize = 120;

fn bernoulli_cache() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let exact = [
            1.0 / 6.0,
            1.0 / 30.0,
            1.0 / 42.0,
            1.0 / 30.0,
            5.0 / 66.0,
            691.0 / 2730.0,
            7.0 / 6.0,
            3617.0 / 510.0,
            43867.0 / 798.0,
            174611.0 / 330.0,
        ];
        let mut out = vec![f64::NAN];
        out.extend_from_slice(&exact);
        // |B_2n| = 2 (2n)! ζ(2n) / (2π)^2n
        let mut ratio = 1.0;
        for n in 1..BERNOULLI_CACHE_LEN {
            let m = 2 * n;
            ratio *= (m - 1) as f64 / (2.0 * PI) * (m as f64 / (2.0 * PI));
            if n <= exact.len() {
                continue;
            }
            let zeta: f64 = (1..=16).rev().map(|k| (k as f64).powi(-(m as i32))).sum();
            out.push(2.0 * ratio * zeta);
        }
        out
    })
}

/// Bₙ in the unsigned even-index convention: B₁ = 1/6, B₂ = 1/30, B₃ = 1/42, …
pub fn bernoulli(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("Bernoulli index must be >= 1".into()));
    }
    bernoulli_cache()
        .get(n)
        .copied()
        .ok_or_else(|| Error::Domain(format!("Bernoulli index {n} beyond cache ({BERNOULLI_CACHE_LEN})")))
}

/// ζ(s, q) = Σ_{k≥0} (k + q)^{−s} for real s ≥ 2, q > 0.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s >= 2.0) || !(q > 0.0) {
        return Err(Error::Domain(format!("hurwitz_zeta needs s >= 2, q > 0 (s = {s}, q = {q})")));
    }
    const N: usize = 12;
    let mut sum = CompensatedSum::default();
    for k in (0..N).rev() {
        sum.add((k as f64 + q).powf(-s));
    }
    let a = N as f64 + q;
    sum.add(a.powf(1.0 - s) / (s - 1.0));
    sum.add(0.5 * a.powf(-s));
    // Euler–Maclaurin corrections with signed B_2j / (2j)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = a.powf(-s - 1.0);
    for j in 1..=10 {
        let b = bernoulli(j)? * if j % 2 == 1 { 1.0 } else { -1.0 };
        sum.add(b / fact * rising * pow);
        rising *= (s + 2.0 * j as f64 - 1.0) * (s + 2.0 * j as f64);
        fact *= (2 * j + 1) as f64 * (2 * j + 2) as f64;
        pow /= a * a;
    }
    Ok(sum.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaRegime {
    Small,
    Mid,
    Large,
}

impl ThetaRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            ThetaRegime::Small => "small",
            ThetaRegime::Mid => "mid",
            ThetaRegime::Large => "large",
        }
    }
}

pub const THETA_SMALL_BELOW: f64 = 0.1;
pub const THETA_LARGE_ABOVE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaResult {
    pub value: f64,
    pub regime: ThetaRegime,
    pub error_estimate: f64,
}

/// One evaluation formula for θ(β) = arg Γ(1/4 + iβ/2) − (β/2) ln π.
pub trait ThetaFormula: Named + Send + Sync {
    fn regime(&self) -> ThetaRegime;
    fn evaluate(&self, beta: f64) -> Result<Estimate>;
}

/// Odd Taylor series about β = 0; the coefficients come from ζ(2m+1, 1/4).
pub struct ThetaSmallSeries {
    pub tolerance: f64,
    pub max_order: usize,
}

impl Default for ThetaSmallSeries {
    fn default() -> Self {
        ThetaSmallSeries {
            tolerance: 1e-17,
            max_order: 40,
        }
    }
}

impl ThetaSmallSeries {
    /// Coefficient of β^{2m+1}.
    pub fn coefficient(m: usize) -> Result<f64> {
        if m == 0 {
            let psi_quarter = -EULER_GAMMA - PI / 2.0 - 3.0 * LN_2;
            return Ok(0.5 * (psi_quarter - PI.ln()));
        }
        let s = (2 * m + 1) as f64;
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        Ok(sign * hurwitz_zeta(s, 0.25)? / (s * 2f64.powi(2 * m as i32 + 1)))
    }
}

impl Named for ThetaSmallSeries {
    fn name(&self) -> &'static str {
        "small"
    }
}

impl ThetaFormula for ThetaSmallSeries {
    fn regime(&self) -> ThetaRegime {
        ThetaRegime::Small
    }

    fn evaluate(&self, beta: f64) -> Result<Estimate> {
        if beta.abs() >= 0.5 {
            return Err(Error::Domain(format!("small-beta theta series diverges at |beta| = {}", beta.abs())));
        }
        let b2 = beta * beta;
        let mut pow = beta;
        let mut sum = CompensatedSum::default();
        for m in 0..=self.max_order {
            let term = Self::coefficient(m)? * pow;
            sum.add(term);
            if term.abs() <= self.tolerance * sum.value().abs().max(1e-300) || term == 0.0 {
                return Ok(Estimate {
                    value: sum.value(),
                    error: term.abs(),
                    terms: m + 1,
                });
            }
            pow *= b2;
        }
        Err(Error::NonConvergence {
            what: "small-beta theta series",
            terms: self.max_order + 1,
            estimate: pow.abs(),
        })
    }
}

/// Large-β expansion through the β⁻⁵ term.
pub struct ThetaAsymptotic;

impl Named for ThetaAsymptotic {
    fn name(&self) -> &'static str {
        "large"
    }
}

impl ThetaFormula for ThetaAsymptotic {
    fn regime(&self) -> ThetaRegime {
        ThetaRegime::Large
    }

    fn evaluate(&self, beta: f64) -> Result<Estimate> {
        if !(beta > 0.0) {
            return Err(Error::Domain("large-beta theta expansion needs beta > 0".into()));
        }
        let b = beta;
        let b2 = b * b;
        let value = 0.5 * b * (b / (2.0 * PI)).ln() - 0.5 * b - PI / 8.0 + 1.0 / (48.0 * b) + 7.0 / (5760.0 * b * b2) + 31.0 / (80640.0 * b * b2 * b2);
        let next = 127.0 / (430080.0 * b * b2 * b2 * b2);
        Ok(Estimate { value, error: next, terms: 6 })
    }
}

/// 2θ = β[ln(√(1+4β²)/(4π)) − 1] − arctan(tanh(βπ/2)) − I(β)/2.
pub struct ThetaMidRange {
    pub i_route: IBetaRoute,
}

impl Default for ThetaMidRange {
    fn default() -> Self {
        ThetaMidRange { i_route: IBetaRoute::Auto }
    }
}

impl Named for ThetaMidRange {
    fn name(&self) -> &'static str {
        "mid"
    }
}

impl ThetaFormula for ThetaMidRange {
    fn regime(&self) -> ThetaRegime {
        ThetaRegime::Mid
    }

    fn evaluate(&self, beta: f64) -> Result<Estimate> {
        if beta == 0.0 {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                terms: 0,
            });
        }
        if beta < 0.0 {
            let e = self.evaluate(-beta)?;
            return Ok(Estimate { value: -e.value, ..e });
        }
        let i = i_beta(beta, self.i_route)?;
        let two_theta = beta * (((1.0 + 4.0 * beta * beta).sqrt() / (4.0 * PI)).ln() - 1.0) - (0.5 * PI * beta).tanh().atan() - 0.5 * i.value;
        Ok(Estimate {
            value: 0.5 * two_theta,
            error: 0.25 * i.error + 1e-16 * two_theta.abs(),
            terms: i.terms,
        })
    }
}

pub fn theta_registry() -> &'static Registry<dyn ThetaFormula> {
    static REG: OnceLock<Registry<dyn ThetaFormula>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn ThetaFormula> = Registry::new("theta regime");
        reg.register(Box::new(ThetaSmallSeries::default()))
            .register(Box::new(ThetaMidRange::default()))
            .register(Box::new(ThetaAsymptotic));
        reg
    })
}

pub fn theta_regime_for(beta: f64) -> ThetaRegime {
    let b = beta.abs();
    if b < THETA_SMALL_BELOW {
        ThetaRegime::Small
    } else if b > THETA_LARGE_ABOVE {
        ThetaRegime::Large
    } else {
        ThetaRegime::Mid
    }
}

/// θ(β) in a forced regime.
pub fn theta_in(regime: ThetaRegime, beta: f64) -> Result<ThetaResult> {
    let f = theta_registry().get(regime.as_str())?;
    let e = f.evaluate(beta)?;
    Ok(ThetaResult {
        value: e.value,
        regime,
        error_estimate: e.error,
    })
}

pub fn theta(beta: f64) -> Result<ThetaResult> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("theta needs beta >= 0 (got {beta})")));
    }
    theta_in(theta_regime_for(beta), beta)
}

/// B(β) = arg[Γ(2iβ)/Γ(iβ)] on the branch continuous from B(0) = 0.
pub fn gamma_arg_b(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("gamma_arg_B needs beta >= 0 (got {beta})")));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let th = theta(beta)?;
    Ok(beta * (8.0 * PI).ln() + (0.5 * PI * beta).tanh().atan() + 2.0 * th.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IBetaRoute {
    Series,
    Quadrature,
    /// Series where it is accurate (β ≥ 5), quadrature below.
    Auto,
}

pub const I_BETA_SERIES_MIN: f64 = 5.0;

pub fn i_beta(beta: f64, route: IBetaRoute) -> Result<Estimate> {
    match route {
        IBetaRoute::Series => i_beta_series(beta),
        IBetaRoute::Quadrature => i_beta_quad(beta),
        IBetaRoute::Auto if beta >= I_BETA_SERIES_MIN => i_beta_series(beta),
        IBetaRoute::Auto => i_beta_quad(beta),
    }
}

const I_SERIES_TOL: f64 = 1e-13;
const I_SERIES_MAX_TERMS: usize = 110;

/// Bernoulli-number series for I(β). The series is asymptotic: terms shrink
/// until n ≈ πβ and then grow, so it only reaches the tolerance for large β.
pub fn i_beta_series(beta: f64) -> Result<Estimate> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("I(beta) needs beta >= 0 (got {beta})")));
    }
    if beta == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            terms: 0,
        });
    }
    // Σ_j (−1)^j C(2n−1, 2j+1)(2β)^{2j+1} / (1+4β²)^{2n−1} = Im (1 − 2iβ)^{−(2n−1)}
    let w = Complex64::new(1.0, -2.0 * beta).inv();
    let w2 = w * w;
    let mut wp = w;
    let mut four_n = 1.0;
    let mut sum = CompensatedSum::default();
    let mut prev = f64::INFINITY;
    for n in 1..=I_SERIES_MAX_TERMS {
        four_n *= 4.0;
        let nf = n as f64;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * four_n * bernoulli(n)? / (2.0 * nf * (2.0 * nf - 1.0)) * wp.im;
        if term.abs() > prev && prev > I_SERIES_TOL {
            return Err(Error::NonConvergence {
                what: "I(beta) Bernoulli series",
                terms: n,
                estimate: prev,
            });
        }
        sum.add(term);
        if term.abs() < I_SERIES_TOL {
            return Ok(Estimate {
                value: sum.value(),
                error: term.abs(),
                terms: n,
            });
        }
        prev = term.abs();
        wp *= w2;
    }
    Err(Error::NonConvergence {
        what: "I(beta) Bernoulli series",
        terms: I_SERIES_MAX_TERMS,
        estimate: prev,
    })
}

/// (coth t − 1/t)/t, finite at t = 0.
pub fn coth_kernel(t: f64) -> f64 {
    if t.abs() < 0.25 {
        // coth t − 1/t = Σ (−1)^{n−1} 2^{2n} B_2n t^{2n−1}/(2n)!
        let t2 = t * t;
        let mut sum = 0.0;
        let mut c = 1.0;
        let mut pow = 1.0;
        for n in 1..=8usize {
            c *= 4.0 / ((2 * n - 1) as f64 * (2 * n) as f64);
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * c * bernoulli_cache()[n] * pow;
            pow *= t2;
        }
        return sum;
    }
    (1.0 / t.tanh() - 1.0 / t) / t
}

const I_QUAD_NODES: usize = 64;

/// I(β) = ∫₀^∞ (coth t − 1/t) e^{−t} sin(2βt) dt/t, folded onto one half-period T = π/(2β).
pub fn i_beta_quad(beta: f64) -> Result<Estimate> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("I(beta) quadrature needs beta > 0 (got {beta})")));
    }
    let period = PI / (2.0 * beta);
    let upper = period.min(45.0);
    let m_max = (36.9 / period).ceil() as usize;
    if m_max > 2_000_000 {
        return Err(Error::NonConvergence {
            what: "I(beta) folded tail",
            terms: m_max,
            estimate: 1.0,
        });
    }
    let panels = crate::quadrature::linear_panels(0.0, upper, (upper.ceil() as usize).max(1));
    let rule = QuadratureRule::composite(I_QUAD_NODES, &panels)?;
    let folded = |s: f64| -> f64 {
        let mut acc = CompensatedSum::default();
        let mut damp = 1.0;
        let step = (-period).exp();
        for m in 0..=m_max {
            let t = s + m as f64 * period;
            let v = damp * coth_kernel(t);
            acc.add(if m % 2 == 0 { v } else { -v });
            damp *= step;
            if damp < 1e-16 {
                break;
            }
        }
        acc.value()
    };
    let mut sum = CompensatedSum::default();
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        sum.add(w * (-s).exp() * (PI * s / period).sin() * folded(s));
    }
    Ok(Estimate {
        value: sum.value(),
        error: 1e-15,
        terms: rule.len(),
    })
}

/// E_n(z) = ∫₁^∞ e^{−zt} t^{−n} dt for n ≥ 1, Re z ≥ 0, z ≠ 0.
pub fn exp_integral_e(n: u32, z: Complex64) -> Result<Complex64> {
    if n == 0 || z.re < 0.0 || z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain(format!("E_n needs n >= 1 and Re z >= 0, z != 0 (n = {n}, z = {z})")));
    }
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;
    let nm1 = (n - 1) as f64;
    if z.norm() > 2.0 {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = z + Complex64::new(n as f64, 0.0);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (nm1 + i as f64);
            b += 2.0;
            d = (d * an + b).inv();
            c = b + c.inv() * an;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < EPS {
                return Ok(h * (-z).exp());
            }
        }
        return Err(Error::NonConvergence {
            what: "E_n continued fraction",
            terms: MAX_ITER,
            estimate: f64::NAN,
        });
    }
    let mut ans = if n == 1 { -z.ln() - EULER_GAMMA } else { Complex64::new(1.0 / nm1, 0.0) };
    let mut fact = Complex64::new(1.0, 0.0);
    for i in 1..=MAX_ITER {
        fact *= -z / i as f64;
        let del = if i as f64 != nm1 {
            -fact / (i as f64 - nm1)
        } else {
            let psi = -EULER_GAMMA + (1..n).map(|k| 1.0 / k as f64).sum::<f64>();
            fact * (-z.ln() + psi)
        };
        ans += del;
        if del.norm() < ans.norm() * EPS {
            return Ok(ans);
        }
    }
    Err(Error::NonConvergence {
        what: "E_n series",
        terms: MAX_ITER,
        estimate: f64::NAN,
    })
}

/// ∫_K^∞ k^{−n} e^{ikx} dk for x ≥ 0 (real part: cosine, imaginary part: sine).
/// At x = 0 the sine part is the right-hand limit.
pub fn oscillatory_power_tail(n: u32, big_k: f64, x: f64) -> Result<Complex64> {
    if x == 0.0 {
        if n < 2 {
            return Ok(Complex64::new(f64::INFINITY, PI / 2.0));
        }
        return Ok(Complex64::new(big_k.powi(1 - n as i32) / (n as f64 - 1.0), 0.0));
    }
    let e = exp_integral_e(n, Complex64::new(0.0, -big_k * x))?;
    Ok(e * big_k.powi(1 - n as i32))
}
