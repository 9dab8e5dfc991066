//! Marchenko kernel A₀(x) = A_s(x) − Σ sₙ² e^{−γₙx}. The scattering part
//! A_s = −(f + g)/π comes from the half-line transforms
//! f(x) = ∫₀^∞ sin 2δ(k) sin kx dk and g(x) = 2∫₀^∞ sin²δ(k) cos kx dk.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::{lobatto_points, ChebyshevPanel, PiecewiseChebyshev};
use crate::morse::{bound_spectra, high_k_coefficients, phase_table, HighK, MorseModel, PhaseOptions, PhaseTable, HIGH_K_WINDOW};
use crate::quadrature::{gauss_legendre, linear_panels, log_panels, CompensatedSum, FilonGrid, Oscillator, QuadratureRule};
use crate::specfun::oscillatory_power_tail;

/// Edge between the log-panelled and the uniformly panelled k ranges.
pub const K_LOG_END: f64 = 0.1;
/// Start of the range handled by Filon's rule for large x.
pub const K_FILON: f64 = 20.0;
/// Start of the analytic high-k tail.
pub const K_TAIL: f64 = 100.0;
/// Filon replaces Gauss–Legendre on [K_FILON, K_TAIL] from this x on.
pub const FILON_X_MIN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOptions {
    pub k_min: f64,
    /// Gauss–Legendre panels per decade on [k_min, 0.1].
    pub log_per_decade: usize,
    /// Uniform panels on [0.1, 20].
    pub mid_panels: usize,
    /// Uniform panels on [20, 100].
    pub high_panels: usize,
    pub filon_panels: usize,
    pub rule_size: usize,
    pub split_tolerance: f64,
    pub tail_start: f64,
    pub tail_fit_end: f64,
    pub tail_fit_points: usize,
    pub tail_tolerance: f64,
    pub interp_degree: usize,
    pub audit_tolerance: f64,
    pub phase: PhaseOptions,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            k_min: 1e-9,
            log_per_decade: 4,
            mid_panels: 80,
            high_panels: 320,
            filon_panels: 1600,
            rule_size: 64,
            split_tolerance: 1e-9,
            tail_start: 30.0,
            tail_fit_end: 60.0,
            tail_fit_points: 61,
            tail_tolerance: 1e-9,
            interp_degree: 24,
            audit_tolerance: 1e-8,
            phase: PhaseOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgValue {
    pub f: f64,
    pub g: f64,
    /// |Filon − Gauss–Legendre| over [20, 100], the larger of the f and g gaps.
    pub split_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Samples {
    k: Vec<f64>,
    w: Vec<f64>,
    sin_2d: Vec<f64>,
    two_sin_sq: Vec<f64>,
}

impl Samples {
    fn sums(&self, x: f64) -> (f64, f64) {
        let (mut f, mut g) = (0.0, 0.0);
        for i in 0..self.k.len() {
            let (s, c) = (self.k[i] * x).sin_cos();
            f += self.w[i] * self.sin_2d[i] * s;
            g += self.w[i] * self.two_sin_sq[i] * c;
        }
        (f, g)
    }
}

/// Precomputed sin 2δ and 2 sin²δ on every k node the transforms use.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTransform {
    low: Samples,
    high: Samples,
    filon: FilonGrid,
    filon_sin_2d: Vec<f64>,
    filon_two_sin_sq: Vec<f64>,
    pub high_k: HighK,
    pub split_tolerance: f64,
}

fn low_rule(opts: &KernelOptions) -> Result<QuadratureRule> {
    let mut panels = log_panels(opts.k_min, K_LOG_END, opts.log_per_decade);
    panels.extend(linear_panels(K_LOG_END, K_FILON, opts.mid_panels));
    QuadratureRule::composite(opts.rule_size, &panels)
}

fn high_rule(opts: &KernelOptions) -> Result<QuadratureRule> {
    QuadratureRule::composite(opts.rule_size, &linear_panels(K_FILON, K_TAIL, opts.high_panels))
}

impl PhaseTransform {
    /// Every k at which δ is needed, ascending and without repeats.
    pub fn required_nodes(opts: &KernelOptions) -> Result<Vec<f64>> {
        if !(opts.k_min > 0.0 && opts.k_min < K_LOG_END) {
            return Err(Error::Domain(format!("k_min must lie in (0, {K_LOG_END}) (got {})", opts.k_min)));
        }
        let mut ks = low_rule(opts)?.nodes;
        ks.extend(high_rule(opts)?.nodes);
        ks.extend(FilonGrid::new(K_FILON, K_TAIL, opts.filon_panels)?.nodes());
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        Ok(ks)
    }

    pub fn from_model(model: &MorseModel, opts: &KernelOptions) -> Result<Self> {
        let nodes = Self::required_nodes(opts)?;
        let table = phase_table(model, &nodes, "auto", &opts.phase)?;
        let high_k = high_k_coefficients(model, HIGH_K_WINDOW, &opts.phase)?;
        Self::from_table(&table, high_k, opts)
    }

    /// `table` must contain every k of `required_nodes`.
    pub fn from_table(table: &PhaseTable, high_k: HighK, opts: &KernelOptions) -> Result<Self> {
        let ks = table.ks();
        let delta_at = |k: f64| -> Result<f64> {
            let i = ks.partition_point(|&t| t < k);
            match table.entries.get(i) {
                Some(e) if e.k == k => Ok(e.delta),
                _ => Err(Error::Domain(format!("phase table has no entry at k = {k}"))),
            }
        };
        let sample = |rule: QuadratureRule| -> Result<Samples> {
            let mut s = Samples {
                k: rule.nodes,
                w: rule.weights,
                sin_2d: Vec::new(),
                two_sin_sq: Vec::new(),
            };
            for &k in &s.k {
                let d = delta_at(k)?;
                s.sin_2d.push((2.0 * d).sin());
                s.two_sin_sq.push(2.0 * d.sin().powi(2));
            }
            Ok(s)
        };
        let low = sample(low_rule(opts)?)?;
        let high = sample(high_rule(opts)?)?;
        let filon = FilonGrid::new(K_FILON, K_TAIL, opts.filon_panels)?;
        let mut filon_sin_2d = Vec::new();
        let mut filon_two_sin_sq = Vec::new();
        for k in filon.nodes() {
            let d = delta_at(k)?;
            filon_sin_2d.push((2.0 * d).sin());
            filon_two_sin_sq.push(2.0 * d.sin().powi(2));
        }
        Ok(PhaseTransform {
            low,
            high,
            filon,
            filon_sin_2d,
            filon_two_sin_sq,
            high_k,
            split_tolerance: opts.split_tolerance,
        })
    }

    /// Coefficients of k⁻¹, k⁻³, k⁻⁵ in sin 2δ and of k⁻², k⁻⁴, k⁻⁶ in 2 sin²δ.
    pub fn tail_coefficients(&self) -> ([f64; 3], [f64; 3]) {
        let HighK { a1, a3, a5, .. } = self.high_k;
        let s = [
            2.0 * a1,
            2.0 * a3 - 4.0 * a1.powi(3) / 3.0,
            2.0 * a5 - 4.0 * a1 * a1 * a3 + 4.0 * a1.powi(5) / 15.0,
        ];
        let c = [
            2.0 * a1 * a1,
            4.0 * a1 * a3 - 2.0 * a1.powi(4) / 3.0,
            2.0 * a3 * a3 + 4.0 * a1 * a5 - 8.0 * a1.powi(3) * a3 / 3.0 + 4.0 * a1.powi(6) / 45.0,
        ];
        (s, c)
    }

    /// Contributions of k > 100; at x = 0 the sine part is the right-hand limit.
    fn high_k_tail(&self, x: f64) -> Result<(f64, f64)> {
        let (s, c) = self.tail_coefficients();
        let mut f = 0.0;
        let mut g = 0.0;
        for (j, n) in [1u32, 3, 5].into_iter().enumerate() {
            f += s[j] * oscillatory_power_tail(n, K_TAIL, x)?.im;
        }
        for (j, n) in [2u32, 4, 6].into_iter().enumerate() {
            g += c[j] * oscillatory_power_tail(n, K_TAIL, x)?.re;
        }
        Ok((f, g))
    }

    pub fn eval(&self, x: f64) -> Result<FgValue> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::KernelRange(x));
        }
        let (f_low, g_low) = self.low.sums(x);
        let (f_gl, g_gl) = self.high.sums(x);
        let f_filon = self.filon.integrate(&self.filon_sin_2d, x, Oscillator::Sin);
        let g_filon = self.filon.integrate(&self.filon_two_sin_sq, x, Oscillator::Cos);
        let split_estimate = (f_filon - f_gl).abs().max((g_filon - g_gl).abs());
        if split_estimate > self.split_tolerance {
            return Err(Error::AccuracyLoss {
                what: "f/g split consistency",
                estimate: split_estimate,
                tolerance: self.split_tolerance,
            });
        }
        let (f_mid, g_mid) = if x >= FILON_X_MIN { (f_filon, g_filon) } else { (f_gl, g_gl) };
        let (f_tail, g_tail) = self.high_k_tail(x)?;
        Ok(FgValue {
            f: f_low + f_mid + f_tail,
            g: g_low + g_mid + g_tail,
            split_estimate,
        })
    }
}

/// Large-x form of f and g:
/// f, g = A e^{−rx} ± b e^{−cx} + (d + e·x) e^{−γx}.
/// The ± b term is the scattering-length pole, the last one the bound-state
/// pole at k = iγ; A = (π/4)y₀ and r = α/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub amplitude: f64,
    pub rate: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub bound_rate: f64,
    pub window: (f64, f64),
    /// Largest |direct − tail| over the fit window for f and g.
    pub max_residual: f64,
}

impl TailFit {
    fn common(&self, x: f64) -> f64 {
        self.amplitude * (-self.rate * x).exp() + (self.d + self.e * x) * (-self.bound_rate * x).exp()
    }

    pub fn f(&self, x: f64) -> f64 {
        self.common(x) + self.b * (-self.c * x).exp()
    }

    pub fn g(&self, x: f64) -> f64 {
        self.common(x) - self.b * (-self.c * x).exp()
    }

    /// The two-exponential form without the bound-state pole term.
    pub fn two_exponential(&self, x: f64) -> (f64, f64) {
        let a = self.amplitude * (-self.rate * x).exp();
        let s = self.b * (-self.c * x).exp();
        (a + s, a - s)
    }

    /// ∫_X^∞ (f, g) e^{ikx} dx in closed form.
    fn fourier_from(&self, x0: f64, k: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let exp_int = |p: f64| {
            let z = -p + i * k;
            -(z * x0).exp() / z
        };
        let x_exp_int = |p: f64| {
            let z = -p + i * k;
            -(z * x0).exp() * (x0 / z - 1.0 / (z * z))
        };
        let common = self.amplitude * exp_int(self.rate) + self.d * exp_int(self.bound_rate) + self.e * x_exp_int(self.bound_rate);
        let s = self.b * exp_int(self.c);
        (common + s, common - s)
    }
}

/// Least squares on the window: ln((f − g)/2) linear in x gives b, c;
/// (f + g)/2 − A e^{−rx} against e^{−γx}, x e^{−γx} gives d, e.
pub fn fit_tail(model: &MorseModel, xs: &[f64], f: &[f64], g: &[f64]) -> Result<TailFit> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::Domain("tail fit needs at least three points".into()));
    }
    let amplitude = PI / 4.0 * model.y0();
    let rate = model.alpha / 2.0;
    let bound_rate = model.levels().first().map_or(model.alpha, |l| l.gamma);
    let window = (xs[0], xs[n - 1]);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let h = 0.5 * (f[i] - g[i]);
        if !(h > 0.0) {
            return Err(Error::FitFailure {
                what: "kernel tail (f − g)/2 > 0",
                residual: h,
                tolerance: 0.0,
            });
        }
        let (x, y) = (xs[i], h.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let b = ((sy - slope * sx) / nf).exp();
    let c = -slope;
    // basis scaled by e^{γx₀} so the normal equations stay O(1)
    let x0 = window.0;
    let (mut s11, mut s12, mut s22, mut s1r, mut s2r) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let x = xs[i];
        let u = (-bound_rate * (x - x0)).exp();
        let v = u * (x - x0);
        let r = (0.5 * (f[i] + g[i]) - amplitude * (-rate * x).exp()) * (bound_rate * x0).exp();
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        s1r += u * r;
        s2r += v * r;
    }
    let det = s11 * s22 - s12 * s12;
    let cu = (s1r * s22 - s2r * s12) / det;
    let cv = (s2r * s11 - s1r * s12) / det;
    // (cu + cv(x − x₀))e^{−γ(x−x₀)}e^{−γx₀} = (d + e x)e^{−γx}
    let e = cv;
    let d = cu - cv * x0;
    let mut fit = TailFit {
        amplitude,
        rate,
        b,
        c,
        d,
        e,
        bound_rate,
        window,
        max_residual: 0.0,
    };
    fit.max_residual = (0..n).map(|i| (f[i] - fit.f(xs[i])).abs().max((g[i] - fit.g(xs[i])).abs())).fold(0.0, f64::max);
    if !(c > 0.0) {
        return Err(Error::FitFailure {
            what: "kernel tail decay rate c",
            residual: c,
            tolerance: 0.0,
        });
    }
    Ok(fit)
}

/// The kernel sample grid: spacing 0.05 on [0, 3], 0.1 on [3, 30].
pub fn sample_grid(tail_start: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..60).map(|i| i as f64 / 20.0).collect();
    let n = ((tail_start - 3.0) * 10.0).round() as usize;
    xs.extend((0..=n).map(|j| 3.0 + j as f64 / 10.0));
    xs
}

/// Panels for the interpolants: geometric from 1e-4 up to 0.2, then
/// width about 0.3 up to `end`.
pub fn interpolation_edges(end: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut x = 1e-4;
    while x < 0.15 {
        edges.push(x);
        x *= 2.0;
    }
    let n = ((end - 0.2) / 0.3).ceil() as usize;
    edges.extend((0..=n).map(|j| 0.2 + (end - 0.2) * j as f64 / n as f64));
    edges
}

/// Where the scattering part needs f and g: the sample grid, the
/// interpolation nodes, audit points and tail-fit points, merged and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLayout {
    pub points: Vec<f64>,
    pub grid: Vec<f64>,
    pub edges: Vec<f64>,
    pub panel_nodes: Vec<Vec<f64>>,
    pub audit: Vec<f64>,
    pub fit_xs: Vec<f64>,
    pub tail_start: f64,
}

impl KernelLayout {
    pub fn new(opts: &KernelOptions) -> Result<Self> {
        let ts = opts.tail_start;
        if !(ts > 0.2 && opts.tail_fit_end > ts && opts.tail_fit_points >= 3 && opts.interp_degree >= 2) {
            return Err(Error::Domain(
                "kernel options: need tail_start > 0.2 < tail_fit_end, >= 3 fit points, degree >= 2".into(),
            ));
        }
        let grid = sample_grid(ts);
        let edges = interpolation_edges(ts);
        let deg = opts.interp_degree;
        let panel_nodes: Vec<Vec<f64>> = edges.windows(2).map(|w| lobatto_points(w[0], w[1], deg)).collect();
        // three audit points per panel: the first, central and last node gaps
        let audit: Vec<f64> = panel_nodes
            .iter()
            .flat_map(|p| [0.5 * (p[0] + p[1]), 0.5 * (p[deg / 2] + p[deg / 2 + 1]), 0.5 * (p[deg - 1] + p[deg])])
            .collect();
        let fit_xs: Vec<f64> = (0..opts.tail_fit_points)
            .map(|i| ts + (opts.tail_fit_end - ts) * i as f64 / (opts.tail_fit_points - 1) as f64)
            .collect();
        let mut points: Vec<f64> = grid.iter().chain(panel_nodes.iter().flatten()).chain(&audit).chain(&fit_xs).copied().collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(KernelLayout {
            points,
            grid,
            edges,
            panel_nodes,
            audit,
            fit_xs,
            tail_start: ts,
        })
    }
}

/// Everything in the kernel that does not depend on the bound states.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringPart {
    pub sample_grid: Vec<f64>,
    pub f_samples: Vec<f64>,
    pub g_samples: Vec<f64>,
    pub f_interp: PiecewiseChebyshev,
    pub g_interp: PiecewiseChebyshev,
    /// Interpolant of −(f + g)/π on the same panels.
    a_interp: PiecewiseChebyshev,
    pub tail: TailFit,
    pub tail_start: f64,
    pub audit_max: f64,
    pub split_max: f64,
    pub high_k: HighK,
}

impl ScatteringPart {
    pub fn build(model: &MorseModel, opts: &KernelOptions) -> Result<Self> {
        let transform = PhaseTransform::from_model(model, opts)?;
        Self::from_transform(model, &transform, opts)
    }

    pub fn from_transform(model: &MorseModel, transform: &PhaseTransform, opts: &KernelOptions) -> Result<Self> {
        let layout = KernelLayout::new(opts)?;
        let values: Vec<FgValue> = layout.points.par_iter().map(|&x| transform.eval(x)).collect::<Result<_>>()?;
        Self::from_values(model, &layout, &values, transform.high_k, opts)
    }

    /// Rebuilds the scattering part from f, g already evaluated at
    /// `layout.points`, e.g. read back from a cache.
    pub fn from_values(model: &MorseModel, layout: &KernelLayout, values: &[FgValue], high_k: HighK, opts: &KernelOptions) -> Result<Self> {
        if values.len() != layout.points.len() {
            return Err(Error::Domain(format!("{} kernel values for {} points", values.len(), layout.points.len())));
        }
        let KernelLayout {
            points: all,
            grid,
            edges,
            panel_nodes,
            audit,
            fit_xs,
            tail_start: ts,
        } = layout;
        let lookup = |x: f64| -> FgValue {
            let i = all.partition_point(|&t| t < x);
            values[i]
        };
        let split_max = values.iter().map(|v| v.split_estimate).fold(0.0, f64::max);

        let build = |pick: &dyn Fn(&FgValue) -> f64| -> Result<PiecewiseChebyshev> {
            let panels = edges
                .windows(2)
                .zip(panel_nodes)
                .map(|(w, nodes)| ChebyshevPanel::new(w[0], w[1], nodes.iter().map(|&x| pick(&lookup(x))).collect()))
                .collect::<Result<Vec<_>>>()?;
            PiecewiseChebyshev::new(panels)
        };
        let f_interp = build(&|v| v.f)?;
        let g_interp = build(&|v| v.g)?;
        let a_interp = build(&|v| -(v.f + v.g) / PI)?;

        let mut audit_max = 0.0f64;
        for &x in audit {
            let v = lookup(x);
            let ef = (f_interp.eval(x).unwrap_or(f64::NAN) - v.f).abs();
            let eg = (g_interp.eval(x).unwrap_or(f64::NAN) - v.g).abs();
            audit_max = audit_max.max(ef).max(eg);
        }
        if !(audit_max <= opts.audit_tolerance) {
            return Err(Error::AccuracyLoss {
                what: "kernel interpolation audit",
                estimate: audit_max,
                tolerance: opts.audit_tolerance,
            });
        }

        let fit_f: Vec<f64> = fit_xs.iter().map(|&x| lookup(x).f).collect();
        let fit_g: Vec<f64> = fit_xs.iter().map(|&x| lookup(x).g).collect();
        let tail = fit_tail(model, fit_xs, &fit_f, &fit_g)?;
        if !(tail.max_residual <= opts.tail_tolerance) {
            return Err(Error::FitFailure {
                what: "kernel tail",
                residual: tail.max_residual,
                tolerance: opts.tail_tolerance,
            });
        }

        Ok(ScatteringPart {
            f_samples: grid.iter().map(|&x| lookup(x).f).collect(),
            g_samples: grid.iter().map(|&x| lookup(x).g).collect(),
            sample_grid: grid.clone(),
            f_interp,
            g_interp,
            a_interp,
            tail,
            tail_start: *ts,
            audit_max,
            split_max,
            high_k,
        })
    }

    fn check(x: f64) -> Result<()> {
        if x >= 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::KernelRange(x))
        }
    }

    pub fn f(&self, x: f64) -> Result<f64> {
        Self::check(x)?;
        Ok(if x < self.tail_start {
            self.f_interp.eval(x).ok_or(Error::KernelRange(x))?
        } else {
            self.tail.f(x)
        })
    }

    pub fn g(&self, x: f64) -> Result<f64> {
        Self::check(x)?;
        Ok(if x < self.tail_start {
            self.g_interp.eval(x).ok_or(Error::KernelRange(x))?
        } else {
            self.tail.g(x)
        })
    }

    /// A_s(x) = −(f + g)/π
    pub fn a_s(&self, x: f64) -> Result<f64> {
        Self::check(x)?;
        if x < self.tail_start {
            return self.a_interp.eval(x).ok_or(Error::KernelRange(x));
        }
        Ok(-(self.tail.f(x) + self.tail.g(x)) / PI)
    }

    /// A_s(−x) = (f − g)/π for x ≥ 0.
    pub fn a_s_reflected(&self, x: f64) -> Result<f64> {
        Ok((self.f(x)? - self.g(x)?) / PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub s_sq: f64,
    pub gamma: f64,
}

/// How the bound-state exponentials enter A₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSign {
    /// A₀ = A_s − Σ s² e^{−γx}, the correct form.
    Minus,
    /// A₀ = A_s + Σ s² e^{−γx}, only for the sign experiment.
    Plus,
}

impl BoundSign {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundSign::Minus => "minus",
            BoundSign::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseCheck {
    pub sin_sq_delta: f64,
    pub sin_2delta: f64,
}

/// A₀(x) with a shared scattering part; cheap to clone and to re-dress
/// with other bound terms.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRep {
    scattering: Arc<ScatteringPart>,
    bound_terms: Vec<BoundTerm>,
    sign: BoundSign,
}

impl KernelRep {
    /// Scattering part from the model's phase shift, bound terms from the
    /// closed-form spectrum.
    pub fn build(model: &MorseModel, opts: &KernelOptions) -> Result<Self> {
        let scattering = Arc::new(ScatteringPart::build(model, opts)?);
        let terms = bound_spectra()
            .get("closed_form")?
            .states(model)?
            .iter()
            .map(|s| BoundTerm { s_sq: s.s_sq, gamma: s.gamma })
            .collect();
        Ok(Self::new(scattering, terms))
    }

    pub fn new(scattering: Arc<ScatteringPart>, bound_terms: Vec<BoundTerm>) -> Self {
        KernelRep {
            scattering,
            bound_terms,
            sign: BoundSign::Minus,
        }
    }

    /// The wrong-sign kernel A_s + Σ s² e^{−γx}, for the sign experiment only.
    pub fn wrong_sign_experiment(scattering: Arc<ScatteringPart>, bound_terms: Vec<BoundTerm>) -> Self {
        KernelRep {
            scattering,
            bound_terms,
            sign: BoundSign::Plus,
        }
    }

    /// Same scattering part and sign, other bound terms.
    pub fn with_bound_terms(&self, bound_terms: Vec<BoundTerm>) -> Self {
        KernelRep {
            scattering: Arc::clone(&self.scattering),
            bound_terms,
            sign: self.sign,
        }
    }

    /// Same kernel with the single level's s² replaced.
    pub fn with_s0_sq(&self, s0_sq: f64) -> Result<Self> {
        match self.bound_terms.as_slice() {
            [t] => Ok(self.with_bound_terms(vec![BoundTerm { s_sq: s0_sq, gamma: t.gamma }])),
            _ => Err(Error::Domain(format!(
                "s0 sweep needs exactly one bound term (have {})",
                self.bound_terms.len()
            ))),
        }
    }

    pub fn scattering(&self) -> &Arc<ScatteringPart> {
        &self.scattering
    }

    pub fn bound_terms(&self) -> &[BoundTerm] {
        &self.bound_terms
    }

    pub fn sign(&self) -> BoundSign {
        self.sign
    }

    pub fn scattering_kernel(&self, x: f64) -> Result<f64> {
        self.scattering.a_s(x)
    }

    pub fn bound_sum(&self, x: f64) -> f64 {
        self.bound_terms.iter().map(|t| t.s_sq * (-t.gamma * x).exp()).sum()
    }

    pub fn full_kernel(&self, x: f64) -> Result<f64> {
        let a_s = self.scattering.a_s(x)?;
        Ok(match self.sign {
            BoundSign::Minus => a_s - self.bound_sum(x),
            BoundSign::Plus => a_s + self.bound_sum(x),
        })
    }

    /// sin²δ(k) = (1/π)∫₀^∞ g cos kx dx and sin 2δ(k) = (2/π)∫₀^∞ f sin kx dx,
    /// interpolants below the tail start and the tail in closed form above.
    pub fn inverse_check(&self, k: f64) -> Result<InverseCheck> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("inverse check needs k > 0 (got {k})")));
        }
        let sp = &self.scattering;
        let widest = sp.f_interp.panels.iter().map(|p| p.b - p.a).fold(0.0, f64::max);
        // 64 points per panel resolve about 40 radians
        if k * widest > 40.0 {
            return Err(Error::AccuracyLoss {
                what: "inverse transform panel resolution",
                estimate: k * widest,
                tolerance: 40.0,
            });
        }
        let base = gauss_legendre(64, -1.0, 1.0)?;
        let mut fs = CompensatedSum::default();
        let mut gc = CompensatedSum::default();
        for (pf, pg) in sp.f_interp.panels.iter().zip(&sp.g_interp.panels) {
            let (mid, half) = (0.5 * (pf.a + pf.b), 0.5 * (pf.b - pf.a));
            for (&u, &w) in base.nodes.iter().zip(&base.weights) {
                let x = mid + half * u;
                let (s, c) = (k * x).sin_cos();
                fs.add(half * w * pf.eval(x) * s);
                gc.add(half * w * pg.eval(x) * c);
            }
        }
        let (tf, tg) = sp.tail.fourier_from(sp.tail_start, k);
        Ok(InverseCheck {
            sin_sq_delta: (gc.value() + tg.re) / PI,
            sin_2delta: 2.0 * (fs.value() + tf.im) / PI,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitFunction {
    F,
    G,
}

impl FitFunction {
    pub fn as_str(self) -> &'static str {
        match self {
            FitFunction::F => "f",
            FitFunction::G => "g",
        }
    }
}

/// One range of a piecewise rational fit with its twelve coefficients a..l.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPiece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: [f64; 12],
}

impl RationalPiece {
    /// (a + bx + … + fx⁵)/(1 + gx + … + lx⁶)
    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        let num = c[..6].iter().rev().fold(0.0, |acc, &v| acc * x + v);
        let den = c[6..].iter().rev().fold(0.0, |acc, &v| acc * x + v) * x + 1.0;
        num / den
    }
}

/// Piecewise rational fits of f and of g/2. The first range of each is
/// closed, the others are open on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFitFixture {
    pub f: Vec<RationalPiece>,
    pub g: Vec<RationalPiece>,
}

const RATIONAL_FITS: &str = include_str!("../fixtures/rational_fits.txt");

impl RationalFitFixture {
    pub fn bundled() -> Result<Self> {
        Self::parse(RATIONAL_FITS)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut breaks: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut rows: [Vec<Vec<f64>>; 2] = [vec![Vec::new(); 12], vec![Vec::new(); 12]];
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Domain(format!("rational fit fixture line {}: `{line}`", ln + 1));
            let mut it = line.split_whitespace();
            let which = match it.next() {
                Some("f") => 0,
                Some("g") => 1,
                _ => return Err(bad()),
            };
            let key = it.next().ok_or_else(bad)?;
            let nums = it.map(|s| s.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<f64>>>()?;
            if key == "breaks" {
                breaks[which] = nums;
            } else {
                let idx = key
                    .bytes()
                    .next()
                    .filter(|_| key.len() == 1)
                    .map(|b| b.wrapping_sub(b'a') as usize)
                    .filter(|&i| i < 12)
                    .ok_or_else(bad)?;
                rows[which][idx] = nums;
            }
        }
        let pieces = |w: usize| -> Result<Vec<RationalPiece>> {
            let br = &breaks[w];
            if br.len() < 2 || br.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(Error::Domain("rational fit fixture: bad range breaks".into()));
            }
            let n = br.len() - 1;
            (0..n)
                .map(|j| {
                    let mut coeffs = [0.0; 12];
                    for (i, row) in rows[w].iter().enumerate() {
                        if row.len() != n {
                            return Err(Error::Domain(format!(
                                "rational fit fixture: row {} has {} columns, expected {n}",
                                (b'a' + i as u8) as char,
                                row.len()
                            )));
                        }
                        coeffs[i] = row[j];
                    }
                    Ok(RationalPiece {
                        lo: br[j],
                        hi: br[j + 1],
                        coeffs,
                    })
                })
                .collect()
        };
        Ok(RationalFitFixture { f: pieces(0)?, g: pieces(1)? })
    }

    pub fn pieces(&self, which: FitFunction) -> &[RationalPiece] {
        match which {
            FitFunction::F => &self.f,
            FitFunction::G => &self.g,
        }
    }

    pub fn range(&self, which: FitFunction) -> (f64, f64) {
        let p = self.pieces(which);
        (p[0].lo, p[p.len() - 1].hi)
    }

    pub fn eval(&self, which: FitFunction, x: f64) -> Result<f64> {
        let p = self.pieces(which);
        let piece = p
            .iter()
            .enumerate()
            .find(|(i, q)| if *i == 0 { x >= q.lo && x <= q.hi } else { x > q.lo && x <= q.hi })
            .map(|(_, q)| q)
            .ok_or_else(|| Error::Domain(format!("x = {x} outside the {} fit ranges", which.as_str())))?;
        Ok(piece.eval(x))
    }
}

/// Largest |computed − fit| over one fit range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureDeviation {
    pub which: FitFunction,
    pub lo: f64,
    pub hi: f64,
    pub max_abs: f64,
    pub at: f64,
}

/// Compares f and g/2 with the fits at `samples` evenly spaced points per
/// range (both ends included).
pub fn fixture_deviations(rep: &ScatteringPart, fix: &RationalFitFixture, samples: usize) -> Result<Vec<FixtureDeviation>> {
    let mut out = Vec::new();
    for which in [FitFunction::F, FitFunction::G] {
        for (i, p) in fix.pieces(which).iter().enumerate() {
            let mut worst = FixtureDeviation {
                which,
                lo: p.lo,
                hi: p.hi,
                max_abs: 0.0,
                at: p.lo,
            };
            for j in 0..samples {
                let t = if samples > 1 { j as f64 / (samples - 1) as f64 } else { 0.5 };
                let mut x = p.lo + (p.hi - p.lo) * t;
                if i > 0 && j == 0 {
                    // left end is open
                    x = p.lo + 1e-9 * (p.hi - p.lo);
                }
                let computed = match which {
                    FitFunction::F => rep.f(x)?,
                    FitFunction::G => 0.5 * rep.g(x)?,
                };
                let dev = (computed - p.eval(x)).abs();
                if dev > worst.max_abs {
                    worst.max_abs = dev;
                    worst.at = x;
                }
            }
            out.push(worst);
        }
    }
    Ok(out)
}
