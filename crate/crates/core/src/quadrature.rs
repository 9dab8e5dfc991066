//! Gauss–Legendre rules, composite panelling, Filon's rule for oscillatory
//! integrands and the algebraic map of (−1, 1) onto a half line.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Concatenation of an `n`-point rule over every panel.
    pub fn composite(n: usize, panels: &[(f64, f64)]) -> Result<QuadratureRule> {
        check_panels(panels)?;
        let base = gauss_legendre(n, -1.0, 1.0)?;
        let mut nodes = Vec::with_capacity(n * panels.len());
        let mut weights = Vec::with_capacity(n * panels.len());
        for &(a, b) in panels {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&x, &w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            domain: (panels[0].0, panels[panels.len() - 1].1),
        })
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / ((x - 1.0) * (x + 1.0));
    (p1, dp)
}

pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 || !(a < b) {
        return Err(Error::Domain(format!("gauss_legendre needs n >= 1 and a < b (n = {n}, a = {a}, b = {b})")));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                dp = legendre(n, z).1;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: "Legendre root finder",
                terms: 100,
                estimate: legendre(n, z).0.abs(),
            });
        }
        let wi = 2.0 / ((1.0 - z) * (1.0 + z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok(QuadratureRule {
        nodes: x.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&t| half * t).collect(),
        domain: (a, b),
    })
}

fn check_panels(panels: &[(f64, f64)]) -> Result<()> {
    if panels.is_empty() {
        return Err(Error::Domain("no panels".into()));
    }
    for (i, &(a, b)) in panels.iter().enumerate() {
        if !(a < b) {
            return Err(Error::Domain(format!("panel {i} is empty or reversed: ({a}, {b})")));
        }
        if i > 0 && a < panels[i - 1].1 {
            return Err(Error::Domain(format!("panel {i} overlaps its predecessor")));
        }
    }
    Ok(())
}

pub fn composite<F: FnMut(f64) -> f64>(rule_size: usize, panels: &[(f64, f64)], f: F) -> Result<f64> {
    Ok(QuadratureRule::composite(rule_size, panels)?.integrate(f))
}

/// `n` equal panels covering [a, b].
pub fn linear_panels(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
            (lo, hi)
        })
        .collect()
}

/// Geometrically growing panels, `per_decade` per factor of ten.
pub fn log_panels(a: f64, b: f64, per_decade: usize) -> Vec<(f64, f64)> {
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            let lo = if i == 0 { a } else { (la + (lb - la) * i as f64 / n as f64).exp() };
            let hi = if i + 1 == n { b } else { (la + (lb - la) * (i + 1) as f64 / n as f64).exp() };
            (lo, hi)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oscillator {
    Sin,
    Cos,
}

/// Filon coefficient functions α, β, γ of θ = h·x.
pub fn filon_coefficients(theta: f64) -> (f64, f64, f64) {
    let t = theta;
    if t.abs() < 1.0 / 6.0 {
        let t2 = t * t;
        let t3 = t2 * t;
        let alpha = t3 * (2.0 / 45.0 + t2 * (-2.0 / 315.0 + t2 * (2.0 / 4725.0 + t2 * (-8.0 / 467775.0 + t2 * (4.0 / 8513505.0 - t2 * 2.0 / 212837625.0)))));
        let beta =
            2.0 / 3.0 + t2 * (2.0 / 15.0 + t2 * (-4.0 / 105.0 + t2 * (2.0 / 567.0 + t2 * (-4.0 / 22275.0 + t2 * (4.0 / 675675.0 - t2 * 8.0 / 58046625.0)))));
        let gamma = 4.0 / 3.0
            + t2 * (-2.0 / 15.0 + t2 * (1.0 / 210.0 + t2 * (-1.0 / 11340.0 + t2 * (1.0 / 997920.0 + t2 * (-1.0 / 129729600.0 + t2 / 23351328000.0)))));
        return (alpha, beta, gamma);
    }
    let (s, c) = t.sin_cos();
    let t3 = t * t * t;
    let alpha = (t * t + t * s * c - 2.0 * s * s) / t3;
    let beta = 2.0 * (t * (1.0 + c * c) - 2.0 * s * c) / t3;
    let gamma = 4.0 * (s - t * c) / t3;
    (alpha, beta, gamma)
}

/// Equally spaced Filon grid on [a, b] with `n_panels` three-point panels.
#[derive(Debug, Clone, PartialEq)]
pub struct FilonGrid {
    pub a: f64,
    pub b: f64,
    pub n_panels: usize,
}

impl FilonGrid {
    pub fn new(a: f64, b: f64, n_panels: usize) -> Result<Self> {
        if !(a < b) || n_panels == 0 {
            return Err(Error::Domain(format!("Filon grid needs a < b and n_panels >= 1 (a = {a}, b = {b})")));
        }
        Ok(FilonGrid { a, b, n_panels })
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (2 * self.n_panels) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = 2 * self.n_panels;
        let h = self.step();
        (0..=m).map(|i| if i == m { self.b } else { self.a + h * i as f64 }).collect()
    }

    /// ∫_a^b f(k)·sin(kx) dk (or cos) from envelope values at `nodes()`.
    pub fn integrate(&self, values: &[f64], x: f64, osc: Oscillator) -> f64 {
        let m = 2 * self.n_panels;
        assert_eq!(values.len(), m + 1, "Filon sample count");
        let h = self.step();
        let (al, be, ga) = filon_coefficients(h * x);
        let nodes = self.nodes();
        let trig = |k: f64| -> (f64, f64) {
            let (s, c) = (k * x).sin_cos();
            match osc {
                Oscillator::Sin => (s, c),
                Oscillator::Cos => (c, s),
            }
        };
        let mut even = 0.0;
        let mut odd = 0.0;
        for (i, (&k, &v)) in nodes.iter().zip(values).enumerate() {
            let t = v * trig(k).0;
            if i % 2 == 0 {
                even += t;
            } else {
                odd += t;
            }
        }
        let (ta, ca) = trig(self.a);
        let (tb, cb) = trig(self.b);
        let (fa, fb) = (values[0], values[m]);
        even -= 0.5 * (fa * ta + fb * tb);
        let boundary = match osc {
            Oscillator::Sin => fa * ca - fb * cb,
            Oscillator::Cos => fb * cb - fa * ca,
        };
        h * (al * boundary + be * even + ga * odd)
    }
}

pub fn filon_sin<F: FnMut(f64) -> f64>(f_slow: F, k_interval: (f64, f64), x: f64, n_panels: usize) -> Result<f64> {
    filon(f_slow, k_interval, x, n_panels, Oscillator::Sin)
}

pub fn filon_cos<F: FnMut(f64) -> f64>(f_slow: F, k_interval: (f64, f64), x: f64, n_panels: usize) -> Result<f64> {
    filon(f_slow, k_interval, x, n_panels, Oscillator::Cos)
}

fn filon<F: FnMut(f64) -> f64>(f_slow: F, (a, b): (f64, f64), x: f64, n: usize, osc: Oscillator) -> Result<f64> {
    let grid = FilonGrid::new(a, b, n)?;
    let values: Vec<f64> = grid.nodes().into_iter().map(f_slow).collect();
    Ok(grid.integrate(&values, x, osc))
}

/// Rule on (R, ∞) from y = R + α₀(1 − u)/(1 + u), u ∈ (−1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRule {
    pub base: QuadratureRule,
    pub r: f64,
    pub alpha0: f64,
    pub mapped_nodes: Vec<f64>,
    pub mapped_weights: Vec<f64>,
}

pub fn map_semi_infinite(base: &QuadratureRule, r: f64, alpha0: f64) -> Result<MappedRule> {
    if !(r >= 0.0) || !(alpha0 > 0.0) {
        return Err(Error::Domain(format!("map needs R >= 0 and alpha0 > 0 (R = {r}, alpha0 = {alpha0})")));
    }
    if base.domain != (-1.0, 1.0) {
        return Err(Error::Domain("map expects a base rule on (-1, 1)".into()));
    }
    let mut pairs: Vec<(f64, f64)> = base
        .nodes
        .iter()
        .zip(&base.weights)
        .map(|(&u, &w)| (r + alpha0 * (1.0 - u) / (1.0 + u), 2.0 * alpha0 * w / ((1.0 + u) * (1.0 + u))))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(MappedRule {
        base: base.clone(),
        r,
        alpha0,
        mapped_nodes: pairs.iter().map(|p| p.0).collect(),
        mapped_weights: pairs.iter().map(|p| p.1).collect(),
    })
}

impl MappedRule {
    /// Scale that puts the node nearest u = −1 at R + Δ.
    pub fn alpha0_for_width(base: &QuadratureRule, delta: f64) -> f64 {
        let x0 = base.nodes[0];
        delta * (1.0 + x0) / (1.0 - x0)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.mapped_nodes.iter().zip(&self.mapped_weights).map(|(&y, &w)| w * f(y)).sum()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
