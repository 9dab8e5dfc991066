//! Piecewise Chebyshev interpolation on Chebyshev–Lobatto points.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPanel {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

/// Lobatto points of a degree-`degree` panel on [a, b], ascending.
pub fn lobatto_points(a: f64, b: f64, degree: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..=degree)
        .map(|j| {
            if j == 0 {
                a
            } else if j == degree {
                b
            } else {
                mid - half * (PI * j as f64 / degree as f64).cos()
            }
        })
        .collect()
}

impl ChebyshevPanel {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if !(a < b) || values.len() < 2 {
            return Err(Error::Domain(format!(
                "Chebyshev panel needs a < b and at least two values (a = {a}, b = {b}, n = {})",
                values.len()
            )));
        }
        let nodes = lobatto_points(a, b, values.len() - 1);
        Ok(ChebyshevPanel { a, b, nodes, values })
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    /// Barycentric formula with weights (−1)^j, halved at both ends.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.degree();
        let (mut num, mut den) = (0.0, 0.0);
        for (j, (&xj, &fj)) in self.nodes.iter().zip(&self.values).enumerate() {
            let d = x - xj;
            if d == 0.0 {
                return fj;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let t = w / d;
            num += t * fj;
            den += t;
        }
        num / den
    }
}

/// Contiguous panels covering [first.a, last.b].
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseChebyshev {
    pub panels: Vec<ChebyshevPanel>,
}

impl PiecewiseChebyshev {
    pub fn new(panels: Vec<ChebyshevPanel>) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::Domain("no interpolation panels".into()));
        }
        for w in panels.windows(2) {
            if w[0].b != w[1].a {
                return Err(Error::Domain(format!("panels not contiguous at {} / {}", w[0].b, w[1].a)));
            }
        }
        Ok(PiecewiseChebyshev { panels })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.panels[0].a, self.panels[self.panels.len() - 1].b)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.domain();
        x >= a && x <= b
    }

    /// None outside the covered interval.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if !self.contains(x) {
            return None;
        }
        let i = self.panels.partition_point(|p| p.b < x).min(self.panels.len() - 1);
        Some(self.panels[i].eval(x))
    }
}
