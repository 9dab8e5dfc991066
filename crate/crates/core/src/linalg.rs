//! Dense square solves by orthogonal triangularization, with an ∞-norm
//! condition estimate.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Square matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                m.data[j * n + i] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n + i] = v;
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Orthogonal {
    /// Reflectors I − βvvᵀ with v stored from the pivot row down.
    Householder(Vec<(Vec<f64>, f64)>),
    /// Rotations (i, j, c, s) acting on rows i < j, in application order.
    Givens(Vec<(usize, usize, f64, f64)>),
}

/// A = QR with R upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    n: usize,
    r: Matrix,
    q: Orthogonal,
}

impl QrFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r.get(i, i)).collect()
    }

    fn apply_qt(&self, b: &mut [f64]) {
        match &self.q {
            Orthogonal::Householder(refl) => {
                for (k, (v, beta)) in refl.iter().enumerate() {
                    let s: f64 = v.iter().zip(&b[k..]).map(|(a, c)| a * c).sum();
                    for (bi, vi) in b[k..].iter_mut().zip(v) {
                        *bi -= beta * s * vi;
                    }
                }
            }
            Orthogonal::Givens(rot) => {
                for &(i, j, c, s) in rot {
                    let (bi, bj) = (b[i], b[j]);
                    b[i] = c * bi + s * bj;
                    b[j] = -s * bi + c * bj;
                }
            }
        }
    }

    fn apply_q(&self, b: &mut [f64]) {
        match &self.q {
            Orthogonal::Householder(refl) => {
                for (k, (v, beta)) in refl.iter().enumerate().rev() {
                    let s: f64 = v.iter().zip(&b[k..]).map(|(a, c)| a * c).sum();
                    for (bi, vi) in b[k..].iter_mut().zip(v) {
                        *bi -= beta * s * vi;
                    }
                }
            }
            Orthogonal::Givens(rot) => {
                for &(i, j, c, s) in rot.iter().rev() {
                    let (bi, bj) = (b[i], b[j]);
                    b[i] = c * bi - s * bj;
                    b[j] = s * bi + c * bj;
                }
            }
        }
    }

    /// x with A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.r.get(i, j) * y[j];
            }
            y[i] = s / self.r.get(i, i);
        }
        y
    }

    /// x with Aᵀ x = b.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.r.get(j, i) * z[j];
            }
            z[i] = s / self.r.get(i, i);
        }
        self.apply_q(&mut z);
        z
    }
}

/// Relative size below which a diagonal entry of R counts as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

fn check_pivots(r: &Matrix, scale: f64) -> Result<()> {
    for i in 0..r.n {
        let p = r.get(i, i);
        if !(p.abs() > PIVOT_TOLERANCE * scale) {
            return Err(Error::SingularSystem { index: i, pivot: p });
        }
    }
    Ok(())
}

pub trait LinearSolver: Named + Send + Sync {
    fn factor(&self, a: &Matrix) -> Result<QrFactors>;
}

pub struct HouseholderQr;
pub struct GivensQr;

impl Named for HouseholderQr {
    fn name(&self) -> &'static str {
        "householder"
    }
}

impl LinearSolver for HouseholderQr {
    fn factor(&self, a: &Matrix) -> Result<QrFactors> {
        let n = a.n;
        let scale = a.norm_frobenius();
        let mut r = a.clone();
        let mut refl = Vec::with_capacity(n);
        for k in 0..n {
            let x = &r.data[k * n + k..(k + 1) * n];
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x.to_vec();
            // reflect onto −sign(x₀)‖x‖e₁ to avoid cancellation
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|t| t * t).sum();
            let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            for j in k..n {
                let col = &mut r.data[j * n + k..(j + 1) * n];
                let s: f64 = v.iter().zip(col.iter()).map(|(a, c)| a * c).sum();
                for (ci, vi) in col.iter_mut().zip(&v) {
                    *ci -= beta * s * vi;
                }
            }
            for i in k + 1..n {
                r.set(i, k, 0.0);
            }
            refl.push((v, beta));
        }
        check_pivots(&r, scale)?;
        Ok(QrFactors {
            n,
            r,
            q: Orthogonal::Householder(refl),
        })
    }
}

impl Named for GivensQr {
    fn name(&self) -> &'static str {
        "givens"
    }
}

impl LinearSolver for GivensQr {
    fn factor(&self, a: &Matrix) -> Result<QrFactors> {
        let n = a.n;
        let scale = a.norm_frobenius();
        let mut r = a.clone();
        let mut rot = Vec::new();
        for k in 0..n {
            for i in (k + 1..n).rev() {
                let (p, q) = (r.get(k, k), r.get(i, k));
                if q == 0.0 {
                    continue;
                }
                let h = p.hypot(q);
                let (c, s) = (p / h, q / h);
                for j in k..n {
                    let (rk, ri) = (r.get(k, j), r.get(i, j));
                    r.set(k, j, c * rk + s * ri);
                    r.set(i, j, -s * rk + c * ri);
                }
                r.set(i, k, 0.0);
                rot.push((k, i, c, s));
            }
        }
        check_pivots(&r, scale)?;
        Ok(QrFactors {
            n,
            r,
            q: Orthogonal::Givens(rot),
        })
    }
}

pub fn linear_solvers() -> &'static Registry<dyn LinearSolver> {
    static REG: OnceLock<Registry<dyn LinearSolver>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<dyn LinearSolver> = Registry::new("linear solver");
        reg.register(Box::new(HouseholderQr)).register(Box::new(GivensQr));
        reg
    })
}

/// Hager's estimate of ‖A⁻¹‖₁ from solves with A and Aᵀ.
fn hager_inverse_norm1(solve: impl Fn(&[f64]) -> Vec<f64>, solve_t: impl Fn(&[f64]) -> Vec<f64>, n: usize) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = solve(&x);
        est = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = solve_t(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |b, (i, &v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est
}

/// Estimated ‖A‖∞‖A⁻¹‖∞; ‖A⁻¹‖∞ = ‖A⁻ᵀ‖₁, so the roles of the solves swap.
pub fn condition_inf(a: &Matrix, qr: &QrFactors) -> f64 {
    a.norm_inf() * hager_inverse_norm1(|b| qr.solve_transpose(b), |b| qr.solve(b), a.n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    /// ‖Ax − b‖∞
    pub residual: f64,
    pub condition: f64,
}

pub fn solve_dense(solver: &dyn LinearSolver, a: &Matrix, b: &[f64]) -> Result<Solution> {
    if b.len() != a.n {
        return Err(Error::Domain(format!("right-hand side has length {}, matrix is {}x{}", b.len(), a.n, a.n)));
    }
    let qr = solver.factor(a)?;
    let x = qr.solve(b);
    let ax = a.mul_vec(&x);
    let residual = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let condition = condition_inf(a, &qr);
    Ok(Solution { x, residual, condition })
}
