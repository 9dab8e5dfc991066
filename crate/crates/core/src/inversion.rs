//! Nyström solution of T(x) = A₀(2r + x) + ∫₀^∞ A₀(2r + x + y) T(y) dy,
//! A(r, r) = T(0) and V(r) = −2C d/dr A(r, r).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelRep;
use crate::linalg::{linear_solvers, solve_dense, LinearSolver, Matrix, Solution};
use crate::morse::MorseModel;
use crate::quadrature::{gauss_legendre, linear_panels, map_semi_infinite, MappedRule, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromSpec {
    /// Split point between the finite panels and the mapped half line.
    pub r_split: f64,
    pub finite_panels: usize,
    pub points_per_panel: usize,
    /// Width parameter of the half-line map.
    pub delta: f64,
    pub mapped_points: usize,
}

impl Default for NystromSpec {
    fn default() -> Self {
        NystromSpec {
            r_split: 15.0,
            finite_panels: 2,
            points_per_panel: 64,
            delta: 10_000.0,
            mapped_points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NystromGrid {
    pub spec: NystromSpec,
    pub mapped: MappedRule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NystromGrid {
    pub fn new(spec: NystromSpec) -> Result<Self> {
        if !(spec.r_split > 0.0 && spec.delta > 0.0) || spec.finite_panels == 0 || spec.points_per_panel == 0 || spec.mapped_points == 0 {
            return Err(Error::Domain(format!("invalid Nystrom grid {spec:?}")));
        }
        let finite = QuadratureRule::composite(spec.points_per_panel, &linear_panels(0.0, spec.r_split, spec.finite_panels))?;
        let base = gauss_legendre(spec.mapped_points, -1.0, 1.0)?;
        let alpha0 = MappedRule::alpha0_for_width(&base, spec.delta);
        let mapped = map_semi_infinite(&base, spec.r_split, alpha0)?;
        let mut pairs: Vec<(f64, f64)> = finite
            .nodes
            .iter()
            .zip(&finite.weights)
            .chain(mapped.mapped_nodes.iter().zip(&mapped.mapped_weights))
            .map(|(&x, &w)| (x, w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(NystromGrid {
            spec,
            mapped,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A finer rule of the same shape, used to audit off-node residuals.
    pub fn refined(&self) -> Result<NystromGrid> {
        let s = self.spec;
        NystromGrid::new(NystromSpec {
            finite_panels: 2 * s.finite_panels,
            mapped_points: 2 * s.mapped_points,
            ..s
        })
    }
}

/// (I − M)T = b with Mₙᵢ = Wᵢ A₀(2r + Xₙ + Xᵢ), bₙ = A₀(2r + Xₙ).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub r: f64,
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

pub fn assemble(kernel: &KernelRep, r: f64, grid: &NystromGrid) -> Result<LinearSystem> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("reconstruction needs r >= 0 (got {r})")));
    }
    let n = grid.len();
    let x = &grid.nodes;
    let mut matrix = Matrix::identity(n);
    // A₀ depends on Xₙ + Xᵢ only, so fill the symmetric part once
    for i in 0..n {
        for m in i..n {
            let a = kernel.full_kernel(2.0 * r + x[m] + x[i])?;
            matrix.set(m, i, matrix.get(m, i) - grid.weights[i] * a);
            if m != i {
                matrix.set(i, m, matrix.get(i, m) - grid.weights[m] * a);
            }
        }
    }
    let rhs = x.iter().map(|&xn| kernel.full_kernel(2.0 * r + xn)).collect::<Result<_>>()?;
    Ok(LinearSystem { r, matrix, rhs })
}

pub fn solve_t(system: &LinearSystem, solver: &dyn LinearSolver) -> Result<Solution> {
    solve_dense(solver, &system.matrix, &system.rhs)
}

/// Nyström interpolant T(x) = A₀(2r + x) + Σ Wᵢ A₀(2r + x + Xᵢ) Tᵢ.
pub fn t_at(kernel: &KernelRep, r: f64, grid: &NystromGrid, t: &[f64], x: f64) -> Result<f64> {
    let mut s = kernel.full_kernel(2.0 * r + x)?;
    for ((&xi, &wi), &ti) in grid.nodes.iter().zip(&grid.weights).zip(t) {
        s += wi * kernel.full_kernel(2.0 * r + x + xi)? * ti;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPoint {
    pub r: f64,
    pub a: f64,
    /// ‖(I − M)T − b‖∞
    pub linear_residual: f64,
    pub condition: f64,
    /// Largest off-node residual of the integral equation.
    pub off_node_residual: f64,
}

/// Midpoints of eight node gaps spread over the grid.
pub fn off_node_points(grid: &NystromGrid) -> Vec<f64> {
    let n = grid.len();
    (0..8)
        .map(|j| {
            let i = (j * (n - 2)) / 7;
            0.5 * (grid.nodes[i] + grid.nodes[i + 1])
        })
        .collect()
}

/// Residual of the integral equation at x with the interpolant T, the
/// integral taken on the refined rule.
fn off_node_residual(kernel: &KernelRep, r: f64, grid: &NystromGrid, fine: &NystromGrid, t_fine: &[f64], x: f64, t: &[f64]) -> Result<f64> {
    let tx = t_at(kernel, r, grid, t, x)?;
    let mut integral = 0.0;
    for ((&y, &w), &ty) in fine.nodes.iter().zip(&fine.weights).zip(t_fine) {
        integral += w * kernel.full_kernel(2.0 * r + x + y)? * ty;
    }
    Ok((tx - kernel.full_kernel(2.0 * r + x)? - integral).abs())
}

pub fn a_diagonal(kernel: &KernelRep, r: f64, grid: &NystromGrid, solver: &dyn LinearSolver, fine: Option<&NystromGrid>) -> Result<DiagonalPoint> {
    let system = assemble(kernel, r, grid)?;
    let sol = solve_t(&system, solver)?;
    let a = t_at(kernel, r, grid, &sol.x, 0.0)?;
    let mut off = 0.0f64;
    if let Some(fine) = fine {
        let t_fine = fine.nodes.iter().map(|&y| t_at(kernel, r, grid, &sol.x, y)).collect::<Result<Vec<_>>>()?;
        for x in off_node_points(grid) {
            off = off.max(off_node_residual(kernel, r, grid, fine, &t_fine, x, &sol.x)?);
        }
    }
    Ok(DiagonalPoint {
        r,
        a,
        linear_residual: sol.residual,
        condition: sol.condition,
        off_node_residual: off,
    })
}

/// Uniform r grid start, start + h, …, end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid {
    pub start: f64,
    pub end: f64,
    pub h: f64,
}

impl Default for RGrid {
    fn default() -> Self {
        RGrid {
            start: 0.3,
            end: 12.0,
            h: 0.01,
        }
    }
}

impl RGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.h > 0.0 && self.end > self.start && self.start >= 0.0) {
            return Err(Error::Domain(format!("invalid r grid {self:?}")));
        }
        let n = ((self.end - self.start) / self.h).round() as usize;
        if n < 4 {
            return Err(Error::Domain("r grid needs at least five points for the derivative stencils".into()));
        }
        Ok((0..=n).map(|i| self.start + self.h * i as f64).collect())
    }
}

/// Five-point first derivative on a uniform grid, one-sided at both ends.
pub fn five_point_derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::Domain("five-point derivative needs at least five samples".into()));
    }
    let v = values;
    let d = 12.0 * h;
    let mut out = vec![0.0; n];
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / d;
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / d;
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / d;
    }
    out[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / d;
    out[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / d;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    pub solver: String,
    /// Limit on the off-node residual; `None` skips the audit.
    pub residual_tolerance: Option<f64>,
    /// C in V = −2C dA/dr.
    pub c: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            solver: "householder".into(),
            residual_tolerance: Some(1e-8),
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub r_grid: Vec<f64>,
    pub a_diag: Vec<f64>,
    /// Same length as `a_diag`: the end points use one-sided stencils.
    pub v: Vec<f64>,
    pub s0_sq_used: Option<f64>,
    pub residual_report: Vec<f64>,
    pub linear_residuals: Vec<f64>,
    pub conditions: Vec<f64>,
}

impl ReconstructionResult {
    /// max |V − V_model| over r in [lo, hi].
    pub fn max_deviation(&self, model: &MorseModel, lo: f64, hi: f64) -> f64 {
        self.r_grid
            .iter()
            .zip(&self.v)
            .filter(|(&r, _)| r >= lo - 1e-12 && r <= hi + 1e-12)
            .map(|(&r, &v)| (v - model.potential(r)).abs())
            .fold(0.0, f64::max)
    }

    /// V at the grid point nearest r.
    pub fn v_near(&self, r: f64) -> f64 {
        let i = self
            .r_grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()))
            .map_or(0, |(i, _)| i);
        self.v[i]
    }
}

pub fn reconstruct(kernel: &KernelRep, r_grid: &RGrid, grid: &NystromGrid, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    let rs = r_grid.points()?;
    let solver = linear_solvers().get(&opts.solver)?;
    let fine = match opts.residual_tolerance {
        Some(_) => Some(grid.refined()?),
        None => None,
    };
    let points = rs
        .par_iter()
        .map(|&r| a_diagonal(kernel, r, grid, solver, fine.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(tol) = opts.residual_tolerance {
        if let Some(p) = points.iter().find(|p| !(p.off_node_residual <= tol)) {
            return Err(Error::ResidualExceeded {
                r: p.r,
                residual: p.off_node_residual,
                tolerance: tol,
            });
        }
    }
    let a_diag: Vec<f64> = points.iter().map(|p| p.a).collect();
    let v = five_point_derivative(&a_diag, r_grid.h)?.into_iter().map(|d| -2.0 * opts.c * d).collect();
    let s0_sq_used = match kernel.bound_terms() {
        [t] => Some(t.s_sq),
        _ => None,
    };
    Ok(ReconstructionResult {
        r_grid: rs,
        a_diag,
        v,
        s0_sq_used,
        residual_report: points.iter().map(|p| p.off_node_residual).collect(),
        linear_residuals: points.iter().map(|p| p.linear_residual).collect(),
        conditions: points.iter().map(|p| p.condition).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub s0_sq: f64,
    pub result: ReconstructionResult,
}

/// One reconstruction per s₀² value; every member shares the scattering part.
pub fn isospectral_family(base: &KernelRep, s0_sq_values: &[f64], r_grid: &RGrid, grid: &NystromGrid, opts: &ReconstructOptions) -> Result<Vec<FamilyMember>> {
    s0_sq_values
        .iter()
        .map(|&s| {
            if !(s >= 0.0) {
                return Err(Error::Domain(format!("norming constant must be >= 0 (got {s})")));
            }
            let k = base.with_s0_sq(s)?;
            Ok(FamilyMember {
                s0_sq: s,
                result: reconstruct(&k, r_grid, grid, opts)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignOutcome {
    Solved { result: ReconstructionResult },
    Failed { error: Error },
}

/// Runs the reconstruction on a wrong-sign kernel without the residual
/// audit; a solver failure is an outcome, not an error.
pub fn sign_experiment(kernel_wrong_sign: &KernelRep, r_grid: &RGrid, grid: &NystromGrid, opts: &ReconstructOptions) -> SignOutcome {
    let opts = ReconstructOptions {
        residual_tolerance: None,
        ..opts.clone()
    };
    match reconstruct(kernel_wrong_sign, r_grid, grid, &opts) {
        Ok(result) => SignOutcome::Solved { result },
        Err(error) => SignOutcome::Failed { error },
    }
}
