//! First Dirichlet eigenpair of `−Δ` and the Neumann spectrum.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Geometry, Grid, Stencil, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSource {
    Analytic,
    Numeric,
}

/// Eigenvalue `mu` and eigenfunction `phi` normalised so that `∫φ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu: f64,
    pub phi: Field,
    /// Trapezoid sum `Σ w_i φ_i` of the stored samples.
    pub normalization: f64,
    pub source: EigenSource,
}

/// Ascending Neumann eigenvalues, starting with the constant mode `λ_1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannSpectrum {
    pub lambdas: Vec<f64>,
}

impl NeumannSpectrum {
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        lambdas.sort_by(|a, b| a.total_cmp(b));
        if lambdas[0] != 0.0 || lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidParameter("Neumann spectrum must start at 0 and be nonnegative".into()));
        }
        Ok(NeumannSpectrum { lambdas })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Continuous normalised first Dirichlet eigenfunction for `grid`'s domain.
pub fn analytic_eigenfunction(grid: &Grid) -> Result<impl Fn([f64; 2]) -> f64> {
    let o = grid.origin;
    let (lx, ly, dims) = match grid.geometry {
        Geometry::Interval { length } => (length, 1.0, 1),
        Geometry::Rectangle { lx, ly } => (lx, ly, 2),
        Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("analytic Dirichlet eigenpair")),
    };
    Ok(move |x: [f64; 2]| {
        let sx = (PI * (x[0] - o[0]) / lx).sin();
        if dims == 1 {
            PI / (2.0 * lx) * sx
        } else {
            let sy = (PI * (x[1] - o[1]) / ly).sin();
            PI * PI / (4.0 * lx * ly) * sx * sy
        }
    })
}

pub fn dirichlet_first_analytic(grid: &Grid) -> Result<EigenPair> {
    let mu = match grid.geometry {
        Geometry::Interval { length } => PI * PI / (length * length),
        Geometry::Rectangle { lx, ly } => PI * PI * (1.0 / (lx * lx) + 1.0 / (ly * ly)),
        Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("analytic Dirichlet eigenpair")),
    };
    let f = analytic_eigenfunction(grid)?;
    let mut phi = Field::from_fn(*grid, BoundaryKind::Dirichlet, Variable::U, f);
    for k in 0..grid.len() {
        if grid.is_boundary_node(k) {
            phi.values[k] = 0.0;
        }
    }
    let normalization = phi.integral();
    Ok(EigenPair {
        mu,
        phi,
        normalization,
        source: EigenSource::Analytic,
    })
}

const MAX_ITERATIONS: usize = 10_000;

/// Inverse power iteration (shift 0) on the second-order discrete Dirichlet
/// Laplacian. Stops once `‖Aφ − μφ‖ / (μ‖φ‖) < tol`; `tol` is raised to
/// the rounding floor `4 ε_mach ‖A‖∞ / μ` when it asks for more.
pub fn dirichlet_first_numeric(grid: &Grid, tol: f64) -> Result<EigenPair> {
    let interior = (0..grid.len()).filter(|&k| !grid.is_boundary_node(k)).count();
    match grid.geometry {
        Geometry::Interval { .. } | Geometry::Rectangle { .. } => {}
        Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("numeric Dirichlet eigenpair")),
    }
    if interior < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 interior points, got {interior}")));
    }
    let stencil = Stencil::new(grid, BoundaryKind::Dirichlet);
    let n = grid.len();
    let apply = |x: &[f64], out: &mut [f64]| {
        stencil.laplacian(x, 0.0, out);
        out.iter_mut().for_each(|o| *o = -*o);
    };

    let mut x: Vec<f64> = (0..n).map(|k| if stencil.active[k] { 1.0 } else { 0.0 }).collect();
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut mu;
    for it in 0..MAX_ITERATIONS {
        let y = match grid.geometry {
            Geometry::Interval { .. } => solve_tridiagonal_dirichlet(grid.h, &x),
            _ => conjugate_gradient(&apply, &x, &stencil.active, 1e-14)?,
        };
        let norm = dot(&y, &y).sqrt();
        x = y.iter().map(|v| v / norm).collect();
        apply(&x, &mut ax);
        mu = dot(&x, &ax);
        residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, ai)| (ai - mu * xi).powi(2))
            .sum::<f64>()
            .sqrt()
            / mu;
        let floor = 4.0 * f64::EPSILON * 2.0 * stencil.max_diag() / mu;
        if residual < tol.max(floor) {
            log::debug!("inverse iteration converged after {} iterations", it + 1);
            let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let mut phi = Field::new(*grid, BoundaryKind::Dirichlet, Variable::U, x)?;
            phi.values.iter_mut().for_each(|v| *v *= sign);
            let s = phi.integral();
            phi.values.iter_mut().for_each(|v| *v /= s);
            let normalization = phi.integral();
            return Ok(EigenPair {
                mu,
                phi,
                normalization,
                source: EigenSource::Numeric,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `(−D²) y = x` on the interior nodes with zero boundary values.
fn solve_tridiagonal_dirichlet(h: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let m = n - 2;
    let diag = 2.0 / (h * h);
    let off = -1.0 / (h * h);
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = off / diag;
    d[0] = rhs[1] / diag;
    for i in 1..m {
        let denom = diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i + 1] - off * d[i - 1]) / denom;
    }
    let mut y = vec![0.0; n];
    y[m] = d[m - 1];
    for i in (0..m - 1).rev() {
        y[i + 1] = d[i] - c[i] * y[i + 2];
    }
    y
}

fn conjugate_gradient(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    active: &[bool],
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.iter().zip(active).map(|(v, &a)| if a { *v } else { 0.0 }).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut rr = dot(&r, &r);
    for _ in 0..10 * n {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rel_tol * b_norm {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        iterations: 10 * n,
        residual: rr.sqrt() / b_norm,
    })
}

/// First `k` Neumann eigenvalues of `−Δ` on an interval or rectangle.
pub fn neumann_spectrum_analytic(grid: &Grid, k: usize) -> Result<NeumannSpectrum> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    let lambdas = match grid.geometry {
        Geometry::Interval { length } => (0..k).map(|j| (j as f64 * PI / length).powi(2)).collect(),
        Geometry::Rectangle { lx, ly } => {
            let mut all = Vec::with_capacity(k * k);
            for i in 0..k {
                for j in 0..k {
                    all.push((i as f64 * PI / lx).powi(2) + (j as f64 * PI / ly).powi(2));
                }
            }
            all.sort_by(|a, b| a.total_cmp(b));
            all.truncate(k);
            all
        }
        Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("analytic Neumann spectrum")),
    };
    NeumannSpectrum::new(lambdas)
}
