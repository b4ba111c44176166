//! Uniform grids, fields, and the conservative face stencil shared by the
//! solvers and diagnostics.
//!
//! Interval and rectangle grids are vertex-centred: nodes sit at `x_i = i h`
//! including both endpoints, and quadrature is the trapezoid rule (half
//! weights on edges, quarter weights on rectangle corners). Dirichlet
//! boundary nodes hold the boundary value and are never updated.
//!
//! Radial grids are cell-centred at `r_i = (i + 1/2) h` so the `(n − 1)/r`
//! term is never evaluated at the origin; volumes are exact spherical shells.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    U,
    V,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::U => "u",
            Variable::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
    Radial { radius: f64, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub geometry: Geometry,
    /// Cell counts per direction (second entry is 1 for one-dimensional grids).
    pub cells: [usize; 2],
    pub h: f64,
    /// Lower-left corner (ignored for radial grids).
    pub origin: [f64; 2],
}

/// Surface area of the unit sphere in `ℝⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // ω_1 = 2, ω_2 = 2π, ω_{n+2} = 2π ω_n / n
    let (mut w, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

impl Grid {
    pub fn interval(length: f64, cells: usize) -> Result<Self> {
        Self::interval_on(0.0, length, cells)
    }

    pub fn interval_on(x0: f64, x1: f64, cells: usize) -> Result<Self> {
        let length = x1 - x0;
        if !(length > 0.0) || cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "interval needs positive length and at least 2 cells (length {length}, cells {cells})"
            )));
        }
        Ok(Grid {
            geometry: Geometry::Interval { length },
            cells: [cells, 1],
            h: length / cells as f64,
            origin: [x0, 0.0],
        })
    }

    /// Unit interval `(0, 1)`, the default `|Ω| = 1` configuration.
    pub fn unit_interval(cells: usize) -> Result<Self> {
        Self::interval(1.0, cells)
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::rectangle_on([0.0, 0.0], lx, ly, nx, ny)
    }

    pub fn rectangle_on(origin: [f64; 2], lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) || nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter("rectangle needs positive sides and >= 2 cells per side".into()));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(Error::InvalidParameter(format!(
                "rectangle spacing must be uniform (hx = {hx}, hy = {hy})"
            )));
        }
        Ok(Grid {
            geometry: Geometry::Rectangle { lx, ly },
            cells: [nx, ny],
            h: hx,
            origin,
        })
    }

    pub fn radial(radius: f64, cells: usize, dim: usize) -> Result<Self> {
        if !(radius > 0.0) || cells < 2 || dim == 0 {
            return Err(Error::InvalidParameter("radial grid needs positive radius, >= 2 cells, dim >= 1".into()));
        }
        Ok(Grid {
            geometry: Geometry::Radial { radius, dim },
            cells: [cells, 1],
            h: radius / cells as f64,
            origin: [0.0, 0.0],
        })
    }

    /// Number of stored values.
    pub fn len(&self) -> usize {
        match self.geometry {
            Geometry::Interval { .. } => self.cells[0] + 1,
            Geometry::Rectangle { .. } => (self.cells[0] + 1) * (self.cells[1] + 1),
            Geometry::Radial { .. } => self.cells[0],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spatial dimension of the physical domain.
    pub fn spatial_dims(&self) -> usize {
        match self.geometry {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
            Geometry::Radial { dim, .. } => dim,
        }
    }

    /// Number of stored coordinates per point (1 for radial: `r`).
    pub fn coord_dims(&self) -> usize {
        match self.geometry {
            Geometry::Rectangle { .. } => 2,
            _ => 1,
        }
    }

    pub fn nodes_x(&self) -> usize {
        match self.geometry {
            Geometry::Radial { .. } => self.cells[0],
            _ => self.cells[0] + 1,
        }
    }

    pub fn nodes_y(&self) -> usize {
        match self.geometry {
            Geometry::Rectangle { .. } => self.cells[1] + 1,
            _ => 1,
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes_x() + i
    }

    /// Coordinates of value `k`; the second entry is 0 for 1D grids.
    pub fn point(&self, k: usize) -> [f64; 2] {
        match self.geometry {
            Geometry::Interval { .. } => [self.origin[0] + k as f64 * self.h, 0.0],
            Geometry::Rectangle { .. } => {
                let nx = self.nodes_x();
                let (i, j) = (k % nx, k / nx);
                [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
            }
            Geometry::Radial { .. } => [(k as f64 + 0.5) * self.h, 0.0],
        }
    }

    /// Total measure `|Ω|`.
    pub fn measure(&self) -> f64 {
        match self.geometry {
            Geometry::Interval { length } => length,
            Geometry::Rectangle { lx, ly } => lx * ly,
            Geometry::Radial { radius, dim } => unit_sphere_area(dim) * radius.powi(dim as i32) / dim as f64,
        }
    }

    /// Quadrature weights (trapezoid on vertex grids, shell volumes on radial).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h;
        match self.geometry {
            Geometry::Interval { .. } => {
                let n = self.len();
                (0..n)
                    .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
                    .collect()
            }
            Geometry::Rectangle { .. } => {
                let (nx, ny) = (self.nodes_x(), self.nodes_y());
                let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let mut w = Vec::with_capacity(nx * ny);
                for j in 0..ny {
                    for i in 0..nx {
                        w.push(edge(i, nx) * edge(j, ny) * h * h);
                    }
                }
                w
            }
            Geometry::Radial { dim, .. } => {
                let om = unit_sphere_area(dim) / dim as f64;
                (0..self.len())
                    .map(|i| {
                        let lo = i as f64 * h;
                        let hi = (i + 1) as f64 * h;
                        om * (hi.powi(dim as i32) - lo.powi(dim as i32))
                    })
                    .collect()
            }
        }
    }

    /// Whether value `k` is a boundary node held fixed under Dirichlet data.
    pub fn is_boundary_node(&self, k: usize) -> bool {
        match self.geometry {
            Geometry::Interval { .. } => k == 0 || k == self.len() - 1,
            Geometry::Rectangle { .. } => {
                let (nx, ny) = (self.nodes_x(), self.nodes_y());
                let (i, j) = (k % nx, k / nx);
                i == 0 || j == 0 || i == nx - 1 || j == ny - 1
            }
            Geometry::Radial { .. } => false,
        }
    }

    /// Same layout and spacing.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.geometry == other.geometry
            && self.cells == other.cells
            && (self.h - other.h).abs() <= 1e-14 * self.h
            && self.origin == other.origin
    }
}

/// Discrete scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub boundary: BoundaryKind,
    pub var: Variable,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, boundary: BoundaryKind, var: Variable, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, boundary, var, values })
    }

    pub fn constant(grid: Grid, boundary: BoundaryKind, var: Variable, value: f64) -> Self {
        Field {
            grid,
            boundary,
            var,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, boundary: BoundaryKind, var: Variable, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Field { grid, boundary, var, values }
    }

    pub(crate) fn map_with(&self, var: Variable, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            boundary: self.boundary,
            var,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Trapezoid (or shell-volume) integral of the values.
    pub fn integral(&self) -> f64 {
        self.grid.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Weighted L1 distance `Σ w_i |f_i − g_i|`.
    pub fn l1_distance(&self, other: &Field) -> Result<f64> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch("L1 distance between incompatible grids".into()));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Face {
    pub l: usize,
    pub r: usize,
    /// area / h
    pub coef: f64,
}

/// Conservative finite-volume stencil: interior faces, optional ghost faces
/// (radial Dirichlet), control volumes, and which values are updated.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub faces: Vec<Face>,
    pub ghost_faces: Vec<(usize, f64)>,
    pub volumes: Vec<f64>,
    pub active: Vec<bool>,
}

impl Stencil {
    pub fn new(grid: &Grid, bc: BoundaryKind) -> Self {
        let h = grid.h;
        let volumes = grid.weights();
        let n = grid.len();
        let mut faces = Vec::new();
        let mut ghost_faces = Vec::new();
        match grid.geometry {
            Geometry::Interval { .. } => {
                for i in 0..n - 1 {
                    faces.push(Face { l: i, r: i + 1, coef: 1.0 / h });
                }
            }
            Geometry::Rectangle { .. } => {
                let (nx, ny) = (grid.nodes_x(), grid.nodes_y());
                let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                for j in 0..ny {
                    for i in 0..nx {
                        let k = grid.index(i, j);
                        if i + 1 < nx {
                            faces.push(Face { l: k, r: k + 1, coef: edge(j, ny) });
                        }
                        if j + 1 < ny {
                            faces.push(Face { l: k, r: k + nx, coef: edge(i, nx) });
                        }
                    }
                }
            }
            Geometry::Radial { dim, .. } => {
                let om = unit_sphere_area(dim);
                for i in 0..n - 1 {
                    let r = (i + 1) as f64 * h;
                    faces.push(Face {
                        l: i,
                        r: i + 1,
                        coef: om * r.powi(dim as i32 - 1) / h,
                    });
                }
                if bc == BoundaryKind::Dirichlet {
                    let r = n as f64 * h;
                    ghost_faces.push((n - 1, om * r.powi(dim as i32 - 1) / h));
                }
            }
        }
        let active = (0..n)
            .map(|k| !(bc == BoundaryKind::Dirichlet && grid.is_boundary_node(k)))
            .collect();
        Stencil {
            faces,
            ghost_faces,
            volumes,
            active,
        }
    }

    /// `out_i = (1/V_i) Σ_faces coef (P_nbr − P_i)`, i.e. the discrete
    /// Laplacian of the potential `P` in conservation form. `ghost` is the
    /// potential value in ghost cells. Inactive entries are set to 0.
    pub fn laplacian(&self, pot: &[f64], ghost: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for f in &self.faces {
            let flux = f.coef * (pot[f.r] - pot[f.l]);
            out[f.l] += flux;
            out[f.r] -= flux;
        }
        for &(k, coef) in &self.ghost_faces {
            out[k] += coef * (ghost - pot[k]);
        }
        for (k, o) in out.iter_mut().enumerate() {
            if self.active[k] {
                *o /= self.volumes[k];
            } else {
                *o = 0.0;
            }
        }
    }

    /// Discrete Dirichlet energy `Σ_faces coef (f_r − f_l)²`, the face-based
    /// approximation of `∫|∇f|²`.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        self.faces
            .iter()
            .map(|fc| {
                let d = f[fc.r] - f[fc.l];
                fc.coef * d * d
            })
            .sum()
    }

    /// Largest per-value ratio `Σ coef / V`, the stiffness scale of the
    /// diffusion operator (used by the stability bounds).
    pub fn max_diag(&self) -> f64 {
        let mut diag = vec![0.0; self.volumes.len()];
        for f in &self.faces {
            diag[f.l] += f.coef;
            diag[f.r] += f.coef;
        }
        for &(k, coef) in &self.ghost_faces {
            diag[k] += coef;
        }
        diag.iter()
            .zip(&self.volumes)
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|((d, v), _)| d / v)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_measure() {
        let g = Grid::unit_interval(10).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let r = Grid::rectangle(2.0, 1.0, 20, 10).unwrap();
        assert!((r.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let b = Grid::radial(1.5, 30, 3).unwrap();
        assert!((b.weights().iter().sum::<f64>() - b.measure()).abs() < 1e-12);
    }

    #[test]
    fn rectangle_requires_uniform_spacing() {
        assert!(Grid::rectangle(1.0, 1.0, 10, 20).is_err());
    }

    #[test]
    fn constant_field_has_unit_mass_on_unit_interval() {
        let g = Grid::unit_interval(17).unwrap();
        let f = Field::constant(g, BoundaryKind::Neumann, Variable::U, 1.0);
        assert!((f.integral() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn neumann_laplacian_is_conservative() {
        for g in [
            Grid::unit_interval(13).unwrap(),
            Grid::rectangle(1.0, 0.5, 8, 4).unwrap(),
            Grid::radial(1.0, 12, 3).unwrap(),
        ] {
            let st = Stencil::new(&g, BoundaryKind::Neumann);
            let pot: Vec<f64> = (0..g.len()).map(|k| ((k * 7919) % 13) as f64).collect();
            let mut out = vec![0.0; g.len()];
            st.laplacian(&pot, 0.0, &mut out);
            let total: f64 = out.iter().zip(&st.volumes).map(|(o, v)| o * v).sum();
            assert!(total.abs() < 1e-10, "{total}");
        }
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = Grid::interval(2.0, 20).unwrap();
        let st = Stencil::new(&g, BoundaryKind::Dirichlet);
        let pot: Vec<f64> = (0..g.len()).map(|k| g.point(k)[0].powi(2)).collect();
        let mut out = vec![0.0; g.len()];
        st.laplacian(&pot, 0.0, &mut out);
        for k in 1..g.len() - 1 {
            assert!((out[k] - 2.0).abs() < 1e-10);
        }
        assert_eq!(out[0], 0.0);

        // radial: Δ r² = 2n
        let b = Grid::radial(1.0, 40, 3).unwrap();
        let st = Stencil::new(&b, BoundaryKind::Neumann);
        let pot: Vec<f64> = (0..b.len()).map(|k| b.point(k)[0].powi(2)).collect();
        let mut out = vec![0.0; b.len()];
        st.laplacian(&pot, 0.0, &mut out);
        for k in 0..b.len() - 1 {
            assert!((out[k] - 6.0).abs() < 0.05, "k={k} {}", out[k]);
        }
    }
}
