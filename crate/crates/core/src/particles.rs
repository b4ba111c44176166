//! Interacting diffusions `dXⁱ = √(2a) dBⁱ + (M/N) Σ_{j≠i} ∇V_ε(Xⁱ − Xʲ) dt`
//! whose empirical measure, scaled to mass `M`, approximates the nonlocal
//! model without reaction.
//!
//! Each particle owns a ChaCha8 stream indexed by its label, so a run is
//! reproducible independently of how the drift loop is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Geometry, Grid, Variable};
use crate::model::Params;
use crate::pde::RunResult;

/// Pairs further apart than this many `ε` contribute below `e^{−32}`
/// relative and are skipped.
const CUTOFF: f64 = 8.0;
/// Stream reserved for initial sampling.
const SAMPLING_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParticleDomain {
    FreeSpace,
    /// Positions leaving `[lo, hi]` are reflected back.
    ReflectingBox { lo: [f64; 2], hi: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub n_particles: usize,
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Mass `M` of the density the particles represent; each particle
    /// carries `M/N` in the interaction sum.
    pub mass: f64,
    pub domain: ParticleDomain,
    /// Record a snapshot every this many steps (the last state is always
    /// recorded).
    pub record_every: usize,
}

impl ParticleConfig {
    pub fn new(n_particles: usize, epsilon: f64, dt: f64, t_end: f64) -> Self {
        ParticleConfig {
            n_particles,
            epsilon,
            dt,
            t_end,
            mass: 1.0,
            domain: ParticleDomain::FreeSpace,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("need at least one particle".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidConfig(format!("mass must be > 0, got {}", self.mass)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be >= 1".into()));
        }
        if let ParticleDomain::ReflectingBox { lo, hi } = self.domain {
            if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
                return Err(Error::InvalidConfig("reflecting box needs lo < hi".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    /// Positions; only the first `dim` coordinates are used.
    pub positions: Vec<[f64; 2]>,
    pub dim: usize,
    pub t: f64,
    pub seed: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl ParticleState {
    /// Particles at the given positions, with noise streams `0..N` of `seed`.
    pub fn new(positions: Vec<[f64; 2]>, dim: usize, seed: u64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("particle dimension must be 1 or 2, got {dim}")));
        }
        if positions.iter().any(|x| x[..dim].iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("initial particle position".into()));
        }
        let rngs = (0..positions.len())
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64);
                r
            })
            .collect();
        Ok(ParticleState {
            positions,
            dim,
            t: 0.0,
            seed,
            rngs,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Reorder particles together with their noise streams.
    pub fn permuted(&self, order: &[usize]) -> Self {
        ParticleState {
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            dim: self.dim,
            t: self.t,
            seed: self.seed,
            rngs: order.iter().map(|&i| self.rngs[i].clone()).collect(),
        }
    }
}

/// Stable root of `f0 s + (f1 − f0) s²/2h = target` on `[0, h]`.
fn linear_cell_inverse(f0: f64, f1: f64, h: f64, target: f64) -> f64 {
    let disc = (f0 * f0 + 2.0 * (f1 - f0) * target / h).max(0.0);
    let denom = f0 + disc.sqrt();
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * target / denom).clamp(0.0, h)
}

/// Draw `n` i.i.d. positions from the piecewise (bi)linear interpolant of
/// `u0`, normalised to a probability density.
pub fn sample_initial(u0: &Field, n: usize, seed: u64) -> Result<ParticleState> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    if let Some((index, &value)) = u0.values.iter().enumerate().find(|(_, &v)| v < -1e-10 || !v.is_finite()) {
        return Err(Error::NegativeDensity { index, value });
    }
    let vals: Vec<f64> = u0.values.iter().map(|v| v.max(0.0)).collect();
    if vals.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter("initial density vanishes identically".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLING_STREAM);
    let g = &u0.grid;
    let h = g.h;
    match g.geometry {
        Geometry::Interval { .. } => {
            let cell_mass: Vec<f64> = vals.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).collect();
            let mut cdf = Vec::with_capacity(cell_mass.len());
            let mut acc = 0.0;
            for m in &cell_mass {
                acc += m;
                cdf.push(acc);
            }
            let total = acc;
            let positions = (0..n)
                .map(|_| {
                    let r = rng.random::<f64>() * total;
                    let i = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
                    let i = (i..cdf.len()).find(|&k| cell_mass[k] > 0.0).unwrap_or(i);
                    let before = if i == 0 { 0.0 } else { cdf[i - 1] };
                    let s = linear_cell_inverse(vals[i], vals[i + 1], h, (r - before).max(0.0));
                    [g.origin[0] + i as f64 * h + s, 0.0]
                })
                .collect();
            ParticleState::new(positions, 1, seed)
        }
        Geometry::Rectangle { lx, ly } => {
            let fmax = vals.iter().copied().fold(0.0, f64::max);
            let nx = g.nodes_x();
            let interp = |x: f64, y: f64| {
                let (fx, fy) = ((x - g.origin[0]) / h, (y - g.origin[1]) / h);
                let (i, j) = ((fx as usize).min(g.cells[0] - 1), (fy as usize).min(g.cells[1] - 1));
                let (sx, sy) = (fx - i as f64, fy - j as f64);
                let v = |a: usize, b: usize| vals[b * nx + a];
                (1.0 - sx) * (1.0 - sy) * v(i, j) + sx * (1.0 - sy) * v(i + 1, j) + (1.0 - sx) * sy * v(i, j + 1) + sx * sy * v(i + 1, j + 1)
            };
            let mut positions = Vec::with_capacity(n);
            while positions.len() < n {
                let x = g.origin[0] + rng.random::<f64>() * lx;
                let y = g.origin[1] + rng.random::<f64>() * ly;
                if rng.random::<f64>() * fmax < interp(x, y) {
                    positions.push([x, y]);
                }
            }
            ParticleState::new(positions, 2, seed)
        }
        Geometry::Radial { .. } => Err(Error::UnsupportedGeometry("particle sampling")),
    }
}

/// Interaction drift `(M/N) Σ_{j≠i} ∇V_ε(Xⁱ − Xʲ)` for the Gaussian kernel
/// of mass `2b`.
pub fn drift(s: &ParticleState, cfg: &ParticleConfig, p: &Params) -> Vec<[f64; 2]> {
    let eps2 = cfg.epsilon * cfg.epsilon;
    let norm = 2.0 * p.b * (2.0 * std::f64::consts::PI * eps2).powf(-(s.dim as f64) / 2.0);
    let weight = cfg.mass / s.len() as f64;
    let cut2 = (CUTOFF * cfg.epsilon).powi(2);
    let pos = &s.positions;
    let dim = s.dim;
    pos.par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut acc = [0.0; 2];
            for (j, xj) in pos.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dx = [xi[0] - xj[0], if dim == 2 { xi[1] - xj[1] } else { 0.0 }];
                let r2 = dx[0] * dx[0] + dx[1] * dx[1];
                if r2 > cut2 {
                    continue;
                }
                // ∇V_ε(x) = −x/ε² V_ε(x)
                let g = -norm * (-r2 / (2.0 * eps2)).exp() / eps2;
                acc[0] += g * dx[0];
                acc[1] += g * dx[1];
            }
            [weight * acc[0], weight * acc[1]]
        })
        .collect()
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let mut x = x;
    for _ in 0..64 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            return x;
        }
    }
    x.clamp(lo, hi)
}

/// One Euler–Maruyama step of length `dt` in place.
fn step_in_place(s: &mut ParticleState, cfg: &ParticleConfig, p: &Params, dt: f64) -> Result<()> {
    let dr = drift(s, cfg, p);
    let max_move = dr.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max) * dt;
    if max_move > cfg.epsilon {
        log::warn!("drift displacement {max_move:.3e} exceeds epsilon {} in one step", cfg.epsilon);
    }
    let amp = (2.0 * p.a * dt).sqrt();
    let dim = s.dim;
    for ((x, d), rng) in s.positions.iter_mut().zip(&dr).zip(s.rngs.iter_mut()) {
        for k in 0..dim {
            let xi: f64 = rng.sample(StandardNormal);
            x[k] += d[k] * dt + amp * xi;
        }
        if let ParticleDomain::ReflectingBox { lo, hi } = cfg.domain {
            for k in 0..dim {
                x[k] = reflect(x[k], lo[k], hi[k]);
            }
        }
    }
    if let Some(i) = s.positions.iter().position(|x| x[..dim].iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("particle {i} position after step")));
    }
    s.t += dt;
    Ok(())
}

/// One Euler–Maruyama step: `X ← X + drift·dt + √(2a dt) ξ`.
pub fn em_step(s: &ParticleState, cfg: &ParticleConfig, p: &Params) -> Result<ParticleState> {
    if !(p.a >= 0.0) || !(p.b > 0.0) {
        return Err(Error::InvalidParameter(format!("need a >= 0 and b > 0, got a = {}, b = {}", p.a, p.b)));
    }
    if !(cfg.dt > 0.0 && cfg.epsilon > 0.0) {
        return Err(Error::InvalidConfig("dt and epsilon must be positive".into()));
    }
    let mut next = s.clone();
    step_in_place(&mut next, cfg, p, cfg.dt)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRun {
    pub snapshots: Vec<ParticleState>,
}

impl ParticleRun {
    pub fn at(&self, t: f64) -> Option<&ParticleState> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// Step from `s0` to `cfg.t_end`; the final step is shortened to land on
/// `t_end` exactly.
pub fn simulate(s0: &ParticleState, cfg: &ParticleConfig, p: &Params) -> Result<ParticleRun> {
    cfg.validate()?;
    if !(p.a >= 0.0) || !(p.b > 0.0) {
        return Err(Error::InvalidParameter(format!("need a >= 0 and b > 0, got a = {}, b = {}", p.a, p.b)));
    }
    if p.c != 0.0 || p.d != 0.0 {
        log::warn!("particle system ignores the reaction terms c = {}, d = {}", p.c, p.d);
    }
    let mut s = s0.clone();
    let mut snapshots = vec![s.clone()];
    let mut steps = 0usize;
    while s.t < cfg.t_end {
        let remaining = cfg.t_end - s.t;
        let last = cfg.dt >= remaining * (1.0 - 1e-12);
        let dt = if last { remaining } else { cfg.dt };
        step_in_place(&mut s, cfg, p, dt)?;
        if last {
            s.t = cfg.t_end;
        }
        steps += 1;
        if last || steps % cfg.record_every == 0 {
            snapshots.push(s.clone());
        }
    }
    Ok(ParticleRun { snapshots })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KdeBoundary {
    /// Mass leaving the grid is dropped before renormalisation.
    Truncate,
    /// Kernels are mirrored at the grid edges.
    Reflect,
}

/// Silverman's rule `1.06 σ N^{−1/5}` (1D) or `σ N^{−1/6}` (2D), with `σ`
/// the mean per-axis standard deviation.
pub fn silverman_bandwidth(s: &ParticleState) -> f64 {
    let n = s.len() as f64;
    let mut sigma = 0.0;
    for k in 0..s.dim {
        let mean = s.positions.iter().map(|x| x[k]).sum::<f64>() / n;
        let var = s.positions.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / n;
        sigma += var.sqrt();
    }
    sigma /= s.dim as f64;
    if sigma == 0.0 {
        sigma = 1.0;
    }
    match s.dim {
        1 => 1.06 * sigma * n.powf(-0.2),
        _ => sigma * n.powf(-1.0 / 6.0),
    }
}

/// Gaussian kernel density estimate on the grid, scaled so that its
/// quadrature mass equals `total_mass`.
pub fn kde_density(s: &ParticleState, grid: &Grid, bandwidth: f64, total_mass: f64, boundary: KdeBoundary) -> Result<Field> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    let dim = match grid.geometry {
        Geometry::Interval { .. } => 1,
        Geometry::Rectangle { .. } => 2,
        Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("kernel density estimate")),
    };
    if dim != s.dim {
        return Err(Error::GridMismatch(format!("{}-d particles on a {dim}-d grid", s.dim)));
    }
    let lo = grid.origin;
    let hi = [
        grid.origin[0] + grid.cells[0] as f64 * grid.h,
        grid.origin[1] + grid.cells[1] as f64 * grid.h,
    ];
    let images = |x: f64, k: usize| -> Vec<f64> {
        match boundary {
            KdeBoundary::Truncate => vec![x],
            KdeBoundary::Reflect => vec![x, 2.0 * lo[k] - x, 2.0 * hi[k] - x],
        }
    };
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let norm1 = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * bandwidth);
    let kern = |d: f64| norm1 * (-d * d * inv).exp();
    let pts: Vec<[Vec<f64>; 2]> = s
        .positions
        .iter()
        .map(|x| [images(x[0], 0), if dim == 2 { images(x[1], 1) } else { vec![0.0] }])
        .collect();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let y = grid.point(k);
            pts.iter()
                .map(|[xs, ys]| {
                    let kx: f64 = xs.iter().map(|&x| kern(y[0] - x)).sum();
                    if dim == 1 {
                        kx
                    } else {
                        kx * ys.iter().map(|&v| kern(y[1] - v)).sum::<f64>()
                    }
                })
                .sum()
        })
        .collect();
    let mut f = Field::new(*grid, BoundaryKind::Neumann, Variable::U, values)?;
    let m = f.integral();
    if m > 0.0 {
        let scale = total_mass / m;
        f.values.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    pub l1_error: f64,
    pub bandwidth: f64,
}

/// L1 distance between the particle density estimate and the PDE field at
/// each requested time. `bandwidth = None` selects Silverman's rule per
/// snapshot.
pub fn compare_to_pde(
    particles: &ParticleRun,
    pde: &RunResult,
    times: &[f64],
    bandwidth: Option<f64>,
    boundary: KdeBoundary,
) -> Result<Vec<ComparisonPoint>> {
    times
        .iter()
        .map(|&t| {
            let ps = particles
                .at(t)
                .ok_or_else(|| Error::GridMismatch(format!("no particle snapshot at t = {t}")))?;
            let snap = pde
                .trajectory
                .iter()
                .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
                .ok_or_else(|| Error::GridMismatch(format!("no PDE snapshot at t = {t}")))?;
            if snap.field.var != Variable::U {
                return Err(Error::VariableMismatch {
                    expected: "u",
                    found: snap.field.var.name(),
                });
            }
            let bw = bandwidth.unwrap_or_else(|| silverman_bandwidth(ps));
            let kde = kde_density(ps, &snap.field.grid, bw, snap.field.integral(), boundary)?;
            Ok(ComparisonPoint {
                t,
                l1_error: kde.l1_distance(&snap.field)?,
                bandwidth: bw,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Snapshot;

    fn params(a: f64, b: f64) -> Params {
        Params::new(a, b, 0.0, 0.0, 1).unwrap()
    }

    #[test]
    fn uniform_sampling_mean() {
        let g = Grid::unit_interval(50).unwrap();
        let u0 = Field::constant(g, BoundaryKind::Neumann, Variable::U, 1.0);
        let n = 20_000;
        let s = sample_initial(&u0, n, 3).unwrap();
        let mean = s.positions.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 3.0 / (12.0 * n as f64).sqrt(), "{mean}");
        assert!(s.positions.iter().all(|x| (0.0..=1.0).contains(&x[0])));
    }

    #[test]
    fn narrow_bump_samples_stay_in_support() {
        let g = Grid::interval_on(-1.0, 1.0, 200).unwrap();
        let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| (0.02 - x[0].abs()).max(0.0));
        let s = sample_initial(&u0, 5000, 11).unwrap();
        assert!(s.positions.iter().all(|x| x[0].abs() <= 0.02 + 1e-12));
        let r = Grid::rectangle_on([-1.0, -1.0], 2.0, 2.0, 40, 40).unwrap();
        let u2 = Field::from_fn(r, BoundaryKind::Neumann, Variable::U, |x| (0.1 - x[0].abs().max(x[1].abs())).max(0.0));
        let s2 = sample_initial(&u2, 500, 1).unwrap();
        assert!(s2.positions.iter().all(|x| x[0].abs() <= 0.1 + 1e-12 && x[1].abs() <= 0.1 + 1e-12));
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Grid::unit_interval(30).unwrap();
        let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| 1.0 + x[0]);
        assert_eq!(sample_initial(&u0, 100, 5).unwrap(), sample_initial(&u0, 100, 5).unwrap());
        assert_ne!(sample_initial(&u0, 100, 5).unwrap(), sample_initial(&u0, 100, 6).unwrap());
        let zero = Field::constant(g, BoundaryKind::Neumann, Variable::U, 0.0);
        assert!(sample_initial(&zero, 10, 1).is_err());
    }

    #[test]
    fn single_particle_diffuses() {
        let p = params(0.7, 1.0);
        let cfg = ParticleConfig::new(1, 0.1, 0.01, 0.5);
        let runs = 4000;
        let finals: Vec<f64> = (0..runs)
            .map(|seed| {
                let s = ParticleState::new(vec![[0.0, 0.0]], 1, seed).unwrap();
                simulate(&s, &cfg, &p).unwrap().snapshots.last().unwrap().positions[0][0]
            })
            .collect();
        let var = finals.iter().map(|x| x * x).sum::<f64>() / runs as f64;
        let expected = 2.0 * p.a * 0.5;
        assert!(((var - expected) / expected).abs() <= 5.0 * (2.0 / runs as f64).sqrt(), "{var}");
    }

    #[test]
    fn mirrored_pair_drift_is_antisymmetric() {
        let p = params(1.0, 0.5);
        let cfg = ParticleConfig::new(2, 0.3, 0.01, 1.0);
        let s = ParticleState::new(vec![[-0.2, 0.0], [0.2, 0.0]], 1, 0).unwrap();
        let d = drift(&s, &cfg, &p);
        assert_eq!(d[0][0], -d[1][0]);
        assert!(d[0][0] > 0.0, "attraction toward the partner");
    }

    #[test]
    fn zero_diffusion_pair_attracts_deterministically() {
        let p = Params { a: 0.0, b: 0.5, c: 0.0, d: 0.0, n: 2 };
        let cfg = ParticleConfig::new(2, 0.5, 0.01, 1.0);
        let s = ParticleState::new(vec![[-0.3, 0.1], [0.3, 0.1]], 2, 9).unwrap();
        let next = em_step(&s, &cfg, &p).unwrap();
        let again = em_step(&ParticleState::new(s.positions.clone(), 2, 123).unwrap(), &cfg, &p).unwrap();
        assert_eq!(next.positions, again.positions);
        assert!(next.positions[0][0] > -0.3 && next.positions[1][0] < 0.3);
        assert_eq!(next.positions[0][1], 0.1);
        assert!((next.positions[0][0] + next.positions[1][0]).abs() < 1e-15);
    }

    #[test]
    fn translation_equivariance() {
        let p = params(0.5, 0.8);
        let cfg = ParticleConfig::new(50, 0.2, 0.01, 1.0);
        let g = Grid::interval_on(-1.0, 1.0, 100).unwrap();
        let u0 = Field::from_fn(g, BoundaryKind::Neumann, Variable::U, |x| 1.0 - x[0] * x[0]);
        let s = sample_initial(&u0, 50, 4).unwrap();
        let shifted = ParticleState::new(s.positions.iter().map(|x| [x[0] + 3.25, 0.0]).collect(), 1, s.seed).unwrap();
        let a = em_step(&s, &cfg, &p).unwrap();
        let b = em_step(&shifted, &cfg, &p).unwrap();
        for (x, y) in a.positions.iter().zip(&b.positions) {
            assert!((y[0] - x[0] - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn exchangeable_under_joint_permutation() {
        let p = params(0.5, 0.8);
        let cfg = ParticleConfig::new(20, 0.2, 0.01, 1.0);
        let s = ParticleState::new((0..20).map(|i| [i as f64 * 0.05, 0.0]).collect(), 1, 2).unwrap();
        let order: Vec<usize> = (0..20).rev().collect();
        let a = em_step(&s, &cfg, &p).unwrap();
        let b = em_step(&s.permuted(&order), &cfg, &p).unwrap();
        let mut xa: Vec<f64> = a.positions.iter().map(|x| x[0]).collect();
        let mut xb: Vec<f64> = b.positions.iter().map(|x| x[0]).collect();
        xa.sort_by(f64::total_cmp);
        xb.sort_by(f64::total_cmp);
        for (x, y) in xa.iter().zip(&xb) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn reflecting_box_keeps_particles_inside() {
        let p = params(2.0, 0.1);
        let mut cfg = ParticleConfig::new(100, 0.1, 0.05, 1.0);
        cfg.domain = ParticleDomain::ReflectingBox { lo: [0.0, 0.0], hi: [1.0, 1.0] };
        let s = ParticleState::new(vec![[0.5, 0.0]; 100], 1, 8).unwrap();
        let run = simulate(&s, &cfg, &p).unwrap();
        assert_eq!(run.snapshots.last().unwrap().t, 1.0);
        for snap in &run.snapshots {
            assert_eq!(snap.len(), 100);
            assert!(snap.positions.iter().all(|x| (0.0..=1.0).contains(&x[0])));
        }
    }

    #[test]
    fn kde_single_particle_mass() {
        let g = Grid::interval_on(-3.0, 3.0, 600).unwrap();
        let s = ParticleState::new(vec![[0.1, 0.0]], 1, 0).unwrap();
        let f = kde_density(&s, &g, 0.2, 2.5, KdeBoundary::Truncate).unwrap();
        assert!((f.integral() - 2.5).abs() < 1e-6);
        let k = g.len() / 2 + 10;
        let peak = 2.5 / ((2.0 * std::f64::consts::PI).sqrt() * 0.2);
        assert!((f.values[k] - peak).abs() < 1e-6 * peak);
        let r = Grid::rectangle_on([-1.0, -1.0], 2.0, 2.0, 50, 50).unwrap();
        let s2 = ParticleState::new(vec![[0.0, 0.0]], 2, 0).unwrap();
        let f2 = kde_density(&s2, &r, 0.1, 1.0, KdeBoundary::Reflect).unwrap();
        assert!((f2.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kde_uniform_consistency() {
        let g = Grid::unit_interval(100).unwrap();
        let u0 = Field::constant(g, BoundaryKind::Neumann, Variable::U, 1.0);
        let s = sample_initial(&u0, 10_000, 21).unwrap();
        let f = kde_density(&s, &g, 0.05, 1.0, KdeBoundary::Reflect).unwrap();
        let sup = f.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(sup <= 0.1, "{sup}");
    }

    #[test]
    fn compare_identical_is_zero_and_mismatch_errors() {
        let g = Grid::interval_on(-2.0, 2.0, 200).unwrap();
        let s = ParticleState::new(vec![[0.0, 0.0]], 1, 0).unwrap();
        let kde = kde_density(&s, &g, 0.3, 1.0, KdeBoundary::Truncate).unwrap();
        let pde = RunResult {
            trajectory: vec![Snapshot { t: 0.0, field: kde }],
            events: vec![],
            trusted: true,
            steps: 0,
        };
        let pr = ParticleRun { snapshots: vec![s] };
        let c = compare_to_pde(&pr, &pde, &[0.0], Some(0.3), KdeBoundary::Truncate).unwrap();
        assert!(c[0].l1_error < 1e-15);
        assert!(compare_to_pde(&pr, &pde, &[0.5], Some(0.3), KdeBoundary::Truncate).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = ParticleConfig::new(0, 0.1, 0.01, 1.0);
        assert!(c.validate().is_err());
        c.n_particles = 5;
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
        c.epsilon = 0.1;
        c.domain = ParticleDomain::ReflectingBox { lo: [1.0, 0.0], hi: [0.0, 1.0] };
        assert!(c.validate().is_err());
    }
}
