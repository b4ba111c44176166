//! Explicit Barenblatt-type solutions of `∂t v + b Δ(v²) = 0` (the
//! `c = d = 0` equation in the shifted variable) and admissible
//! superpositions of them.
//!
//! A positive bump concentrates and blows up at `t = T`; a negative bump
//! spreads for all `t ≥ 0`. Superpositions remain exact solutions as long as
//! the bump supports stay pairwise disjoint, which [`validate_multibump`]
//! certifies without sampling in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Geometry, Grid, Variable};
use crate::model::Params;

/// Default slack for the strict separation inequalities.
pub const STRICT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpSign {
    /// Blow-up type, defined for `t < T`.
    Positive,
    /// Decaying type, defined for all `t ≥ 0`.
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarenblattBump {
    pub sign: BumpSign,
    /// Time offset `T > 0`.
    pub t_offset: f64,
    /// Centre in `ℝⁿ`.
    pub center: Vec<f64>,
}

impl BarenblattBump {
    pub fn new(sign: BumpSign, t_offset: f64, center: Vec<f64>) -> Result<Self> {
        if !(t_offset > 0.0 && t_offset.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump time offset must be > 0, got {t_offset}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("bump centre must be a finite point".into()));
        }
        Ok(BarenblattBump { sign, t_offset, center })
    }

    pub fn positive(t_offset: f64, center: Vec<f64>) -> Result<Self> {
        Self::new(BumpSign::Positive, t_offset, center)
    }

    pub fn negative(t_offset: f64, center: Vec<f64>) -> Result<Self> {
        Self::new(BumpSign::Negative, t_offset, center)
    }

    /// Self-similar clock `T − t` (positive) or `T + t` (negative).
    fn clock(&self, t: f64) -> Result<f64> {
        match self.sign {
            BumpSign::Positive if t >= self.t_offset => Err(Error::OutsideWindow { t, limit: self.t_offset }),
            BumpSign::Positive => Ok(self.t_offset - t),
            BumpSign::Negative => Ok(self.t_offset + t),
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_dims(bump: &BarenblattBump, x: &[f64], p: &Params) -> Result<()> {
    if bump.center.len() != p.n || x.len() != p.n {
        return Err(Error::InvalidParameter(format!(
            "bump centre / point dimension must equal n = {} (centre {}, point {})",
            p.n,
            bump.center.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Value of `v` for a single bump at point `x` and time `t`.
pub fn bump_eval(bump: &BarenblattBump, x: &[f64], t: f64, p: &Params) -> Result<f64> {
    check_dims(bump, x, p)?;
    let s = bump.clock(t)?;
    let n = p.n as f64;
    let inner = s.powf(2.0 / (n + 2.0)) - dist2(x, &bump.center) / (4.0 * (n + 2.0));
    let mag = inner.max(0.0) / (p.b * s);
    Ok(match bump.sign {
        BumpSign::Positive => mag,
        BumpSign::Negative => -mag,
    })
}

/// Radius of the support ball, `2√(n+2) s^{1/(n+2)}`.
pub fn support_radius(bump: &BarenblattBump, t: f64, n: usize) -> Result<f64> {
    let s = bump.clock(t)?;
    let n = n as f64;
    Ok(2.0 * (n + 2.0).sqrt() * s.powf(1.0 / (n + 2.0)))
}

/// A superposition of positive and negative bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MultiBumpConfig {
    pub bumps: Vec<BarenblattBump>,
    /// Probe horizon for negative-negative separation when there are no
    /// positive bumps (the existence horizon is then unbounded).
    pub horizon: Option<f64>,
}

impl MultiBumpConfig {
    pub fn new(bumps: Vec<BarenblattBump>) -> Self {
        MultiBumpConfig { bumps, horizon: None }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    /// Existence horizon `τ = min T_i` over positive bumps (`+∞` if none).
    pub fn tau(&self) -> f64 {
        self.bumps
            .iter()
            .filter(|b| b.sign == BumpSign::Positive)
            .map(|b| b.t_offset)
            .fold(f64::INFINITY, f64::min)
    }

    fn indices(&self, sign: BumpSign) -> Vec<usize> {
        (0..self.bumps.len()).filter(|&i| self.bumps[i].sign == sign).collect()
    }
}

/// One evaluated inequality `lhs < rhs` (or `lhs > rhs` for the lower bound).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub bumps: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub tau: f64,
    pub checks: Vec<ConditionCheck>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

fn strictly_less(lhs: f64, rhs: f64, slack: f64) -> bool {
    rhs - lhs > slack * rhs.abs().max(1.0)
}

pub fn validate_multibump(cfg: &MultiBumpConfig, p: &Params) -> ValidityReport {
    validate_multibump_with_slack(cfg, p, STRICT_SLACK)
}

pub fn validate_multibump_with_slack(cfg: &MultiBumpConfig, p: &Params, slack: f64) -> ValidityReport {
    let n = p.n as f64;
    let e = 1.0 / (n + 2.0);
    let denom = 2.0 * (n + 2.0).sqrt();
    let tau = cfg.tau();
    let neg = cfg.indices(BumpSign::Negative);
    let pos = cfg.indices(BumpSign::Positive);
    let mut checks = Vec::new();

    for (i, b) in cfg.bumps.iter().enumerate() {
        if b.center.len() != p.n {
            checks.push(ConditionCheck {
                name: format!("dimension: centre has {} coordinates, n = {}", b.center.len(), p.n),
                bumps: vec![i],
                lhs: b.center.len() as f64,
                rhs: p.n as f64,
                holds: false,
            });
        }
    }

    // negative-negative separation up to the existence horizon
    let probe = if tau.is_finite() { Some(tau) } else { cfg.horizon };
    if neg.len() > 1 {
        match probe {
            Some(t) => {
                for (a, &j) in neg.iter().enumerate() {
                    for &k in &neg[a + 1..] {
                        let (bj, bk) = (&cfg.bumps[j], &cfg.bumps[k]);
                        let lhs = (t + bj.t_offset).powf(e) + (t + bk.t_offset).powf(e);
                        let rhs = dist2(&bj.center, &bk.center).sqrt() / denom;
                        checks.push(ConditionCheck {
                            name: "negative-negative separation".into(),
                            bumps: vec![j, k],
                            lhs,
                            rhs,
                            holds: strictly_less(lhs, rhs, slack),
                        });
                    }
                }
            }
            None => checks.push(ConditionCheck {
                name: "negative-negative separation needs a finite horizon when there are no positive bumps".into(),
                bumps: neg.clone(),
                lhs: f64::INFINITY,
                rhs: f64::NAN,
                holds: false,
            }),
        }
    }

    // negative-positive separation, maximised over t ∈ [0, τ] in closed form
    for &j in &neg {
        for &l in &pos {
            let (bj, bl) = (&cfg.bumps[j], &cfg.bumps[l]);
            let (tj, tl) = (bj.t_offset, bl.t_offset);
            let gap = tl - tj;
            let (name, lhs) = if gap <= 0.0 {
                ("negative-positive separation (T_l <= T_j)", tj.powf(e) + tl.powf(e))
            } else if gap >= 2.0 * tau {
                (
                    "negative-positive separation (T_l - T_j >= 2 tau)",
                    (tau + tj).powf(e) + (tl - tau).powf(e),
                )
            } else {
                (
                    "negative-positive separation (0 < T_l - T_j < 2 tau)",
                    2f64.powf((n + 1.0) / (n + 2.0)) * (tl + tj).powf(e),
                )
            };
            let rhs = dist2(&bj.center, &bl.center).sqrt() / denom;
            checks.push(ConditionCheck {
                name: name.into(),
                bumps: vec![j, l],
                lhs,
                rhs,
                holds: strictly_less(lhs, rhs, slack),
            });
        }
    }

    // u = v + a/2b ≥ 0: each negative bump needs T_j > (a/2)^{-1-2/n}
    let bound = (p.a / 2.0).powf(-1.0 - 2.0 / n);
    for &j in &neg {
        let tj = cfg.bumps[j].t_offset;
        checks.push(ConditionCheck {
            name: "lower bound T_j > (a/2)^(-1-2/n)".into(),
            bumps: vec![j],
            lhs: tj,
            rhs: bound,
            holds: strictly_less(bound, tj, slack),
        });
    }

    ValidityReport { tau, checks }
}

fn ensure_valid(cfg: &MultiBumpConfig, p: &Params) -> Result<()> {
    let report = validate_multibump(cfg, p);
    if let Some(f) = report.failures().next() {
        return Err(Error::InvalidConfig(format!(
            "{} for bumps {:?}: lhs {} vs rhs {}",
            f.name, f.bumps, f.lhs, f.rhs
        )));
    }
    Ok(())
}

fn sum_bumps(cfg: &MultiBumpConfig, x: &[f64], t: f64, p: &Params) -> Result<f64> {
    cfg.bumps.iter().map(|b| bump_eval(b, x, t, p)).sum()
}

/// Value of the superposition at `(x, t)`; requires a valid configuration
/// and `t < τ`.
pub fn multibump_eval(cfg: &MultiBumpConfig, x: &[f64], t: f64, p: &Params) -> Result<f64> {
    ensure_valid(cfg, p)?;
    let tau = cfg.tau();
    if t >= tau {
        return Err(Error::OutsideWindow { t, limit: tau });
    }
    if x.len() != p.n {
        return Err(Error::InvalidParameter(format!("point dimension {} != n = {}", x.len(), p.n)));
    }
    sum_bumps(cfg, x, t, p)
}

/// Embed grid value `k` as a point of `ℝⁿ` (radial grids map to `(r, 0, …)`).
pub fn grid_point(grid: &Grid, k: usize, n: usize) -> Vec<f64> {
    let pt = grid.point(k);
    let mut x = vec![0.0; n];
    match grid.geometry {
        Geometry::Rectangle { .. } => {
            x[0] = pt[0];
            if n > 1 {
                x[1] = pt[1];
            }
        }
        _ => x[0] = pt[0],
    }
    x
}

fn check_grid_dims(grid: &Grid, p: &Params) -> Result<()> {
    if grid.spatial_dims() != p.n {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} does not match n = {}",
            grid.spatial_dims(),
            p.n
        )));
    }
    Ok(())
}

/// Sample the superposition on a grid as a `v` field.
pub fn multibump_field(cfg: &MultiBumpConfig, grid: &Grid, bc: BoundaryKind, t: f64, p: &Params) -> Result<Field> {
    ensure_valid(cfg, p)?;
    check_grid_dims(grid, p)?;
    if t >= cfg.tau() {
        return Err(Error::OutsideWindow { t, limit: cfg.tau() });
    }
    let values = (0..grid.len())
        .map(|k| sum_bumps(cfg, &grid_point(grid, k, p.n), t, p))
        .collect::<Result<Vec<_>>>()?;
    Field::new(*grid, bc, Variable::V, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    /// Time step of the central time difference.
    pub dt: f64,
    /// Minimum distance from every support boundary (defaults to `2h`).
    pub boundary_margin: Option<f64>,
    /// If set, only points inside `fraction · R` of some bump or outside all
    /// supports are sampled.
    pub interior_fraction: Option<f64>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            dt: 1e-5,
            boundary_margin: None,
            interior_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub points: usize,
}

/// Max over admissible grid points of `|∂t v + b Δ(v²)|` using central
/// differences (Cartesian Laplacian, or the radial form on radial grids).
pub fn residual_check(cfg: &MultiBumpConfig, grid: &Grid, t: f64, p: &Params) -> Result<f64> {
    Ok(residual_check_with(cfg, grid, t, p, &ResidualOptions::default())?.max_residual)
}

pub fn residual_check_with(
    cfg: &MultiBumpConfig,
    grid: &Grid,
    t: f64,
    p: &Params,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    ensure_valid(cfg, p)?;
    check_grid_dims(grid, p)?;
    let dt = opts.dt;
    let tau = cfg.tau();
    if t + dt >= tau || t - dt < 0.0 {
        return Err(Error::OutsideWindow { t: t + dt, limit: tau });
    }
    let radial = matches!(grid.geometry, Geometry::Radial { .. });
    if radial && cfg.bumps.iter().any(|b| b.center.iter().any(|&c| c != 0.0)) {
        return Err(Error::InvalidConfig("radial residual needs all bump centres at the origin".into()));
    }
    let h = grid.h;
    let margin = opts.boundary_margin.unwrap_or(2.0 * h);
    let radii: Vec<(f64, f64)> = cfg
        .bumps
        .iter()
        .map(|b| {
            let r = support_radius(b, t, p.n)?;
            let drift = (support_radius(b, t + dt, p.n)? - support_radius(b, t - dt, p.n)?).abs();
            Ok((r, margin + drift))
        })
        .collect::<Result<_>>()?;

    let v = |x: &[f64], s: f64| sum_bumps(cfg, x, s, p);
    let v2 = |x: &[f64]| -> Result<f64> { Ok(v(x, t)?.powi(2)) };

    let mut max_res: f64 = 0.0;
    let mut points = 0;
    for k in 0..grid.len() {
        if grid.is_boundary_node(k) {
            continue;
        }
        let x = grid_point(grid, k, p.n);
        let mut ok = true;
        let mut inside_core = false;
        let mut inside_any = false;
        for (b, &(r, m)) in cfg.bumps.iter().zip(&radii) {
            let d = dist2(&x, &b.center).sqrt();
            if (d - r).abs() < m {
                ok = false;
            }
            if d < r {
                inside_any = true;
            }
            if let Some(fr) = opts.interior_fraction {
                if d < fr * r {
                    inside_core = true;
                }
            }
        }
        if opts.interior_fraction.is_some() && inside_any && !inside_core {
            ok = false;
        }
        if !ok {
            continue;
        }
        let vt = (v(&x, t + dt)? - v(&x, t - dt)?) / (2.0 * dt);
        let centre = v2(&x)?;
        let lap = if radial {
            let r = x[0];
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[0] = r + h;
            xm[0] = (r - h).abs();
            let fp = v2(&xp)?;
            let fm = v2(&xm)?;
            (fp - 2.0 * centre + fm) / (h * h) + (p.n as f64 - 1.0) / r * (fp - fm) / (2.0 * h)
        } else {
            let mut acc = 0.0;
            for dim in 0..p.n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[dim] += h;
                xm[dim] -= h;
                acc += (v2(&xp)? - 2.0 * centre + v2(&xm)?) / (h * h);
            }
            acc
        };
        max_res = max_res.max((vt + p.b * lap).abs());
        points += 1;
    }
    Ok(ResidualReport {
        max_residual: max_res,
        points,
    })
}

/// Natural size of the discretisation residual: `max_k 1/(b s_k²)` with
/// `s_k` the bump clocks at time `t`.
pub fn residual_scale(cfg: &MultiBumpConfig, t: f64, p: &Params) -> Result<f64> {
    cfg.bumps.iter().try_fold(0.0f64, |acc, b| {
        let s = b.clock(t)?;
        Ok(acc.max(1.0 / (p.b * s * s)))
    })
}

/// One positive bump flanked by two negative ones in 1D, with the
/// negative-positive gaps within 2% of touching at `t = 0` (their closest
/// approach). Returns the configuration, its parameters, and three
/// snapshot times inside `[0, τ)`.
pub fn three_bump_example() -> (MultiBumpConfig, Params, [f64; 3]) {
    let p = Params {
        a: 2.0,
        b: 1.0,
        c: 0.0,
        d: 0.0,
        n: 1,
    };
    let (tp, tn) = (1.0f64, 2.0f64);
    // T_l <= T_j: tightest at t = 0, T_j^{1/3} + T_l^{1/3} < |x_l − x_j| / (2√3)
    let touching = 2.0 * 3f64.sqrt() * (tn.cbrt() + tp.cbrt());
    let sep = 1.02 * touching;
    let cfg = MultiBumpConfig::new(vec![
        BarenblattBump::positive(tp, vec![0.0]).expect("valid bump"),
        BarenblattBump::negative(tn, vec![-sep]).expect("valid bump"),
        BarenblattBump::negative(tn, vec![sep]).expect("valid bump"),
    ]);
    (cfg, p, [0.0, 0.5, 0.9])
}
