//! Functionals evaluated along trajectories: mass, entropy and its
//! dissipation, the eigenfunction-weighted mass `A(t)` with its blow-up
//! threshold, and the concavity functionals `Ψ(t)`, `E(t)`, `H(s)`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Geometry, Stencil, Variable};
use crate::model::{to_v, Params};
use crate::pde::{Event, RunResult, NEGATIVE_TOL};
use crate::quad::adaptive_simpson;

/// Densities at or below this contribute the limit value of `u log u`.
pub const U_FLOOR: f64 = 1e-14;
/// Absolute tolerance of the quadrature behind [`concavity_h`].
pub const H_QUAD_TOL: f64 = 1e-10;

fn u_values(f: &Field, p: &Params) -> Vec<f64> {
    match f.var {
        Variable::U => f.values.clone(),
        Variable::V => f.values.iter().map(|v| v + p.u_crit()).collect(),
    }
}

fn check_nonnegative(u: &[f64]) -> Result<()> {
    match u.iter().enumerate().find(|(_, &x)| x < -NEGATIVE_TOL) {
        Some((index, &value)) => Err(Error::NegativeDensity { index, value }),
        None => Ok(()),
    }
}

/// `Σ w_i f_i` with trapezoid or shell-volume weights.
pub fn mass(f: &Field) -> f64 {
    f.integral()
}

/// `Σ w_i [a u_i (log u_i − 1) − b u_i²]`. Accepts `u` or `v` fields.
pub fn entropy(f: &Field, p: &Params) -> Result<f64> {
    let u = u_values(f, p);
    check_nonnegative(&u)?;
    Ok(f.grid
        .weights()
        .iter()
        .zip(&u)
        .map(|(w, &u)| {
            let ulog = if u <= U_FLOOR { 0.0 } else { p.a * u * (u.ln() - 1.0) };
            w * (ulog - p.b * u * u)
        })
        .sum())
}

/// `|∇f|²` at every value by central differences. Neumann boundaries mirror
/// the field; Dirichlet boundaries use one-sided differences (vertex grids)
/// or a zero ghost value at distance `h` (radial grids).
pub fn gradient_sq(f: &Field) -> Vec<f64> {
    let g = &f.grid;
    let h = g.h;
    let v = &f.values;
    let line = |at: &dyn Fn(usize) -> f64, i: usize, n: usize| -> f64 {
        if i == 0 || i == n - 1 {
            match f.boundary {
                BoundaryKind::Neumann => 0.0,
                BoundaryKind::Dirichlet if i == 0 => (at(1) - at(0)) / h,
                BoundaryKind::Dirichlet => (at(n - 1) - at(n - 2)) / h,
            }
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        }
    };
    match g.geometry {
        Geometry::Interval { .. } => {
            let n = g.len();
            (0..n).map(|i| line(&|k| v[k], i, n).powi(2)).collect()
        }
        Geometry::Rectangle { .. } => {
            let (nx, ny) = (g.nodes_x(), g.nodes_y());
            let mut out = Vec::with_capacity(g.len());
            for j in 0..ny {
                for i in 0..nx {
                    let gx = line(&|k| v[g.index(k, j)], i, nx);
                    let gy = line(&|k| v[g.index(i, k)], j, ny);
                    out.push(gx * gx + gy * gy);
                }
            }
            out
        }
        Geometry::Radial { .. } => {
            let n = g.len();
            (0..n)
                .map(|i| {
                    let lo = if i == 0 { v[0] } else { v[i - 1] };
                    let hi = if i + 1 < n {
                        v[i + 1]
                    } else {
                        match f.boundary {
                            BoundaryKind::Neumann => v[i],
                            BoundaryKind::Dirichlet => 0.0,
                        }
                    };
                    ((hi - lo) / (2.0 * h)).powi(2)
                })
                .collect()
        }
    }
}

/// `D = −Σ w_i (1/max(u_i, u_floor)) (a − 2b u_i)² |∇u|_i² ≤ 0`.
pub fn entropy_dissipation(f: &Field, p: &Params) -> Result<f64> {
    let u = u_values(f, p);
    check_nonnegative(&u)?;
    let grad = gradient_sq(&Field {
        grid: f.grid,
        boundary: f.boundary,
        var: Variable::U,
        values: u.clone(),
    });
    let s: f64 = f
        .grid
        .weights()
        .iter()
        .zip(u.iter().zip(&grad))
        .map(|(w, (&u, &g2))| {
            let k = p.a - 2.0 * p.b * u;
            w * k * k * g2 / u.max(U_FLOOR)
        })
        .sum();
    Ok(-s)
}

/// `min_i (a − 2b u_i)`; nonpositive values signal parabolicity loss.
pub fn parabolicity_margin(f: &Field, p: &Params) -> f64 {
    u_values(f, p)
        .iter()
        .map(|u| p.a - 2.0 * p.b * u)
        .fold(f64::INFINITY, f64::min)
}

/// `A = Σ w_i φ_i u_i`.
pub fn kaplan_a(f: &Field, ep: &EigenPair) -> Result<f64> {
    if !f.grid.compatible(&ep.phi.grid) {
        return Err(Error::GridMismatch("field and eigenfunction live on different grids".into()));
    }
    Ok(f.grid
        .weights()
        .iter()
        .zip(f.values.iter().zip(&ep.phi.values))
        .map(|(w, (u, phi))| w * u * phi)
        .sum())
}

/// Blow-up threshold `max(μa − c, 0)/(μb − d)` on `A₀`.
pub fn kaplan_threshold(p: &Params, mu: f64) -> Result<f64> {
    let beta = mu * p.b - p.d;
    if !(beta > 0.0) {
        return Err(Error::Hypothesis(format!("requires mu*b > d, got mu*b - d = {beta}")));
    }
    Ok((mu * p.a - p.c).max(0.0) / beta)
}

/// Upper bound on the blow-up time for `A₀` above the threshold.
///
/// With `κ = c − μa` and `β = μb − d` this is `ln(1 + κ/(βA₀))/κ`, the time
/// at which `1/Ξ(0) − (β/κ)(e^{κt} − 1)` vanishes. The same expression
/// covers both signs of `κ`; at `κ = 0` it is the limit `1/(βA₀)`.
pub fn kaplan_tstar(p: &Params, mu: f64, a0: f64) -> Result<f64> {
    let threshold = kaplan_threshold(p, mu)?;
    if !(a0 > threshold) || !a0.is_finite() {
        return Err(Error::Hypothesis(format!("A0 = {a0} does not exceed threshold {threshold}")));
    }
    let kappa = p.c - mu * p.a;
    let beta = mu * p.b - p.d;
    if kappa == 0.0 {
        return Ok(1.0 / (beta * a0));
    }
    Ok((kappa / (beta * a0)).ln_1p() / kappa)
}

/// `Ξ(t) = e^{−(c − μa)t} A(t)`.
pub fn kaplan_xi(t: f64, a: f64, p: &Params, mu: f64) -> f64 {
    (-(p.c - mu * p.a) * t).exp() * a
}

/// Forward-difference defect of the Kaplan inequality
/// `A' ≥ (c − μa)A + (μb − d)A²` along a sampled series: entry `k` is
/// `(A_{k+1} − A_k)/Δt − (c − μa)A_k − (μb − d)A_k²`. Negative entries
/// measure the violation.
pub fn kaplan_defects(times: &[f64], a: &[f64], p: &Params, mu: f64) -> Result<Vec<f64>> {
    if times.len() != a.len() {
        return Err(Error::InvalidParameter("times and A series differ in length".into()));
    }
    let kappa = p.c - mu * p.a;
    let beta = mu * p.b - p.d;
    Ok(times
        .windows(2)
        .zip(a.windows(2))
        .map(|(t, a)| (a[1] - a[0]) / (t[1] - t[0]) - kappa * a[0] - beta * a[0] * a[0])
        .collect())
}

/// Reaction `h(s)` in the shifted variable, as seen by the concavity
/// functionals.
#[derive(Clone)]
pub enum Reaction {
    /// `h(s) = (c − da/2b − ds)(s + a/2b)`.
    Logistic(Params),
    Zero,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Reaction {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Reaction::Logistic(p) => crate::model::reaction_h(s, p),
            Reaction::Zero => 0.0,
            Reaction::Custom(f) => f(s),
        }
    }
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Logistic(p) => write!(f, "Logistic({p:?})"),
            Reaction::Zero => write!(f, "Zero"),
            Reaction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConcavityConfig {
    pub m: f64,
    pub reaction: Reaction,
    pub alpha: f64,
}

impl ConcavityConfig {
    /// Logistic reaction with `α` at the midpoint `(m − 1)/(2(m + 1))`.
    pub fn new(p: &Params, m: f64) -> Result<Self> {
        Self::with_reaction(m, Reaction::Logistic(*p))
    }

    pub fn with_reaction(m: f64, reaction: Reaction) -> Result<Self> {
        let cfg = ConcavityConfig {
            m,
            reaction,
            alpha: (m - 1.0) / (2.0 * (m + 1.0)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must exceed 1, got {}", self.m)));
        }
        let top = (self.m - 1.0) / (self.m + 1.0);
        if !(self.alpha > 0.0 && self.alpha < top) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, {top}), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// `H(s) = ∫₀ˢ m t^{m−1} h(t) dt` by adaptive quadrature.
pub fn concavity_h(s: f64, cfg: &ConcavityConfig) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if let Reaction::Zero = cfg.reaction {
        return 0.0;
    }
    let m = cfg.m;
    let integrand = |t: f64| m * t.powf(m - 1.0) * cfg.reaction.eval(t);
    adaptive_simpson(&integrand, 0.0, s, H_QUAD_TOL)
}

/// Closed form of `H(s)` where one exists (logistic and zero reactions).
pub fn concavity_h_closed_form(s: f64, cfg: &ConcavityConfig) -> Option<f64> {
    if s <= 0.0 {
        return Some(0.0);
    }
    match &cfg.reaction {
        Reaction::Zero => Some(0.0),
        Reaction::Logistic(p) => {
            // h(s) = −d s² + (κ − dβ) s + κβ with β = a/2b, κ = c − dβ
            let beta = p.u_crit();
            let kappa = p.c - p.d * beta;
            let m = cfg.m;
            Some(
                m * (-p.d * s.powf(m + 2.0) / (m + 2.0)
                    + (kappa - p.d * beta) * s.powf(m + 1.0) / (m + 1.0)
                    + kappa * beta * s.powf(m) / m),
            )
        }
        Reaction::Custom(_) => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GgReport {
    pub samples: usize,
    pub s_max: f64,
    /// Smallest sampled value of `sᵐh(s) − 2H(s)`.
    pub min_value: f64,
    pub argmin: f64,
    pub first_violation: Option<f64>,
    pub violations: usize,
}

impl GgReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Sample `sᵐh(s) − 2H(s)` at `s = 0` and `samples − 1` log-spaced points
/// of `(0, s_max]` (six decades). A sample counts as a violation when it is
/// below `−1e−9·(1 + |sᵐh| + |2H|)`, which absorbs quadrature error.
pub fn check_gg(cfg: &ConcavityConfig, s_max: f64, samples: usize) -> Result<GgReport> {
    if samples < 2 {
        return Err(Error::InvalidParameter("check_gg needs at least 2 samples".into()));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("s_max must be > 0, got {s_max}")));
    }
    let lo = s_max * 1e-6;
    let k = samples - 1;
    let points = std::iter::once(0.0).chain((0..k).map(|i| {
        if k == 1 {
            s_max
        } else {
            lo * (s_max / lo).powf(i as f64 / (k - 1) as f64)
        }
    }));
    let mut report = GgReport {
        samples,
        s_max,
        min_value: f64::INFINITY,
        argmin: 0.0,
        first_violation: None,
        violations: 0,
    };
    for s in points {
        let lhs = s.powf(cfg.m) * cfg.reaction.eval(s);
        let two_h = 2.0 * concavity_h(s, cfg);
        let value = lhs - two_h;
        if value < report.min_value {
            report.min_value = value;
            report.argmin = s;
        }
        if value < -1e-9 * (1.0 + lhs.abs() + two_h.abs()) {
            report.violations += 1;
            report.first_violation.get_or_insert(s);
        }
    }
    Ok(report)
}

/// `E = (b/2) Σ_faces |∇(vᵐ)|² + Σ w_i H(v_i)` for a nonnegative `v` field.
pub fn concavity_energy(v: &Field, cfg: &ConcavityConfig, p: &Params) -> Result<f64> {
    if v.var != Variable::V {
        return Err(Error::VariableMismatch {
            expected: "v",
            found: v.var.name(),
        });
    }
    check_nonnegative(&v.values)?;
    let vm: Vec<f64> = v.values.iter().map(|x| x.max(0.0).powf(cfg.m)).collect();
    let stencil = Stencil::new(&v.grid, v.boundary);
    let grad = 0.5 * p.b * stencil.dirichlet_energy(&vm);
    let pot: f64 = v
        .grid
        .weights()
        .iter()
        .zip(&v.values)
        .map(|(w, &x)| w * concavity_h(x.max(0.0), cfg))
        .sum();
    Ok(grad + pot)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavitySeries {
    pub times: Vec<f64>,
    /// `Ψ(t) = ∫₀ᵗ Σ w vᵐ⁺¹`, trapezoid in time.
    pub psi: Vec<f64>,
    /// `Ψ'(t) = Σ w vᵐ⁺¹`.
    pub psi_prime: Vec<f64>,
    /// Finite-difference `Ψ''`, NaN at the end points.
    pub psi_second: Vec<f64>,
    pub energy: Vec<f64>,
    /// `ΨΨ'' − (α + 1)Ψ'²`, NaN where `Ψ''` is.
    pub margin: Vec<f64>,
    pub e0_positive: bool,
    /// First time at which `[1 − ((m+1)(α+1)/2m)^{1/2}] Ψ'(t) ≥ Ψ'(0)`.
    pub onset: Option<f64>,
    /// `t₀ + Ψ(t₀)/(αΨ'(t₀))` at the onset.
    pub t_star_bound: Option<f64>,
}

/// Concavity functionals along a trajectory (either variable; `u`
/// snapshots are shifted). Every snapshot must satisfy `v ≥ 0`.
pub fn concavity_series(result: &RunResult, cfg: &ConcavityConfig, p: &Params) -> Result<ConcavitySeries> {
    cfg.validate()?;
    let m = cfg.m;
    let mut times = Vec::with_capacity(result.trajectory.len());
    let mut psi_prime = Vec::new();
    let mut energy = Vec::new();
    for snap in &result.trajectory {
        let v = match snap.field.var {
            Variable::V => snap.field.clone(),
            Variable::U => to_v(&snap.field, p)?,
        };
        check_nonnegative(&v.values)?;
        times.push(snap.t);
        psi_prime.push(
            v.grid
                .weights()
                .iter()
                .zip(&v.values)
                .map(|(w, &x)| w * x.max(0.0).powf(m + 1.0))
                .sum::<f64>(),
        );
        energy.push(concavity_energy(&v, cfg, p)?);
    }
    let n = times.len();
    let mut psi = vec![0.0; n];
    for k in 1..n {
        psi[k] = psi[k - 1] + 0.5 * (times[k] - times[k - 1]) * (psi_prime[k] + psi_prime[k - 1]);
    }
    let mut psi_second = vec![f64::NAN; n];
    for k in 1..n.saturating_sub(1) {
        let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let s0 = (psi_prime[k] - psi_prime[k - 1]) / h0;
        let s1 = (psi_prime[k + 1] - psi_prime[k]) / h1;
        psi_second[k] = (s0 * h1 + s1 * h0) / (h0 + h1);
    }
    let margin = (0..n)
        .map(|k| psi[k] * psi_second[k] - (cfg.alpha + 1.0) * psi_prime[k].powi(2))
        .collect();
    let factor = 1.0 - ((m + 1.0) * (cfg.alpha + 1.0) / (2.0 * m)).sqrt();
    let onset_idx = if n > 0 && psi_prime[0] > 0.0 {
        (0..n).find(|&k| factor * psi_prime[k] >= psi_prime[0])
    } else {
        None
    };
    let onset = onset_idx.map(|k| times[k]);
    let t_star_bound = onset_idx.map(|k| times[k] + psi[k] / (cfg.alpha * psi_prime[k]));
    Ok(ConcavitySeries {
        e0_positive: energy.first().is_some_and(|&e| e > 0.0),
        times,
        psi,
        psi_prime,
        psi_second,
        energy,
        margin,
        onset,
        t_star_bound,
    })
}

/// Per-snapshot diagnostics. Entries that cannot be evaluated (negative
/// density for the entropy, no eigenpair, no concavity configuration or
/// `v < 0`) are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub entropy: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub margin: Vec<f64>,
    pub kaplan_a: Vec<f64>,
    pub psi: Vec<f64>,
    pub energy: Vec<f64>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Default)]
pub struct SeriesOptions<'a> {
    pub eigen: Option<&'a EigenPair>,
    pub concavity: Option<&'a ConcavityConfig>,
}

pub fn diagnostics_series(result: &RunResult, p: &Params, opts: &SeriesOptions) -> Result<DiagnosticsSeries> {
    let n = result.trajectory.len();
    let mut s = DiagnosticsSeries {
        times: Vec::with_capacity(n),
        mass: Vec::with_capacity(n),
        entropy: Vec::with_capacity(n),
        dissipation: Vec::with_capacity(n),
        margin: Vec::with_capacity(n),
        kaplan_a: Vec::with_capacity(n),
        psi: vec![f64::NAN; n],
        energy: vec![f64::NAN; n],
        events: result.events.clone(),
    };
    for snap in &result.trajectory {
        let f = &snap.field;
        let u = match f.var {
            Variable::U => f.clone(),
            Variable::V => crate::model::from_v(f, p)?,
        };
        s.times.push(snap.t);
        s.mass.push(mass(&u));
        s.entropy.push(entropy(&u, p).unwrap_or(f64::NAN));
        s.dissipation.push(entropy_dissipation(&u, p).unwrap_or(f64::NAN));
        s.margin.push(parabolicity_margin(&u, p));
        s.kaplan_a.push(match opts.eigen {
            Some(ep) => kaplan_a(&u, ep)?,
            None => f64::NAN,
        });
    }
    if let Some(cfg) = opts.concavity {
        if let Ok(c) = concavity_series(result, cfg, p) {
            s.psi = c.psi;
            s.energy = c.energy;
        }
    }
    Ok(s)
}

impl DiagnosticsSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,mass,entropy,dissipation,margin,A,psi,energyE")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.times[k],
                self.mass[k],
                self.entropy[k],
                self.dissipation[k],
                self.margin[k],
                self.kaplan_a[k],
                self.psi[k],
                self.energy[k]
            )?;
        }
        Ok(())
    }
}
