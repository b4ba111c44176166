//! Explicit conservative time stepping for the local equation
//! `∂t u = Δφ(u) + g(u)` and the mollified nonlocal model
//! `∂t u = ∇·(a∇u − u∇(V_ε ∗ u)) + g(u)`.
//!
//! Both steppers are forward Euler on a face-flux discretisation, so the
//! discrete mass `Σ w_i u_i` changes only through the reaction term and
//! Dirichlet boundaries. The local scheme is monotone under [`cfl_dt`]
//! while `u < a/2b`; beyond that threshold it is ill-posed and [`run`]
//! reports `ParabolicityLost`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Field, Geometry, Grid, Stencil, Variable};
use crate::model::{flux_phi, flux_psi, from_v, reaction_g, reaction_g_prime, reaction_h, to_v, Params};

/// Denominator floor of the stability bound.
pub const EPS_FLOOR: f64 = 1e-10;
/// Densities below `-NEGATIVE_TOL` raise a `NegativeDensity` event.
pub const NEGATIVE_TOL: f64 = 1e-10;
/// Shifted values above this raise `ParabolicityLost` in v-form runs.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Local,
    Nonlocal { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Adaptive { safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownPolicy {
    Halt,
    ContinueWithEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub model: Model,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    pub breakdown_policy: BreakdownPolicy,
    /// Record a snapshot every `output_stride` steps (the final state is
    /// always recorded).
    pub output_stride: usize,
    /// `|value|` above this halts the run with `ValueCapExceeded`.
    pub value_cap: f64,
}

impl SolverConfig {
    pub fn new(model: Model, t_end: f64) -> Self {
        SolverConfig {
            model,
            dt_policy: DtPolicy::Adaptive { safety: 0.4 },
            t_end,
            breakdown_policy: BreakdownPolicy::Halt,
            output_stride: 1,
            value_cap: 1e12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.dt_policy {
            DtPolicy::Adaptive { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(Error::InvalidConfig(format!("safety factor must lie in (0, 1], got {safety}")))
            }
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidConfig(format!("fixed dt must be positive, got {dt}")))
            }
            _ => {}
        }
        if let Model::Nonlocal { epsilon } = self.model {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {epsilon}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidConfig("output stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gaussian interaction kernel `V_ε(x) = 2b (2π ε²)^{-n/2} exp(−|x|²/2ε²)`,
/// sampled on the grid and renormalised so that `Σ V_i hⁿ = 2b` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub epsilon: f64,
    /// Total mass `2b`.
    pub mass: f64,
    pub h: f64,
    pub dims: usize,
    /// One-dimensional factor, normalised to `Σ w h = 1`; entry `m + k` is the
    /// weight at offset `k` for `k ∈ [−m, m]`.
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn gaussian(epsilon: f64, p: &Params, grid: &Grid) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        let dims = match grid.geometry {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
            Geometry::Radial { .. } => return Err(Error::UnsupportedGeometry("nonlocal kernel")),
        };
        let h = grid.h;
        let m = ((6.0 * epsilon / h).ceil() as usize).max(1);
        let mut weights: Vec<f64> = (0..=2 * m)
            .map(|j| {
                let x = (j as f64 - m as f64) * h;
                (-x * x / (2.0 * epsilon * epsilon)).exp()
            })
            .collect();
        let s: f64 = weights.iter().sum::<f64>() * h;
        weights.iter_mut().for_each(|w| *w /= s);
        Ok(Kernel {
            epsilon,
            mass: 2.0 * p.b,
            h,
            dims,
            weights,
        })
    }

    pub fn half_width(&self) -> usize {
        (self.weights.len() - 1) / 2
    }

    /// `Σ V_i hⁿ` over the full discrete kernel.
    pub fn discrete_mass(&self) -> f64 {
        let one: f64 = self.weights.iter().sum::<f64>() * self.h;
        self.mass * one.powi(self.dims as i32)
    }
}

/// Fold an extended node index back into `0..=n` by even reflection, or
/// `None` for zero extension.
fn fold(j: isize, n: isize, bc: BoundaryKind) -> Option<usize> {
    if (0..=n).contains(&j) {
        return Some(j as usize);
    }
    match bc {
        BoundaryKind::Dirichlet => None,
        BoundaryKind::Neumann => {
            let period = 2 * n;
            let mut r = j.rem_euclid(period);
            if r > n {
                r = period - r;
            }
            Some(r as usize)
        }
    }
}

fn convolve_line(src: &[f64], dst: &mut [f64], stride: usize, count: usize, kernel: &Kernel, bc: BoundaryKind) {
    let m = kernel.half_width() as isize;
    let n = count as isize - 1;
    for i in 0..count {
        let mut acc = 0.0;
        for k in -m..=m {
            if let Some(j) = fold(i as isize + k, n, bc) {
                acc += kernel.weights[(k + m) as usize] * src[j * stride];
            }
        }
        dst[i * stride] = acc * kernel.h;
    }
}

/// `V_ε ∗ f` evaluated at the grid nodes. Neumann fields are extended by
/// even reflection (so constants map to `2b·const`), Dirichlet fields by zero.
pub fn convolve(f: &Field, kernel: &Kernel) -> Result<Vec<f64>> {
    let grid = &f.grid;
    if (grid.h - kernel.h).abs() > 1e-14 * grid.h {
        return Err(Error::GridMismatch("kernel spacing differs from grid spacing".into()));
    }
    let bc = f.boundary;
    match grid.geometry {
        Geometry::Interval { .. } => {
            let mut out = vec![0.0; grid.len()];
            convolve_line(&f.values, &mut out, 1, grid.len(), kernel, bc);
            out.iter_mut().for_each(|o| *o *= kernel.mass);
            Ok(out)
        }
        Geometry::Rectangle { .. } => {
            let (nx, ny) = (grid.nodes_x(), grid.nodes_y());
            let mut tmp = vec![0.0; grid.len()];
            let mut out = vec![0.0; grid.len()];
            for j in 0..ny {
                let row = j * nx;
                convolve_line(&f.values[row..row + nx], &mut tmp[row..row + nx], 1, nx, kernel, bc);
            }
            for i in 0..nx {
                convolve_line(&tmp[i..], &mut out[i..], nx, ny, kernel, bc);
            }
            out.iter_mut().for_each(|o| *o *= kernel.mass);
            Ok(out)
        }
        Geometry::Radial { .. } => Err(Error::UnsupportedGeometry("nonlocal convolution")),
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("value {} at index {k}", values[k])));
    }
    Ok(())
}

/// Reusable stepping state for one grid and boundary condition.
struct Stepper {
    stencil: Stencil,
    kernel: Option<Kernel>,
    var: Variable,
    pot: Vec<f64>,
    lap: Vec<f64>,
}

impl Stepper {
    fn new(f: &Field, p: &Params, model: Model) -> Result<Self> {
        let kernel = match model {
            Model::Local => None,
            Model::Nonlocal { epsilon } => {
                if f.var != Variable::U {
                    return Err(Error::VariableMismatch {
                        expected: "u",
                        found: f.var.name(),
                    });
                }
                Some(Kernel::gaussian(epsilon, p, &f.grid)?)
            }
        };
        Ok(Stepper {
            stencil: Stencil::new(&f.grid, f.boundary),
            kernel,
            var: f.var,
            pot: vec![0.0; f.grid.len()],
            lap: vec![0.0; f.grid.len()],
        })
    }

    fn step_local(&mut self, values: &mut [f64], p: &Params, dt: f64) {
        let (ghost, reaction): (f64, fn(f64, &Params) -> f64) = match self.var {
            Variable::U => {
                for (q, &u) in self.pot.iter_mut().zip(values.iter()) {
                    *q = flux_phi(u, p);
                }
                (0.0, reaction_g)
            }
            Variable::V => {
                for (q, &v) in self.pot.iter_mut().zip(values.iter()) {
                    *q = flux_psi(v, p);
                }
                (flux_psi(-p.u_crit(), p), reaction_h)
            }
        };
        self.stencil.laplacian(&self.pot, ghost, &mut self.lap);
        for (k, x) in values.iter_mut().enumerate() {
            if self.stencil.active[k] {
                *x += dt * (self.lap[k] + reaction(*x, p));
            }
        }
    }

    fn drift_and_flux(&mut self, f: &Field, p: &Params) -> Result<f64> {
        let kernel = self.kernel.as_ref().expect("nonlocal stepper has a kernel");
        let w = convolve(f, kernel)?;
        let h = f.grid.h;
        let u = &f.values;
        self.lap.iter_mut().for_each(|x| *x = 0.0);
        let mut max_drift: f64 = 0.0;
        for face in &self.stencil.faces {
            let c = (w[face.r] - w[face.l]) / h;
            max_drift = max_drift.max(c.abs());
            let up = if c > 0.0 { u[face.l] } else { u[face.r] };
            let flux = -p.a * (u[face.r] - u[face.l]) / h + c * up;
            let transfer = face.coef * h * flux;
            self.lap[face.l] -= transfer;
            self.lap[face.r] += transfer;
        }
        for (k, x) in self.lap.iter_mut().enumerate() {
            *x = if self.stencil.active[k] { *x / self.stencil.volumes[k] } else { 0.0 };
        }
        Ok(max_drift)
    }

    fn step_nonlocal(&mut self, f: &mut Field, p: &Params, dt: f64) -> Result<()> {
        self.drift_and_flux(f, p)?;
        for (k, x) in f.values.iter_mut().enumerate() {
            if self.stencil.active[k] {
                *x += dt * (self.lap[k] + reaction_g(*x, p));
            }
        }
        Ok(())
    }

    fn stable_dt(&mut self, f: &Field, p: &Params, sigma: f64) -> Result<f64> {
        match self.kernel {
            None => Ok(cfl_dt(f, p, sigma)),
            Some(_) => {
                let max_drift = self.drift_and_flux(f, p)?;
                let dims = f.grid.spatial_dims() as f64;
                let diff = p.a * self.stencil.max_diag() + 2.0 * dims * max_drift / f.grid.h;
                let react = f
                    .values
                    .iter()
                    .map(|&u| reaction_g_prime(u, p).abs())
                    .fold(EPS_FLOOR, f64::max);
                Ok(sigma * (1.0 / diff).min(1.0 / react))
            }
        }
    }
}

/// One explicit step of the local model. Accepts `u` or `v` fields (the
/// latter evolve by `∂t v = −bΔ(v²) + h(v)`).
pub fn step_local(f: &Field, p: &Params, dt: f64) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let mut st = Stepper::new(f, p, Model::Local)?;
    let mut out = f.clone();
    st.step_local(&mut out.values, p, dt);
    check_finite(&out.values)?;
    Ok(out)
}

/// One explicit step of the nonlocal model with upwinded drift.
pub fn step_nonlocal(f: &Field, p: &Params, kernel: &Kernel, dt: f64) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let mut st = Stepper::new(f, p, Model::Local)?;
    if f.var != Variable::U {
        return Err(Error::VariableMismatch {
            expected: "u",
            found: f.var.name(),
        });
    }
    st.kernel = Some(kernel.clone());
    let mut out = f.clone();
    st.step_nonlocal(&mut out, p, dt)?;
    check_finite(&out.values)?;
    Ok(out)
}

/// Stability bound for the local model:
/// `σ h² / (2 n_dims max|φ'(u)|)`, capped by `σ / max|c − 2du|`.
pub fn cfl_dt(f: &Field, p: &Params, sigma: f64) -> f64 {
    let shift = match f.var {
        Variable::U => 0.0,
        Variable::V => p.u_crit(),
    };
    let (mut diff, mut react) = (EPS_FLOOR, EPS_FLOOR);
    for &x in &f.values {
        let u = x + shift;
        diff = diff.max((p.a - 2.0 * p.b * u).abs());
        react = react.max(reaction_g_prime(u, p).abs());
    }
    let h = f.grid.h;
    let dims = f.grid.spatial_dims() as f64;
    let dt_diff = sigma * h * h / (2.0 * dims * diff);
    dt_diff.min(sigma / react)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ParabolicityLost,
    NegativeDensity,
    ValueCapExceeded,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trajectory: Vec<Snapshot>,
    pub events: Vec<Event>,
    /// False once the local model has been continued past parabolicity loss.
    pub trusted: bool,
    pub steps: usize,
}

impl RunResult {
    pub fn last(&self) -> &Snapshot {
        self.trajectory.last().expect("trajectory holds at least the initial state")
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    pub fn completed(&self) -> bool {
        self.has_event(EventKind::Completed)
    }
}

struct Monitor {
    negative_reported: bool,
    parabolicity_reported: bool,
}

enum Verdict {
    Go,
    Stop,
}

impl Monitor {
    fn inspect(
        &mut self,
        f: &Field,
        t: f64,
        p: &Params,
        cfg: &SolverConfig,
        events: &mut Vec<Event>,
        trusted: &mut bool,
    ) -> Verdict {
        if let Some(k) = f.values.iter().position(|v| !v.is_finite() || v.abs() > cfg.value_cap) {
            events.push(Event {
                t,
                kind: EventKind::ValueCapExceeded,
                detail: format!("value {} at index {k} exceeds cap {}", f.values[k], cfg.value_cap),
            });
            return Verdict::Stop;
        }
        let shift = match f.var {
            Variable::U => 0.0,
            Variable::V => p.u_crit(),
        };
        let min_u = f.min() + shift;
        if !self.negative_reported && min_u < -NEGATIVE_TOL {
            self.negative_reported = true;
            events.push(Event {
                t,
                kind: EventKind::NegativeDensity,
                detail: format!("min u = {min_u:e}"),
            });
        }
        if cfg.model == Model::Local && !self.parabolicity_reported {
            let lost = match f.var {
                Variable::U => {
                    let margin = p.a - 2.0 * p.b * f.max();
                    (margin <= 0.0).then(|| format!("min(a - 2bu) = {margin:e}"))
                }
                Variable::V => {
                    let vmax = f.max();
                    (vmax > SIGN_TOL).then(|| format!("max v = {vmax:e} > 0"))
                }
            };
            if let Some(detail) = lost {
                self.parabolicity_reported = true;
                events.push(Event {
                    t,
                    kind: EventKind::ParabolicityLost,
                    detail,
                });
                match cfg.breakdown_policy {
                    BreakdownPolicy::Halt => return Verdict::Stop,
                    BreakdownPolicy::ContinueWithEvent => *trusted = false,
                }
            }
        }
        Verdict::Go
    }
}

fn impose_dirichlet(f: &mut Field, p: &Params) {
    if f.boundary != BoundaryKind::Dirichlet {
        return;
    }
    let value = match f.var {
        Variable::U => 0.0,
        Variable::V => -p.u_crit(),
    };
    for k in 0..f.grid.len() {
        if f.grid.is_boundary_node(k) {
            f.values[k] = value;
        }
    }
}

/// Integrate from `f0` to `cfg.t_end`, recording snapshots and events.
/// Dirichlet boundary nodes are set to the boundary value before the first
/// step.
pub fn run(f0: &Field, p: &Params, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    p.validate()?;
    check_finite(&f0.values)?;
    if matches!(cfg.model, Model::Nonlocal { .. }) && f0.var == Variable::V {
        return run_v_form(f0, p, cfg);
    }
    let mut f = f0.clone();
    impose_dirichlet(&mut f, p);
    let mut stepper = Stepper::new(&f, p, cfg.model)?;
    let mut monitor = Monitor {
        negative_reported: false,
        parabolicity_reported: false,
    };
    let mut events = Vec::new();
    let mut trusted = true;
    let mut trajectory = vec![Snapshot { t: 0.0, field: f.clone() }];
    let mut t = 0.0;
    let mut steps = 0usize;

    if let Verdict::Stop = monitor.inspect(&f, t, p, cfg, &mut events, &mut trusted) {
        return Ok(RunResult {
            trajectory,
            events,
            trusted,
            steps,
        });
    }

    let mut halted = false;
    while t < cfg.t_end {
        let mut dt = match cfg.dt_policy {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Adaptive { safety } => stepper.stable_dt(&f, p, safety)?,
        };
        let remaining = cfg.t_end - t;
        let last = dt >= remaining * (1.0 - 1e-12);
        if last {
            dt = remaining;
        }
        match cfg.model {
            Model::Local => stepper.step_local(&mut f.values, p, dt),
            Model::Nonlocal { .. } => stepper.step_nonlocal(&mut f, p, dt)?,
        }
        t = if last { cfg.t_end } else { t + dt };
        steps += 1;
        let verdict = monitor.inspect(&f, t, p, cfg, &mut events, &mut trusted);
        if steps % cfg.output_stride == 0 || last || matches!(verdict, Verdict::Stop) {
            trajectory.push(Snapshot { t, field: f.clone() });
        }
        if let Verdict::Stop = verdict {
            halted = true;
            break;
        }
    }
    if !halted {
        events.push(Event {
            t,
            kind: EventKind::Completed,
            detail: format!("{steps} steps"),
        });
    }
    Ok(RunResult {
        trajectory,
        events,
        trusted,
        steps,
    })
}

/// Integrate shifted data `v = u − a/2b`. The local model steps
/// `∂t v = −bΔ(v²) + h(v)` directly; the degenerate value `v = 0` is
/// admissible and only strict sign crossings `v > 0` count as parabolicity
/// loss. The nonlocal model is run in `u` and the trajectory shifted back.
pub fn run_v_form(v0: &Field, p: &Params, cfg: &SolverConfig) -> Result<RunResult> {
    if v0.var != Variable::V {
        return Err(Error::VariableMismatch {
            expected: "v",
            found: v0.var.name(),
        });
    }
    match cfg.model {
        Model::Local => run(v0, p, cfg),
        Model::Nonlocal { .. } => {
            let u0 = from_v(v0, p)?;
            let mut res = run(&u0, p, cfg)?;
            for s in &mut res.trajectory {
                s.field = to_v(&s.field, p)?;
            }
            Ok(res)
        }
    }
}
