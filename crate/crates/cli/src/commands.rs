//! The five pipelines. Each takes a validated [`RunSpec`], writes its files
//! under `output.dir` with the `output.prefix` stem, and reports an exit code.

use rayon::prelude::*;
use serde::Serialize;

use aggdiff::diagnostics::{self, ConcavityConfig, SeriesOptions};
use aggdiff::eigen::{self, EigenPair};
use aggdiff::exact::{self, BumpSign, MultiBumpConfig, ResidualOptions};
use aggdiff::model::{from_v, to_v};
use aggdiff::particles::{self, KdeBoundary, ParticleConfig, ParticleDomain, ParticleState};
use aggdiff::pde::{self, BreakdownPolicy, DtPolicy, Event, EventKind, Model, RunResult, Snapshot, SolverConfig};
use aggdiff::regimes::{self, RegimeReport};
use aggdiff::{io, BoundaryKind, Field, Geometry, Grid, Params, Variable};

use crate::output::OutputDir;
use crate::spec::{self, Breakdown, Command, GridKind, InitialKind, ModelKind, ParticleDomainKind, RunSpec};
use crate::{CliError, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION};

const EIGEN_TOL: f64 = 1e-10;

/// Result of a command that ran to the end (possibly reporting a
/// breakdown through `exit_code`).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
    pub files: Vec<std::path::PathBuf>,
}

pub fn run_command(cmd: Command, spec: &RunSpec) -> Result<Outcome, CliError> {
    match cmd {
        Command::Simulate => simulate(spec),
        Command::VerifyExact => verify_exact(spec),
        Command::Regimes => regimes(spec),
        Command::Particles => particles(spec),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn domain_centre(grid: &Grid) -> [f64; 2] {
    match grid.geometry {
        Geometry::Interval { length } => [grid.origin[0] + 0.5 * length, 0.0],
        Geometry::Rectangle { lx, ly } => [grid.origin[0] + 0.5 * lx, grid.origin[1] + 0.5 * ly],
        Geometry::Radial { .. } => [0.0, 0.0],
    }
}

/// Dirichlet eigenpair on `grid`: analytic where available, numeric on radial
/// grids.
fn eigenpair(grid: &Grid) -> Result<EigenPair, CliError> {
    match grid.geometry {
        Geometry::Radial { .. } => Ok(eigen::dirichlet_first_numeric(grid, EIGEN_TOL)?),
        _ => Ok(eigen::dirichlet_first_analytic(grid)?),
    }
}

/// Initial field in the variable named by the spec (barenblatt data is `v`).
pub fn initial_field(spec: &RunSpec) -> Result<Field, CliError> {
    let p = spec.params()?;
    let grid = spec.grid()?;
    let bc = spec.grid.boundary;
    let ini = &spec.initial;
    let var = ini.variable;
    let centre = match ini.center.as_slice() {
        [] => domain_centre(&grid),
        [x] => [*x, 0.0],
        [x, y, ..] => [*x, *y],
    };
    let mut f = match ini.kind {
        InitialKind::Constant => Field::constant(grid, bc, var, ini.value),
        InitialKind::Gaussian => {
            let w2 = 2.0 * ini.width * ini.width;
            Field::from_fn(grid, bc, var, |x| {
                let r2 = (x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2);
                ini.value + ini.amplitude * (-r2 / w2).exp()
            })
        }
        InitialKind::Eigenfunction => {
            let ep = eigenpair(&grid)?;
            let scale = match ini.a0 {
                Some(a0) => {
                    let base = diagnostics::kaplan_a(&Field::constant(grid, bc, Variable::U, ini.value), &ep)?;
                    let unit = diagnostics::kaplan_a(&ep.phi, &ep)?;
                    (a0 - base) / unit
                }
                None => ini.amplitude,
            };
            let values = ep.phi.values.iter().map(|phi| ini.value + scale * phi).collect();
            Field::new(grid, bc, var, values)?
        }
        InitialKind::Barenblatt => exact::multibump_field(&spec.bumps()?, &grid, bc, 0.0, &p)?,
    };
    if let Some(cap) = ini.cap {
        f.values.iter_mut().for_each(|v| *v = v.min(cap));
    }
    if !f.is_finite() {
        return Err(invalid("initial data is not finite"));
    }
    Ok(f)
}

fn as_u(f: &Field, p: &Params) -> Result<Field, CliError> {
    Ok(match f.var {
        Variable::U => f.clone(),
        Variable::V => from_v(f, p)?,
    })
}

fn model(spec: &RunSpec) -> Model {
    match spec.solver.model {
        ModelKind::Local => Model::Local,
        ModelKind::Nonlocal => Model::Nonlocal {
            epsilon: spec.solver.epsilon,
        },
    }
}

fn solver_config(spec: &RunSpec, t_end: f64) -> SolverConfig {
    let s = &spec.solver;
    SolverConfig {
        model: model(spec),
        dt_policy: match s.dt {
            Some(dt) => DtPolicy::Fixed { dt },
            None => DtPolicy::Adaptive { safety: s.safety },
        },
        t_end,
        breakdown_policy: match s.breakdown {
            Breakdown::Halt => BreakdownPolicy::Halt,
            Breakdown::Continue => BreakdownPolicy::ContinueWithEvent,
        },
        output_stride: s.output_stride,
        value_cap: s.value_cap,
    }
}

fn integrate(f0: &Field, p: &Params, cfg: &SolverConfig) -> Result<RunResult, CliError> {
    Ok(match f0.var {
        Variable::U => pde::run(f0, p, cfg)?,
        Variable::V => pde::run_v_form(f0, p, cfg)?,
    })
}

/// Run from `f0` and keep exactly one snapshot per requested time (sorted,
/// absolute). Stops early if a segment halts.
fn run_to_times(f0: &Field, p: &Params, spec: &RunSpec, times: &[f64]) -> Result<RunResult, CliError> {
    let mut out = RunResult {
        trajectory: Vec::new(),
        events: Vec::new(),
        trusted: true,
        steps: 0,
    };
    let mut f = f0.clone();
    let mut t = 0.0;
    for &target in times {
        if target > t {
            let mut cfg = solver_config(spec, target - t);
            cfg.output_stride = usize::MAX;
            let seg = integrate(&f, p, &cfg)?;
            out.steps += seg.steps;
            out.trusted &= seg.trusted;
            out.events.extend(
                seg.events
                    .iter()
                    .filter(|e| e.kind != EventKind::Completed)
                    .map(|e| Event { t: e.t + t, ..e.clone() }),
            );
            let done = seg.completed();
            f = seg.last().field.clone();
            if !done {
                let t_halt = t + seg.last().t;
                out.trajectory.push(Snapshot { t: t_halt, field: f });
                return Ok(out);
            }
            t = target;
        }
        out.trajectory.push(Snapshot { t: target, field: f.clone() });
    }
    out.events.push(Event {
        t,
        kind: EventKind::Completed,
        detail: format!("{} steps", out.steps),
    });
    Ok(out)
}

#[derive(Serialize)]
struct EventsDoc<'a> {
    params: Params,
    grid: Grid,
    boundary: BoundaryKind,
    events: &'a [Event],
    trusted: bool,
    steps: usize,
    snapshots: usize,
}

fn concavity_config(spec: &RunSpec, p: &Params) -> Result<Option<ConcavityConfig>, CliError> {
    spec.diagnostics
        .concavity_m
        .map(|m| ConcavityConfig::new(p, m).map_err(CliError::from))
        .transpose()
}

pub fn simulate(spec: &RunSpec) -> Result<Outcome, CliError> {
    let p = spec.params()?;
    let f0 = initial_field(spec)?;
    let cfg = solver_config(spec, spec.solver.t_end);
    let result = integrate(&f0, &p, &cfg)?;
    let out = OutputDir::create(spec)?;
    let mut files = vec![out.csv("snapshots.csv", |w| io::write_snapshots_csv(w, &result))?];

    if spec.diagnostics.enabled {
        let ep = if spec.diagnostics.kaplan { Some(eigenpair(&f0.grid)?) } else { None };
        let cc = concavity_config(spec, &p)?;
        let opts = SeriesOptions {
            eigen: ep.as_ref(),
            concavity: cc.as_ref(),
        };
        let series = diagnostics::diagnostics_series(&result, &p, &opts)?;
        files.push(out.csv("diagnostics.csv", |w| series.write_csv(w))?);
    }
    files.push(out.json(
        "events.json",
        &EventsDoc {
            params: p,
            grid: f0.grid,
            boundary: spec.grid.boundary,
            events: &result.events,
            trusted: result.trusted,
            steps: result.steps,
            snapshots: result.trajectory.len(),
        },
    )?);

    let kinds: Vec<String> = result.events.iter().map(|e| format!("{:?}@{}", e.kind, e.t)).collect();
    let (exit_code, mut message) = if result.completed() {
        (EXIT_OK, format!("completed {} steps to t = {}", result.steps, result.last().t))
    } else {
        (EXIT_RUNTIME, format!("run halted at t = {}", result.last().t))
    };
    message.push_str(&format!("; events: [{}]", kinds.join(", ")));
    if !result.trusted {
        message.push_str("; continued past parabolicity loss, results are diagnostic only");
    }
    Ok(Outcome {
        exit_code,
        message,
        files,
    })
}

fn exact_times(spec: &RunSpec, cfg: &MultiBumpConfig) -> Vec<f64> {
    if !spec.exact.times.is_empty() {
        let mut t = spec.exact.times.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        return t;
    }
    let tau = cfg.tau();
    if tau.is_finite() {
        vec![0.0, 0.5 * tau, 0.9 * tau]
    } else {
        vec![0.0, 0.5 * spec.solver.t_end, spec.solver.t_end]
    }
}

pub fn verify_exact(spec: &RunSpec) -> Result<Outcome, CliError> {
    if spec.initial.kind != InitialKind::Barenblatt {
        return Err(invalid("verify-exact needs initial.kind = \"barenblatt\" with a bump list"));
    }
    let p = spec.params()?;
    let grid = spec.grid()?;
    let bc = spec.grid.boundary;
    let cfg = spec.bumps()?;
    let report = exact::validate_multibump(&cfg, &p);
    let out = OutputDir::create(spec)?;
    let mut files = vec![out.csv("conditions.csv", |w| {
        writeln!(w, "name,bumps,lhs,rhs,holds")?;
        for c in &report.checks {
            let ids: Vec<String> = c.bumps.iter().map(|b| b.to_string()).collect();
            writeln!(w, "{},{},{},{},{}", c.name, ids.join(" "), c.lhs, c.rhs, c.holds)?;
        }
        Ok(())
    })?];
    if !report.is_valid() {
        let lines: Vec<String> = report
            .failures()
            .map(|c| format!("{} (bumps {:?}): lhs = {} vs rhs = {}", c.name, c.bumps, c.lhs, c.rhs))
            .collect();
        return Ok(Outcome {
            exit_code: EXIT_VALIDATION,
            message: format!("inadmissible bump configuration:\n  {}", lines.join("\n  ")),
            files,
        });
    }

    let tau = cfg.tau();
    let times = exact_times(spec, &cfg);
    if let Some(t) = times.iter().find(|&&t| t >= tau) {
        return Err(invalid(format!("exact time {t} is outside the existence window [0, {tau})")));
    }
    let slices = times
        .iter()
        .map(|&t| Ok((t, exact::multibump_field(&cfg, &grid, bc, t, &p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    files.push(out.csv("exact.csv", |w| {
        writeln!(w, "{}", io::field_header(&slices[0].1))?;
        for (t, f) in &slices {
            io::write_field_rows(w, *t, f)?;
        }
        Ok(())
    })?);

    let dt = spec.exact.residual_dt;
    let opts = ResidualOptions {
        dt,
        boundary_margin: None,
        interior_fraction: Some(spec.exact.interior_fraction),
    };
    let mut residuals = Vec::new();
    for &t in &times {
        let te = t.max(dt);
        if te + dt >= tau {
            continue;
        }
        let r = exact::residual_check_with(&cfg, &grid, te, &p, &opts)?;
        let scale = exact::residual_scale(&cfg, te, &p)?;
        residuals.push((t, te, r.max_residual, r.points, grid.h * grid.h * scale));
    }
    files.push(out.csv("residual.csv", |w| {
        writeln!(w, "t,t_eval,max_residual,points,h2_scale")?;
        for (t, te, r, n, s) in &residuals {
            writeln!(w, "{t},{te},{r},{n},{s}")?;
        }
        Ok(())
    })?);

    let mut message = format!(
        "configuration admissible ({} conditions), {} slices, worst residual {:e}",
        report.checks.len(),
        slices.len(),
        residuals.iter().map(|r| r.2).fold(0.0, f64::max)
    );
    let all_negative = cfg.bumps.iter().all(|b| b.sign == BumpSign::Negative);
    if spec.exact.compare_solver && all_negative {
        let numeric = run_to_times(&slices[0].1, &p, spec, &times)?;
        if !numeric.completed() {
            return Ok(Outcome {
                exit_code: EXIT_RUNTIME,
                message: format!("{message}; solver comparison halted"),
                files,
            });
        }
        let rows = numeric
            .trajectory
            .iter()
            .zip(&slices)
            .map(|(s, (t, ex))| {
                let l1 = s.field.l1_distance(ex)?;
                let norm = ex.l1_distance(&Field::constant(ex.grid, bc, ex.var, 0.0))?;
                Ok((*t, l1, if norm > 0.0 { l1 / norm } else { f64::NAN }))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        files.push(out.csv("solver_error.csv", |w| {
            writeln!(w, "t,l1_error,relative_l1_error")?;
            for (t, e, r) in &rows {
                writeln!(w, "{t},{e},{r}")?;
            }
            Ok(())
        })?);
        let worst = rows.iter().map(|r| r.2).filter(|r| r.is_finite()).fold(0.0, f64::max);
        message.push_str(&format!(", solver relative L1 error up to {worst:e}"));
    }
    Ok(Outcome {
        exit_code: EXIT_OK,
        message,
        files,
    })
}

#[derive(Serialize)]
struct Skipped {
    theorem: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct RegimesDoc {
    reports: Vec<RegimeReport>,
    skipped: Vec<Skipped>,
}

fn collect(
    reports: &mut Vec<RegimeReport>,
    skipped: &mut Vec<Skipped>,
    theorem: &'static str,
    r: Result<RegimeReport, CliError>,
) {
    match r {
        Ok(rep) => reports.push(rep),
        Err(e) => skipped.push(Skipped {
            theorem,
            reason: e.to_string(),
        }),
    }
}

fn format_table(reports: &[RegimeReport], skipped: &[Skipped]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&format!("{} => {}\n", r.theorem, r.summary));
        for e in &r.entries {
            s.push_str(&format!(
                "  {:<44} {:>14.6e} {:>2} {:<14.6e} {:?}{}\n",
                e.name,
                e.lhs,
                e.relation.symbol(),
                e.rhs,
                e.verdict,
                e.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            ));
        }
    }
    for k in skipped {
        s.push_str(&format!("{} => skipped: {}\n", k.theorem, k.reason));
    }
    s
}

pub fn regimes(spec: &RunSpec) -> Result<Outcome, CliError> {
    let p = spec.params()?;
    let grid = spec.grid()?;
    let rs = &spec.regimes;
    let f0 = initial_field(spec)?;
    let u0 = as_u(&f0, &p)?;
    let (mut reports, mut skipped) = (Vec::new(), Vec::new());

    reports.push(regimes::classify_global(&p, rs.u0_max.unwrap_or_else(|| u0.max())));

    let kaplan = (|| {
        let ep = match rs.mu.zip(rs.a0) {
            Some(_) => None,
            None => Some(eigenpair(&grid)?),
        };
        let mu = rs.mu.unwrap_or_else(|| ep.as_ref().map_or(f64::NAN, |e| e.mu));
        let a0 = match rs.a0 {
            Some(a0) => a0,
            None => {
                let ep = match &ep {
                    Some(ep) => ep.clone(),
                    None => eigenpair(&grid)?,
                };
                diagnostics::kaplan_a(&u0, &ep)?
            }
        };
        Ok(regimes::classify_kaplan(&p, mu, a0))
    })();
    collect(&mut reports, &mut skipped, "kaplan", kaplan);

    let concavity = to_v(&u0, &p)
        .and_then(|v0| regimes::classify_concavity(&p, &v0, rs.m))
        .map_err(CliError::from);
    collect(&mut reports, &mut skipped, "concavity", concavity);
    collect(
        &mut reports,
        &mut skipped,
        "pohozaev",
        regimes::pohozaev_nonexistence(&p).map_err(CliError::from),
    );
    let stability = eigen::neumann_spectrum_analytic(&grid, rs.modes)
        .and_then(|sp| regimes::linear_stability(&p, &sp))
        .map_err(CliError::from);
    collect(&mut reports, &mut skipped, "linear_stability", stability);

    let table = format_table(&reports, &skipped);
    let out = OutputDir::create(spec)?;
    let file = out.json("regimes.json", &RegimesDoc { reports, skipped })?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        message: table.trim_end().to_string(),
        files: vec![file],
    })
}

fn particle_times(spec: &RunSpec, t_end: f64) -> Vec<f64> {
    let mut t = spec.particles.compare_times.clone().unwrap_or_else(|| vec![0.0, t_end]);
    t.retain(|&x| x <= t_end);
    t.sort_by(f64::total_cmp);
    t.dedup();
    if t.first() != Some(&0.0) {
        t.insert(0, 0.0);
    }
    t
}

struct SeedResult {
    seed: u64,
    snapshots: Vec<ParticleState>,
    comparison: Vec<particles::ComparisonPoint>,
}

fn moments(s: &ParticleState, s0: &ParticleState) -> (f64, f64, f64, f64) {
    let n = s.len() as f64;
    let (mut mx, mut my, mut msd) = (0.0, 0.0, 0.0);
    for (x, x0) in s.positions.iter().zip(&s0.positions) {
        mx += x[0];
        my += x[1];
        msd += (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2);
    }
    let (mx, my) = (mx / n, my / n);
    let var = s.positions.iter().map(|x| (x[0] - mx).powi(2) + (x[1] - my).powi(2)).sum::<f64>() / n;
    (mx, my, var, msd / n)
}

pub fn particles(spec: &RunSpec) -> Result<Outcome, CliError> {
    let p = spec.params()?;
    let grid = spec.grid()?;
    if matches!(spec.grid.kind, GridKind::Radial) {
        return Err(invalid("particles need an interval or rectangle grid"));
    }
    let ps = &spec.particles;
    let t_end = ps.t_end.unwrap_or(spec.solver.t_end);
    let u0 = as_u(&initial_field(spec)?, &p)?;
    let mass = u0.integral();
    if !(mass > 0.0) {
        return Err(invalid(format!("initial mass must be positive, got {mass}")));
    }
    let times = particle_times(spec, t_end);
    let mut cfg = ParticleConfig::new(ps.n, spec.solver.epsilon, ps.dt, 0.0);
    cfg.mass = mass;
    cfg.record_every = usize::MAX;
    cfg.domain = match ps.domain {
        ParticleDomainKind::Free => ParticleDomain::FreeSpace,
        ParticleDomainKind::Reflect => {
            let (lo, hi) = grid_box(&grid);
            ParticleDomain::ReflectingBox { lo, hi }
        }
    };

    let pde = if ps.compare {
        let mut nonlocal = spec.clone();
        nonlocal.solver.model = ModelKind::Nonlocal;
        let r = run_to_times(&u0, &p, &nonlocal, &times)?;
        if !r.completed() {
            return Ok(Outcome {
                exit_code: EXIT_RUNTIME,
                message: format!("nonlocal reference run halted at t = {}", r.last().t),
                files: Vec::new(),
            });
        }
        Some(r)
    } else {
        None
    };
    let boundary = match ps.domain {
        ParticleDomainKind::Free => KdeBoundary::Truncate,
        ParticleDomainKind::Reflect => KdeBoundary::Reflect,
    };

    let seeds: Vec<u64> = (0..ps.seeds).map(|k| spec.seed.wrapping_add(k)).collect();
    let runs = seeds
        .iter()
        .map(|&seed| {
            let mut s = particles::sample_initial(&u0, ps.n, seed)?;
            let mut snapshots = vec![s.clone()];
            for &t in &times[1..] {
                cfg.t_end = t;
                s = particles::simulate(&s, &cfg, &p)?.snapshots.pop().expect("final state recorded");
                snapshots.push(s.clone());
            }
            let comparison = match &pde {
                Some(pde) => particles::compare_to_pde(
                    &particles::ParticleRun {
                        snapshots: snapshots.clone(),
                    },
                    pde,
                    &times,
                    ps.bandwidth,
                    boundary,
                )?,
                None => Vec::new(),
            };
            Ok(SeedResult {
                seed,
                snapshots,
                comparison,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let out = OutputDir::create(spec)?;
    let two = grid.coord_dims() == 2;
    let mut files = vec![out.csv("particle_stats.csv", |w| {
        writeln!(w, "t,seed,n,mean_x,mean_y,variance,msd")?;
        for r in &runs {
            for s in &r.snapshots {
                let (mx, my, var, msd) = moments(s, &r.snapshots[0]);
                let my = if two { my } else { 0.0 };
                writeln!(w, "{},{},{},{mx},{my},{var},{msd}", s.t, r.seed, s.len())?;
            }
        }
        Ok(())
    })?];
    if pde.is_some() {
        files.push(out.csv("comparison.csv", |w| {
            writeln!(w, "t,seed,l1_error,bandwidth")?;
            for r in &runs {
                for c in &r.comparison {
                    writeln!(w, "{},{},{},{}", c.t, r.seed, c.l1_error, c.bandwidth)?;
                }
            }
            Ok(())
        })?);
    }
    let last_err: Vec<f64> = runs.iter().filter_map(|r| r.comparison.last().map(|c| c.l1_error)).collect();
    let mut message = format!("{} seed(s), N = {}, t_end = {t_end}", runs.len(), ps.n);
    if !last_err.is_empty() {
        let mean = last_err.iter().sum::<f64>() / last_err.len() as f64;
        message.push_str(&format!(", mean final L1 error {mean:.4e}"));
    }
    Ok(Outcome {
        exit_code: EXIT_OK,
        message,
        files,
    })
}

fn grid_box(grid: &Grid) -> ([f64; 2], [f64; 2]) {
    let o = grid.origin;
    match grid.geometry {
        Geometry::Interval { length } => ([o[0], 0.0], [o[0] + length, 1.0]),
        Geometry::Rectangle { lx, ly } => (o, [o[0] + lx, o[1] + ly]),
        Geometry::Radial { radius, .. } => ([-radius; 2], [radius; 2]),
    }
}

/// One sweep member's result, keyed by its name.
#[derive(Debug)]
pub struct SweepItem {
    pub name: String,
    pub result: Result<Outcome, CliError>,
}

/// Run every `[[sweep.runs]]` entry of `text` as its own spec: the base
/// document plus `cli_overrides`, then the run's own `set` list, with the
/// output prefix suffixed by the run name. Runs execute concurrently when
/// `sweep.parallel` is set.
pub fn run_sweep(text: &str, cli_overrides: &[String]) -> Result<Vec<SweepItem>, CliError> {
    let base = RunSpec::from_toml_with(text, cli_overrides)?;
    let sweep = base.sweep.clone().ok_or_else(|| invalid("sweep needs a [sweep] table"))?;
    let specs = sweep
        .runs
        .iter()
        .map(|r| {
            let mut doc: toml::Table = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
            doc.remove("sweep");
            for raw in cli_overrides.iter().chain(&r.set) {
                spec::apply_override(&mut doc, &spec::parse_override(raw)?)?;
            }
            let prefix = format!("{}_{}", base.output.prefix, r.name);
            spec::apply_override(
                &mut doc,
                &spec::Override {
                    path: vec!["output".into(), "prefix".into()],
                    value: toml::Value::String(prefix),
                },
            )?;
            let s: RunSpec = doc.try_into().map_err(|e: toml::de::Error| invalid(format!("sweep run {}: {e}", r.name)))?;
            s.validate()?;
            Ok((r.name.clone(), s))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let go = |(name, s): &(String, RunSpec)| SweepItem {
        name: name.clone(),
        result: run_command(sweep.command, s),
    };
    Ok(if sweep.parallel {
        specs.par_iter().map(go).collect()
    } else {
        specs.iter().map(go).collect()
    })
}
