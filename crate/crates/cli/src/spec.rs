//! Run specification: a TOML document with one table per concern, plus
//! dotted-path overrides (`params.a=1.5`) applied before deserialisation.

use serde::{Deserialize, Serialize};

use aggdiff::exact::{BarenblattBump, BumpSign, MultiBumpConfig};
use aggdiff::{BoundaryKind, Grid, Params, Variable};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    VerifyExact,
    Regimes,
    Particles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub seed: u64,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub particles: ParticlesSpec,
    #[serde(default)]
    pub regimes: RegimesSpec,
    #[serde(default)]
    pub exact: ExactSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default = "one")]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Interval,
    Rectangle,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub x1: Option<f64>,
    #[serde(default)]
    pub y0: f64,
    #[serde(default)]
    pub y1: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    pub cells: usize,
    #[serde(default)]
    pub cells_y: Option<usize>,
    #[serde(default = "neumann")]
    pub boundary: BoundaryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Constant,
    Gaussian,
    Eigenfunction,
    Barenblatt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub sign: BumpSign,
    pub t_offset: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Variable the values are given in (barenblatt data is always `v`).
    pub variable: Variable,
    /// Constant value, or the baseline added to gaussian/eigenfunction data.
    pub value: f64,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
    /// Upper clip applied after evaluation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    /// Eigenfunction data: scale so that `∫u₀φ = a0` instead of using
    /// `amplitude`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    pub bumps: Vec<BumpSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            kind: InitialKind::Constant,
            variable: Variable::U,
            value: 0.0,
            amplitude: 1.0,
            center: Vec::new(),
            width: 0.1,
            cap: None,
            a0: None,
            bumps: Vec::new(),
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Breakdown {
    Halt,
    Continue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub model: ModelKind,
    pub epsilon: f64,
    pub t_end: f64,
    /// Fixed step; the adaptive bound with `safety` is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub safety: f64,
    pub breakdown: Breakdown,
    pub output_stride: usize,
    pub value_cap: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            model: ModelKind::Local,
            epsilon: 0.05,
            t_end: 1.0,
            dt: None,
            safety: 0.4,
            breakdown: Breakdown::Halt,
            output_stride: 100,
            value_cap: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    pub enabled: bool,
    /// Evaluate `A(t)` with the numeric first Dirichlet eigenpair.
    pub kaplan: bool,
    /// Evaluate `Ψ` and `E` with this exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concavity_m: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            enabled: true,
            kaplan: false,
            concavity_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleDomainKind {
    Free,
    Reflect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticlesSpec {
    pub n: usize,
    pub dt: f64,
    /// Defaults to `solver.t_end`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub seeds: u64,
    /// KDE bandwidth; Silverman's rule when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    pub domain: ParticleDomainKind,
    /// Compare against the nonlocal PDE at `compare_times`.
    pub compare: bool,
    /// Defaults to `[0, t_end]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_times: Option<Vec<f64>>,
}

impl Default for ParticlesSpec {
    fn default() -> Self {
        ParticlesSpec {
            n: 1000,
            dt: 0.01,
            t_end: None,
            seeds: 1,
            bandwidth: None,
            domain: ParticleDomainKind::Free,
            compare: true,
            compare_times: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimesSpec {
    /// First Dirichlet eigenvalue; computed numerically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// `∫u₀φ`; computed from the initial data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    /// `max u₀`; computed from the initial data when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0_max: Option<f64>,
    pub m: f64,
    /// Neumann modes used by the linear stability check.
    pub modes: usize,
}

impl Default for RegimesSpec {
    fn default() -> Self {
        RegimesSpec {
            mu: None,
            a0: None,
            u0_max: None,
            m: 2.0,
            modes: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactSpec {
    /// Snapshot times; defaults to `0, τ/2, 0.9τ` (finite horizon) or
    /// `0, t_end/2, t_end`.
    pub times: Vec<f64>,
    /// Time step of the residual's central difference.
    pub residual_dt: f64,
    /// Keep residual samples inside this fraction of each support radius.
    pub interior_fraction: f64,
    /// Run the solver against the exact solution when every bump is
    /// negative.
    pub compare_solver: bool,
}

impl Default for ExactSpec {
    fn default() -> Self {
        ExactSpec {
            times: Vec::new(),
            residual_dt: 1e-5,
            interior_fraction: 0.9,
            compare_solver: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
    pub prefix: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: "out".into(),
            prefix: "run".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub command: Command,
    #[serde(default = "yes")]
    pub parallel: bool,
    pub runs: Vec<SweepRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRun {
    pub name: String,
    #[serde(default)]
    pub set: Vec<String>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn neumann() -> BoundaryKind {
    BoundaryKind::Neumann
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// A parsed `path=value` override.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: toml::Value,
}

/// Parse `a.b.c=value`. The value is read as a TOML value (`1.5`, `true`,
/// `"text"`, `[0.0, 1.0]`); anything that is not valid TOML is taken as a
/// bare string.
pub fn parse_override(raw: &str) -> Result<Override, CliError> {
    let (path, value) = raw
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{raw}` is not of the form key=value")))?;
    let path: Vec<String> = path.trim().split('.').map(|s| s.trim().to_string()).collect();
    if path
        .iter()
        .any(|s| s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
    {
        return Err(invalid(format!("override key `{}` is not a dotted identifier path", path.join("."))));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok(Override { path, value: parsed })
}

/// Set `path` in `doc`, creating intermediate tables.
pub fn apply_override(doc: &mut toml::Table, ov: &Override) -> Result<(), CliError> {
    let (last, parents) = ov.path.split_last().ok_or_else(|| invalid("empty override path"))?;
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| invalid(format!("override path `{}` crosses a non-table value", ov.path.join("."))))?;
    }
    table.insert(last.clone(), ov.value.clone());
    Ok(())
}

impl RunSpec {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        Self::from_toml_with(text, &[])
    }

    /// Parse a TOML document, apply `key=value` overrides, then validate.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| invalid(format!("configuration: {e}")))?;
        for raw in overrides {
            apply_override(&mut doc, &parse_override(raw)?)?;
        }
        let spec: RunSpec = doc.try_into().map_err(|e: toml::de::Error| invalid(format!("configuration: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// The fully resolved specification, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserialisable spec: {e}\n"))
    }

    pub fn params(&self) -> Result<Params, CliError> {
        Params::new(self.params.a, self.params.b, self.params.c, self.params.d, self.params.n).map_err(|e| invalid(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("grid.{name} is required for {:?} grids", g.kind)));
        let built = match g.kind {
            GridKind::Interval => Grid::interval_on(g.x0, need(g.x1, "x1")?, g.cells),
            GridKind::Rectangle => {
                let (x1, y1) = (need(g.x1, "x1")?, need(g.y1, "y1")?);
                Grid::rectangle_on([g.x0, g.y0], x1 - g.x0, y1 - g.y0, g.cells, g.cells_y.unwrap_or(g.cells))
            }
            GridKind::Radial => Grid::radial(need(g.radius, "radius")?, g.cells, self.params.n),
        };
        built.map_err(|e| invalid(format!("grid: {e}")))
    }

    pub fn bumps(&self) -> Result<MultiBumpConfig, CliError> {
        let bumps = self
            .initial
            .bumps
            .iter()
            .map(|b| BarenblattBump::new(b.sign, b.t_offset, b.center.clone()))
            .collect::<aggdiff::Result<Vec<_>>>()
            .map_err(|e| invalid(format!("initial.bumps: {e}")))?;
        let cfg = MultiBumpConfig::new(bumps);
        Ok(match self.initial.horizon {
            Some(h) => cfg.with_horizon(h),
            None => cfg,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.params()?;
        let grid = self.grid()?;
        let coord = grid.coord_dims();
        if coord != p.n && !matches!(self.grid.kind, GridKind::Radial) {
            return Err(invalid(format!("params.n = {} does not match the {coord}-d grid", p.n)));
        }
        if self.grid.cells > 1_000_000 || self.grid.cells_y.unwrap_or(0) > 1_000_000 {
            return Err(invalid("grid is too large"));
        }
        let ini = &self.initial;
        if !ini.center.is_empty() && ini.center.len() != p.n {
            return Err(invalid(format!("initial.center has {} entries, expected {}", ini.center.len(), p.n)));
        }
        for (name, v) in [("value", ini.value), ("amplitude", ini.amplitude)] {
            if !v.is_finite() {
                return Err(invalid(format!("initial.{name} must be finite")));
            }
        }
        if ini.kind == InitialKind::Gaussian && !(ini.width > 0.0 && ini.width.is_finite()) {
            return Err(invalid("initial.width must be > 0"));
        }
        if ini.kind == InitialKind::Barenblatt {
            if ini.bumps.is_empty() {
                return Err(invalid("barenblatt initial data needs at least one bump"));
            }
            if ini.bumps.iter().any(|b| b.center.len() != p.n) {
                return Err(invalid(format!("every bump centre needs {} coordinates", p.n)));
            }
            self.bumps()?;
        }
        let s = &self.solver;
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            return Err(invalid("solver.t_end must be >= 0"));
        }
        if !(s.epsilon > 0.0 && s.epsilon.is_finite()) {
            return Err(invalid("solver.epsilon must be > 0"));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("solver.dt must be > 0"));
            }
        }
        if !(s.safety > 0.0 && s.safety <= 1.0) {
            return Err(invalid("solver.safety must lie in (0, 1]"));
        }
        if s.output_stride == 0 {
            return Err(invalid("solver.output_stride must be >= 1"));
        }
        if !(s.value_cap > 0.0) {
            return Err(invalid("solver.value_cap must be > 0"));
        }
        if s.model == ModelKind::Nonlocal && self.grid.kind == GridKind::Radial {
            return Err(invalid("the nonlocal model is not available on radial grids"));
        }
        if let Some(m) = self.diagnostics.concavity_m {
            if !(m > 1.0 && m.is_finite()) {
                return Err(invalid("diagnostics.concavity_m must exceed 1"));
            }
        }
        let ps = &self.particles;
        if ps.n == 0 || ps.seeds == 0 || ps.n > 1_000_000 {
            return Err(invalid("particles.n and particles.seeds must be positive"));
        }
        if !(ps.dt > 0.0 && ps.dt.is_finite()) {
            return Err(invalid("particles.dt must be > 0"));
        }
        if let Some(bw) = ps.bandwidth {
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(invalid("particles.bandwidth must be > 0"));
            }
        }
        if let Some(t) = ps.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("particles.t_end must be >= 0"));
            }
        }
        if let Some(times) = &ps.compare_times {
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(invalid("particles.compare_times must be finite and >= 0"));
            }
        }
        if !(self.regimes.m > 1.0) || self.regimes.modes == 0 {
            return Err(invalid("regimes.m must exceed 1 and regimes.modes must be positive"));
        }
        let ex = &self.exact;
        if ex.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("exact.times must be finite and >= 0"));
        }
        if !(ex.residual_dt > 0.0) || !(ex.interior_fraction > 0.0 && ex.interior_fraction <= 1.0) {
            return Err(invalid("exact.residual_dt must be > 0 and exact.interior_fraction in (0, 1]"));
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(invalid("output.prefix must be a plain file-name prefix"));
        }
        if let Some(sw) = &self.sweep {
            for r in &sw.runs {
                if r.name.is_empty() || !r.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(invalid(format!("sweep run name `{}` must be alphanumeric", r.name)));
                }
                for o in &r.set {
                    parse_override(o)?;
                }
            }
        }
        Ok(())
    }
}
