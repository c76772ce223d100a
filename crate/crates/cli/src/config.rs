//! JSON run configuration: schema, validation, and construction of library objects.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use musielak::domain::Trig;
use musielak::phi::OrliczFn;
use musielak::poincare::{default_family, default_scalings, power_of_two_ladder, BumpSpec};
use musielak::{AxisBox, BumpKind, Domain, ExponentField, FieldExpr, GridFunction, PhiFunction, WeightField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_NODES: usize = 9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainSpec,
    #[serde(default)]
    pub phi: Vec<PhiSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Nodes,
}

/// One count for every axis, or one per axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Nodes {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiSpec {
    pub id: String,
    #[serde(flatten)]
    pub family: FamilySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    PowerVariable { p: FieldSpec },
    DoublePhase { p: f64, q: f64, a: FieldSpec },
    PowerLog { p: FieldSpec },
    ExpPower { p: FieldSpec },
    Orlicz { preset: OrliczPreset },
}

/// A number, or a field expression evaluated on the domain box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Number(f64),
    Expr(FieldExpr),
}

impl FieldSpec {
    fn expr(&self) -> FieldExpr {
        match self {
            FieldSpec::Number(v) => FieldExpr::Constant { value: *v },
            FieldSpec::Expr(e) => e.clone(),
        }
    }
}

/// x-independent Young functions available from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrliczPreset {
    /// `scale · t^exponent`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `t · ln(1 + t)`.
    TLog1pT,
    /// `cosh t − 1`.
    CoshMinusOne,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the norm and conjugate solvers.
    #[serde(default = "default_solver_tol")]
    pub solver: f64,
    /// Verdict slack on the modular side of the Poincaré inequality.
    #[serde(default = "default_modular_tol")]
    pub modular: f64,
    /// Verdict slack on the norm side.
    #[serde(default = "default_norm_tol")]
    pub norm: f64,
}

fn default_solver_tol() -> f64 {
    musielak::modular::DEFAULT_TOL
}

fn default_modular_tol() -> f64 {
    musielak::poincare::MODULAR_TOL
}

fn default_norm_tol() -> f64 {
    musielak::poincare::NORM_VERDICT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: default_solver_tol(), modular: default_modular_tol(), norm: default_norm_tol() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Base name of the report files; defaults to `NN-<task>`.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: TaskKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskKind {
    ValidatePhi {
        /// Φ-function ids; empty means all.
        #[serde(default)]
        phi: Vec<String>,
        #[serde(default)]
        required: bool,
    },
    CheckConditions {
        phi: String,
        checks: Vec<CheckSpec>,
        /// Whether a non-pass verdict makes the run fail.
        #[serde(default)]
        required: bool,
    },
    ComputeNorm {
        phi: String,
        function: FunctionSpec,
        #[serde(default)]
        norm: NormKind,
        #[serde(default)]
        order: usize,
    },
    ConjugateTable {
        phi: String,
        /// Points `x`; empty means the domain center.
        #[serde(default)]
        points: Vec<Vec<f64>>,
        s: Ladder,
    },
    VerifyPoincare {
        #[serde(default)]
        phi: Vec<String>,
        /// Empty means the default bump family.
        #[serde(default)]
        functions: Vec<FunctionSpec>,
        #[serde(default = "one_usize")]
        order: usize,
        #[serde(default)]
        constant: Option<f64>,
        #[serde(default)]
        sides: Sides,
    },
    CounterexampleSearch {
        phi: String,
        #[serde(default)]
        functions: Vec<BumpSpec>,
        #[serde(default)]
        scalings: Option<Scalings>,
        #[serde(default)]
        constant: Option<f64>,
    },
    Sweep {
        #[serde(default)]
        phi: Vec<String>,
        #[serde(default)]
        functions: Vec<BumpSpec>,
        #[serde(default)]
        scalings: Option<Scalings>,
        #[serde(default = "one_usize")]
        order: usize,
        #[serde(default)]
        sides: Sides,
    },
}

impl TaskKind {
    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::ValidatePhi { .. } => "validate-phi",
            TaskKind::CheckConditions { .. } => "check-conditions",
            TaskKind::ComputeNorm { .. } => "compute-norm",
            TaskKind::ConjugateTable { .. } => "conjugate-table",
            TaskKind::VerifyPoincare { .. } => "verify-poincare",
            TaskKind::CounterexampleSearch { .. } => "counterexample-search",
            TaskKind::Sweep { .. } => "sweep",
        }
    }

    /// Poincaré orders this task would use.
    pub fn order(&self) -> Option<usize> {
        match self {
            TaskKind::VerifyPoincare { order, .. } | TaskKind::Sweep { order, .. } => Some(*order),
            TaskKind::CounterexampleSearch { .. } => Some(1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Luxemburg,
    Sobolev,
    Modular,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    #[default]
    Both,
    Modular,
    Norm,
}

impl Sides {
    pub fn modular(self) -> bool {
        self != Sides::Norm
    }

    pub fn norm(self) -> bool {
        self != Sides::Modular
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub from: f64,
    pub to: f64,
    pub count: usize,
    #[serde(default = "yes")]
    pub log: bool,
}

fn yes() -> bool {
    true
}

impl Ladder {
    pub fn values(&self) -> Vec<f64> {
        if self.log {
            musielak::domain::log_space(self.from, self.to, self.count)
        } else if self.count == 1 {
            vec![self.from]
        } else {
            (0..self.count)
                .map(|i| self.from + (self.to - self.from) * i as f64 / (self.count - 1) as f64)
                .collect()
        }
    }
}

/// Explicit scalings, or `2^k` for `k` in an exponent range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalings {
    List(Vec<f64>),
    PowersOfTwo { min_exponent: i32, max_exponent: i32 },
}

impl Scalings {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Scalings::List(v) => v.clone(),
            Scalings::PowersOfTwo { min_exponent, max_exponent } => power_of_two_ladder(*min_exponent, *max_exponent),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    M1 {
        comparison: ComparisonSpec,
        #[serde(default = "one")]
        c: f64,
    },
    LogHolder {
        c0: f64,
    },
    Y {
        #[serde(default)]
        axis: usize,
        /// Defaults to the domain extent along `axis`.
        #[serde(default)]
        segment: Option<[f64; 2]>,
        #[serde(default)]
        t0: Option<f64>,
    },
    LocalIntegrability {
        c: f64,
        /// Defaults to the whole domain.
        #[serde(default)]
        region: Option<AxisBox>,
        #[serde(default = "default_integrability_nodes")]
        nodes: usize,
    },
}

fn default_integrability_nodes() -> usize {
    257
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonSpec {
    Unit,
    LogHolder { constant: f64 },
}

/// Test functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Bump {
        id: String,
        center: Vec<f64>,
        widths: Vec<f64>,
        profile: BumpKind,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `Π sin(π(xᵢ − aᵢ)/Lᵢ)`, vanishing on the boundary of the box.
    Sine {
        id: String,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl FunctionSpec {
    pub fn id(&self) -> &str {
        match self {
            FunctionSpec::Bump { id, .. } | FunctionSpec::Sine { id, .. } => id,
        }
    }

    pub fn build(&self, domain: &Arc<Domain>) -> musielak::Result<GridFunction> {
        match self {
            FunctionSpec::Bump { center, widths, profile, scale, .. } => {
                let u = musielak::make_bump(domain.clone(), center, widths, *profile)?;
                Ok(if *scale == 1.0 { u } else { u.scaled(*scale) })
            }
            FunctionSpec::Sine { scale, .. } => {
                let u = GridFunction::from_analytic(domain.clone(), Arc::new(Trig::dirichlet(domain)), None)?;
                Ok(if *scale == 1.0 { u } else { u.scaled(*scale) })
            }
        }
    }

    pub fn from_bump(b: &BumpSpec) -> Self {
        FunctionSpec::Bump { id: b.id.clone(), center: b.center.clone(), widths: b.widths.clone(), profile: b.kind, scale: 1.0 }
    }
}

/// A validated configuration with its library objects built.
pub struct Resolved {
    pub config: RunConfig,
    pub domain: Arc<Domain>,
    pub phis: Vec<(String, PhiFunction)>,
    pub names: Vec<String>,
}

impl Resolved {
    pub fn phi(&self, id: &str) -> &PhiFunction {
        &self.phis.iter().find(|(n, _)| n == id).expect("ids validated").1
    }

    /// The listed Φ-functions, or all of them when the list is empty.
    pub fn select(&self, ids: &[String]) -> Vec<(String, PhiFunction)> {
        if ids.is_empty() {
            self.phis.clone()
        } else {
            ids.iter().map(|id| (id.clone(), self.phi(id).clone())).collect()
        }
    }

    pub fn bumps(&self, given: &[BumpSpec]) -> Vec<BumpSpec> {
        if given.is_empty() {
            default_family(&self.domain)
        } else {
            given.to_vec()
        }
    }

    pub fn scalings(&self, given: &Option<Scalings>, fallback: fn() -> Vec<f64>) -> Vec<f64> {
        given.as_ref().map_or_else(fallback, Scalings::values)
    }
}

pub fn default_search_scalings() -> Vec<f64> {
    power_of_two_ladder(-10, 10)
}

pub fn default_sweep_scalings() -> Vec<f64> {
    default_scalings()
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Invalid { field: field.into(), message: message.into() }
}

pub fn resolve(config: RunConfig) -> Result<Resolved, CliError> {
    if config.schema_version != SCHEMA_VERSION {
        return Err(invalid("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", config.schema_version)));
    }
    let domain = Arc::new(build_domain(&config.domain)?);
    let t = &config.tolerances;
    for (name, v) in [("solver", t.solver), ("modular", t.modular), ("norm", t.norm)] {
        if !(v >= 0.0 && v.is_finite()) || (name == "solver" && v == 0.0) {
            return Err(invalid(format!("tolerances.{name}"), format!("must be a finite non-negative number (got {v})")));
        }
    }

    let mut phis = Vec::new();
    let mut seen = HashSet::new();
    for (i, spec) in config.phi.iter().enumerate() {
        let field = format!("phi[{i}]");
        if !seen.insert(spec.id.clone()) {
            return Err(invalid(format!("{field}.id"), format!("duplicate id {:?}", spec.id)));
        }
        phis.push((spec.id.clone(), build_phi(spec, &domain, &field)?));
    }

    let mut names = Vec::new();
    let mut seen_names = HashSet::new();
    for (i, task) in config.tasks.iter().enumerate() {
        let field = format!("tasks[{i}]");
        let name = task.name.clone().unwrap_or_else(|| format!("{:02}-{}", i + 1, task.kind.label()));
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || name.starts_with('.') {
            return Err(invalid(format!("{field}.name"), "use letters, digits, '-', '_' or '.'"));
        }
        if name == "timing" || !seen_names.insert(name.clone()) {
            return Err(invalid(format!("{field}.name"), format!("{name:?} is reserved or already used")));
        }
        names.push(name);
        validate_task(&task.kind, &field, &seen, &domain)?;
    }
    Ok(Resolved { config, domain, phis, names })
}

fn build_domain(spec: &DomainSpec) -> Result<Domain, CliError> {
    let dim = spec.lower.len();
    if dim == 0 || spec.upper.len() != dim {
        return Err(invalid("domain", "lower and upper must be non-empty and of equal length"));
    }
    let nodes = match &spec.nodes {
        Nodes::Uniform(n) => vec![*n; dim],
        Nodes::PerAxis(v) if v.len() == dim => v.clone(),
        Nodes::PerAxis(v) => return Err(invalid("domain.nodes", format!("expected {dim} entries, got {}", v.len()))),
    };
    if let Some((axis, n)) = nodes.iter().enumerate().find(|(_, n)| **n < MIN_NODES) {
        return Err(invalid("domain.nodes", format!("axis {axis} has {n} nodes; at least {MIN_NODES} are required")));
    }
    for a in 0..dim {
        if !(spec.lower[a] < spec.upper[a]) {
            return Err(invalid("domain", format!("axis {a}: lower bound must be below upper bound")));
        }
    }
    Domain::new(spec.lower.clone(), spec.upper.clone(), nodes).map_err(|e| invalid("domain", e.to_string()))
}

fn exponent(spec: &FieldSpec, domain: &Domain, field: &str) -> Result<ExponentField, CliError> {
    let f = ExponentField::new(spec.expr(), Some(domain.bounds().clone())).map_err(|e| {
        if matches!(e, musielak::Error::Construction(ref m) if m.starts_with("exponent lower bound")) {
            invalid(field, "exponent lower bound must exceed 1")
        } else {
            invalid(field, e.to_string())
        }
    })?;
    if !f.is_phi_range() {
        return Err(invalid(field, format!("exponent lower bound must exceed 1 (got {})", f.lower())));
    }
    Ok(f)
}

fn build_phi(spec: &PhiSpec, domain: &Domain, field: &str) -> Result<PhiFunction, CliError> {
    match &spec.family {
        FamilySpec::PowerVariable { p } => Ok(PhiFunction::power_variable(exponent(p, domain, &format!("{field}.p"))?)),
        FamilySpec::PowerLog { p } => Ok(PhiFunction::power_log(exponent(p, domain, &format!("{field}.p"))?)),
        FamilySpec::ExpPower { p } => Ok(PhiFunction::exp_power(exponent(p, domain, &format!("{field}.p"))?)),
        FamilySpec::DoublePhase { p, q, a } => {
            if !(*p > 1.0) {
                return Err(invalid(format!("{field}.p"), format!("exponent lower bound must exceed 1 (got {p})")));
            }
            let weight = WeightField::new(a.expr(), Some(domain.bounds().clone())).map_err(|e| invalid(format!("{field}.a"), e.to_string()))?;
            PhiFunction::double_phase(*p, *q, weight).map_err(|e| invalid(field, e.to_string()))
        }
        FamilySpec::Orlicz { preset } => {
            let (name, f): (String, OrliczFn) = match *preset {
                OrliczPreset::Power { exponent, scale } => {
                    if !(exponent > 1.0) {
                        return Err(invalid(format!("{field}.preset.exponent"), format!("exponent lower bound must exceed 1 (got {exponent})")));
                    }
                    if !(scale > 0.0 && scale.is_finite()) {
                        return Err(invalid(format!("{field}.preset.scale"), "must be positive"));
                    }
                    (format!("{scale}·t^{exponent}"), Arc::new(move |t: f64| scale * t.powf(exponent)))
                }
                OrliczPreset::TLog1pT => ("t·ln(1+t)".into(), Arc::new(|t: f64| t * t.ln_1p())),
                // 2 sinh²(t/2) avoids the cancellation in cosh(t) − 1 near 0.
                OrliczPreset::CoshMinusOne => ("cosh(t)−1".into(), Arc::new(|t: f64| 2.0 * (t / 2.0).sinh().powi(2))),
            };
            Ok(PhiFunction::orlicz(name, f))
        }
    }
}

fn check_phi(id: &str, known: &HashSet<String>, field: &str) -> Result<(), CliError> {
    if known.contains(id) {
        Ok(())
    } else {
        Err(invalid(field, format!("unknown Φ-function id {id:?}")))
    }
}

fn check_bumps(bumps: &[BumpSpec], domain: &Arc<Domain>, field: &str) -> Result<(), CliError> {
    for (j, b) in bumps.iter().enumerate() {
        b.build(domain.clone()).map_err(|e| invalid(format!("{field}.functions[{j}]"), e.to_string()))?;
    }
    Ok(())
}

fn check_scalings(s: &Option<Scalings>, field: &str) -> Result<(), CliError> {
    if let Some(s) = s {
        let v = s.values();
        if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(invalid(format!("{field}.scalings"), "scalings must be a non-empty list of positive numbers"));
        }
    }
    Ok(())
}

fn validate_task(task: &TaskKind, field: &str, known: &HashSet<String>, domain: &Arc<Domain>) -> Result<(), CliError> {
    let dim = domain.dim();
    match task {
        TaskKind::ValidatePhi { phi, .. } => {
            for (j, id) in phi.iter().enumerate() {
                check_phi(id, known, &format!("{field}.phi[{j}]"))?;
            }
        }
        TaskKind::CheckConditions { phi, checks, .. } => {
            check_phi(phi, known, &format!("{field}.phi"))?;
            for (j, c) in checks.iter().enumerate() {
                let f = format!("{field}.checks[{j}]");
                match c {
                    CheckSpec::Y { axis, segment, t0 } => {
                        if *axis >= dim {
                            return Err(invalid(format!("{f}.axis"), format!("must be below the dimension {dim}")));
                        }
                        if let Some([a, b]) = segment {
                            let (lo, hi) = (domain.bounds().lower[*axis], domain.bounds().upper[*axis]);
                            if !(a < b && *a >= lo && *b <= hi) {
                                return Err(invalid(format!("{f}.segment"), format!("must be an increasing pair within [{lo}, {hi}]")));
                            }
                        }
                        if t0.is_some_and(|t| !(t > 0.0)) {
                            return Err(invalid(format!("{f}.t0"), "must be positive"));
                        }
                    }
                    CheckSpec::M1 { c, comparison } => {
                        if !(*c > 0.0) {
                            return Err(invalid(format!("{f}.c"), "must be positive"));
                        }
                        if let ComparisonSpec::LogHolder { constant } = comparison {
                            if !(*constant > 0.0) {
                                return Err(invalid(format!("{f}.comparison.constant"), "must be positive"));
                            }
                        }
                    }
                    CheckSpec::LogHolder { c0 } => {
                        if !(*c0 > 0.0) {
                            return Err(invalid(format!("{f}.c0"), "must be positive"));
                        }
                    }
                    CheckSpec::LocalIntegrability { c, region, nodes } => {
                        if !(*c >= 0.0 && c.is_finite()) {
                            return Err(invalid(format!("{f}.c"), "must be finite and non-negative"));
                        }
                        if *nodes < 2 {
                            return Err(invalid(format!("{f}.nodes"), "at least 2 nodes are required"));
                        }
                        if let Some(r) = region {
                            if r.dim() != dim || !domain.bounds().contains_box(r) {
                                return Err(invalid(format!("{f}.region"), "must be a box inside the domain"));
                            }
                        }
                    }
                }
            }
        }
        TaskKind::ComputeNorm { phi, function, .. } => {
            check_phi(phi, known, &format!("{field}.phi"))?;
            function.build(domain).map_err(|e| invalid(format!("{field}.function"), e.to_string()))?;
        }
        TaskKind::ConjugateTable { phi, points, s } => {
            check_phi(phi, known, &format!("{field}.phi"))?;
            for (j, x) in points.iter().enumerate() {
                if x.len() != dim || !domain.bounds().contains(x, 0.0) {
                    return Err(invalid(format!("{field}.points[{j}]"), "must be a point of the domain"));
                }
            }
            if s.count == 0 || !(s.from >= 0.0 && s.to >= s.from && s.to.is_finite()) || (s.log && !(s.from > 0.0)) {
                return Err(invalid(format!("{field}.s"), "need count ≥ 1 and 0 ≤ from ≤ to (from > 0 on a log ladder)"));
            }
        }
        TaskKind::VerifyPoincare { phi, functions, order, constant, .. } => {
            for (j, id) in phi.iter().enumerate() {
                check_phi(id, known, &format!("{field}.phi[{j}]"))?;
            }
            for (j, f) in functions.iter().enumerate() {
                f.build(domain).map_err(|e| invalid(format!("{field}.functions[{j}]"), e.to_string()))?;
            }
            if *order == 0 {
                return Err(invalid(format!("{field}.order"), "must be at least 1"));
            }
            if constant.is_some_and(|c| !(c > 0.0)) {
                return Err(invalid(format!("{field}.constant"), "must be positive"));
            }
        }
        TaskKind::CounterexampleSearch { phi, functions, scalings, constant } => {
            check_phi(phi, known, &format!("{field}.phi"))?;
            check_bumps(functions, domain, field)?;
            check_scalings(scalings, field)?;
            if constant.is_some_and(|c| !(c > 0.0)) {
                return Err(invalid(format!("{field}.constant"), "must be positive"));
            }
        }
        TaskKind::Sweep { phi, functions, scalings, order, .. } => {
            for (j, id) in phi.iter().enumerate() {
                check_phi(id, known, &format!("{field}.phi[{j}]"))?;
            }
            check_bumps(functions, domain, field)?;
            check_scalings(scalings, field)?;
            if *order == 0 {
                return Err(invalid(format!("{field}.order"), "must be at least 1"));
            }
        }
    }
    Ok(())
}
