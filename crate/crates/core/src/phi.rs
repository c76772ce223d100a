//! Musielak Φ-functions `M(x, t)`: the built-in families, their pointwise
//! evaluation, and a sampled check of the defining properties.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conjugate::conjugate_local;
use crate::error::{Error, Result};
use crate::field::{ExponentField, WeightField};

/// Family tag of a [`PhiFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `t^{p(x)}`
    PowerVariable,
    /// `t^p + a(x) t^q`
    DoublePhase,
    /// `t^{p(x)} log(e + t)`
    PowerLog,
    /// `exp(t^{p(x)}) − 1`
    ExpPower,
    /// x-independent user-supplied convex function
    OrliczCustom,
}

/// One-variable convex evaluator used by the `orlicz_custom` family.
pub type OrliczFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    PowerVariable { p: ExponentField },
    DoublePhase { p_base: f64, q: f64, a: WeightField },
    PowerLog { p: ExponentField },
    ExpPower { p: ExponentField },
    Orlicz { name: String, f: OrliczFn },
}

/// A Musielak Φ-function.
#[derive(Clone)]
pub struct PhiFunction {
    kind: Kind,
}

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiFunction({})", self.describe())
    }
}

impl PhiFunction {
    pub fn power_variable(p: ExponentField) -> Self {
        Self { kind: Kind::PowerVariable { p } }
    }

    /// `t^p` with a constant exponent.
    pub fn power(p: f64) -> Result<Self> {
        Ok(Self::power_variable(ExponentField::constant(p)?))
    }

    pub fn double_phase(p_base: f64, q: f64, a: WeightField) -> Result<Self> {
        if !(p_base >= 1.0 && q.is_finite() && q > p_base) {
            return Err(Error::Construction(format!(
                "double phase needs 1 ≤ p < q < ∞ (got p = {p_base}, q = {q})"
            )));
        }
        Ok(Self { kind: Kind::DoublePhase { p_base, q, a } })
    }

    pub fn power_log(p: ExponentField) -> Self {
        Self { kind: Kind::PowerLog { p } }
    }

    pub fn exp_power(p: ExponentField) -> Self {
        Self { kind: Kind::ExpPower { p } }
    }

    /// x-independent `M(x, t) = f(t)`. Convexity is not checked here; see [`validate_phi`].
    pub fn orlicz(name: impl Into<String>, f: OrliczFn) -> Self {
        Self { kind: Kind::Orlicz { name: name.into(), f } }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::PowerVariable { .. } => Family::PowerVariable,
            Kind::DoublePhase { .. } => Family::DoublePhase,
            Kind::PowerLog { .. } => Family::PowerLog,
            Kind::ExpPower { .. } => Family::ExpPower,
            Kind::Orlicz { .. } => Family::OrliczCustom,
        }
    }

    /// The variable exponent, for families that have one.
    pub fn exponent(&self) -> Option<&ExponentField> {
        match &self.kind {
            Kind::PowerVariable { p } | Kind::PowerLog { p } | Kind::ExpPower { p } => Some(p),
            _ => None,
        }
    }

    pub fn weight(&self) -> Option<&WeightField> {
        match &self.kind {
            Kind::DoublePhase { a, .. } => Some(a),
            _ => None,
        }
    }

    /// True when `M` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            Kind::PowerVariable { p } | Kind::PowerLog { p } | Kind::ExpPower { p } => {
                p.field().is_constant()
            }
            Kind::DoublePhase { a, .. } => a.field().is_constant(),
            Kind::Orlicz { .. } => true,
        }
    }

    pub fn describe(&self) -> String {
        let field = |p: &ExponentField| {
            if p.field().is_constant() {
                format!("{}", p.lower())
            } else {
                format!("p(x) ∈ [{}, {}]", p.lower(), p.upper())
            }
        };
        match &self.kind {
            Kind::PowerVariable { p } => format!("power_variable t^{{{}}}", field(p)),
            Kind::DoublePhase { p_base, q, a } => format!(
                "double_phase t^{p_base} + a(x) t^{q}, a ∈ [{}, {}]",
                a.field().min(),
                a.field().max()
            ),
            Kind::PowerLog { p } => format!("power_log t^{{{}}} log(e + t)", field(p)),
            Kind::ExpPower { p } => format!("exp_power exp(t^{{{}}}) − 1", field(p)),
            Kind::Orlicz { name, .. } => format!("orlicz_custom {name}"),
        }
    }

    /// `M(x, ·)` with the fields at `x` resolved.
    pub fn localize(&self, x: &[f64]) -> Result<LocalPhi> {
        Ok(match &self.kind {
            Kind::PowerVariable { p } => LocalPhi::Power { p: p.eval(x)? },
            Kind::DoublePhase { p_base, q, a } => LocalPhi::DoublePhase { p: *p_base, q: *q, a: a.eval(x)? },
            Kind::PowerLog { p } => LocalPhi::PowerLog { p: p.eval(x)? },
            Kind::ExpPower { p } => LocalPhi::ExpPower { p: p.eval(x)? },
            Kind::Orlicz { f, .. } => LocalPhi::Custom(f.clone()),
        })
    }

    /// `M(x, t)`.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<f64> {
        self.localize(x)?.eval(t)
    }
}

/// Anything that can be frozen at a point into a one-variable Young function.
///
/// Implemented by [`PhiFunction`] and by its numerical conjugate.
pub trait YoungFunction: Send + Sync {
    fn local(&self, x: &[f64]) -> Result<LocalPhi>;

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.local(x)?.eval(t)
    }
}

impl YoungFunction for PhiFunction {
    fn local(&self, x: &[f64]) -> Result<LocalPhi> {
        self.localize(x)
    }
}

/// `M(x, ·)` at a fixed point `x`.
#[derive(Clone)]
pub enum LocalPhi {
    Power { p: f64 },
    DoublePhase { p: f64, q: f64, a: f64 },
    PowerLog { p: f64 },
    ExpPower { p: f64 },
    Custom(OrliczFn),
    /// Numerical Young conjugate of the inner function.
    Conjugate { inner: Box<LocalPhi>, tol: f64 },
}

impl fmt::Debug for LocalPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalPhi::Power { p } => write!(f, "Power({p})"),
            LocalPhi::DoublePhase { p, q, a } => write!(f, "DoublePhase({p}, {q}, {a})"),
            LocalPhi::PowerLog { p } => write!(f, "PowerLog({p})"),
            LocalPhi::ExpPower { p } => write!(f, "ExpPower({p})"),
            LocalPhi::Custom(_) => write!(f, "Custom"),
            LocalPhi::Conjugate { inner, tol } => write!(f, "Conjugate({inner:?}, {tol})"),
        }
    }
}

impl LocalPhi {
    /// `M(x, t)` for `t ≥ 0`. Non-finite results are range errors.
    #[inline]
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = match self {
            LocalPhi::Power { p } => pow(t, *p),
            LocalPhi::DoublePhase { p, q, a } => pow(t, *p) + a * pow(t, *q),
            LocalPhi::PowerLog { p } => pow(t, *p) * (std::f64::consts::E + t).ln(),
            LocalPhi::ExpPower { p } => pow(t, *p).exp_m1(),
            LocalPhi::Custom(f) => f(t),
            LocalPhi::Conjugate { inner, tol } => return Ok(conjugate_local(inner, t, *tol)?.value),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Range { t, node: None })
        }
    }
}

#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if p == 2.0 {
        t * t
    } else {
        t.powf(p)
    }
}

/// Properties checked by [`validate_phi`], in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiProperty {
    ZeroAtOrigin,
    Positive,
    Nondecreasing,
    MidpointConvex,
    /// `M(x, s)/s → 0` as `s → 0`.
    SmallLimit,
    /// `M(x, s)/s → ∞` as `s → ∞`.
    LargeLimit,
}

/// Evidence attached to a failed property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiWitness {
    pub x: Vec<f64>,
    /// Arguments involved (one for pointwise checks, two for monotonicity and convexity).
    pub t: Vec<f64>,
    /// `M(x, ·)` at the arguments (and at the midpoint for convexity).
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub property: PhiProperty,
    pub passed: bool,
    pub witness: Option<PhiWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiValidation {
    pub checks: Vec<PropertyCheck>,
    pub first_violation: Option<PhiProperty>,
    pub sample_points: usize,
    pub t_samples: usize,
}

impl PhiValidation {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn check(&self, property: PhiProperty) -> &PropertyCheck {
        self.checks.iter().find(|c| c.property == property).expect("all properties are checked")
    }
}

/// Below this ratio `M(x,s)/s` counts as tending to 0 at the small end of the grid.
pub const SMALL_LIMIT_RATIO: f64 = 1e-3;
/// Above this ratio `M(x,s)/s` counts as tending to ∞ at the large end of the grid.
pub const LARGE_LIMIT_RATIO: f64 = 1e3;
const REL_TOL: f64 = 1e-12;

/// 73 log-spaced samples over `[1e-9, 1e9]`: wide enough that the limit
/// ratios resolve for exponents above 4/3.
pub fn default_t_grid() -> Vec<f64> {
    crate::domain::log_space(1e-9, 1e9, 73)
}

/// Sampled check of the Φ-function axioms at each `x` in `sample_points`.
///
/// `t_grid` must be increasing and span at least `[1e-6, 1e6]`. Overflowing
/// values count as `+∞`, consistent with `M(x, s) → ∞`.
pub fn validate_phi(phi: &PhiFunction, sample_points: &[Vec<f64>], t_grid: &[f64]) -> Result<PhiValidation> {
    if t_grid.is_empty() || t_grid[0] > 1e-6 || *t_grid.last().unwrap() < 1e6 {
        return Err(Error::Precondition("t grid must span at least [1e-6, 1e6]".into()));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid[0] <= 0.0 {
        return Err(Error::Precondition("t grid must be positive and increasing".into()));
    }
    let order = [
        PhiProperty::ZeroAtOrigin,
        PhiProperty::Positive,
        PhiProperty::Nondecreasing,
        PhiProperty::MidpointConvex,
        PhiProperty::SmallLimit,
        PhiProperty::LargeLimit,
    ];
    let mut witnesses: Vec<Option<PhiWitness>> = vec![None; order.len()];
    let mut record = |k: usize, w: PhiWitness| {
        if witnesses[k].is_none() {
            witnesses[k] = Some(w);
        }
    };

    for x in sample_points {
        let local = phi.localize(x)?;
        let m = |t: f64| -> f64 {
            local.eval(t).unwrap_or(f64::INFINITY)
        };
        let tol = |v: f64| REL_TOL * v.abs().max(1.0);
        let values: Vec<f64> = t_grid.iter().map(|&t| m(t)).collect();
        let w = |t: Vec<f64>, values: Vec<f64>| PhiWitness { x: x.clone(), t, values };

        let zero = m(0.0);
        if zero != 0.0 {
            record(0, w(vec![0.0], vec![zero]));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
            record(1, w(vec![t_grid[i]], vec![values[i]]));
        }
        for i in 1..values.len() {
            if values[i - 1] > values[i] + tol(values[i]) {
                record(2, w(vec![t_grid[i - 1], t_grid[i]], vec![values[i - 1], values[i]]));
                break;
            }
        }
        'convex: for i in 0..t_grid.len() {
            for j in i + 1..t_grid.len() {
                let mid = m(0.5 * (t_grid[i] + t_grid[j]));
                let chord = 0.5 * (values[i] + values[j]);
                if mid > chord + tol(values[j]) {
                    record(3, w(vec![t_grid[i], t_grid[j]], vec![values[i], values[j], mid]));
                    break 'convex;
                }
            }
        }
        let (t0, v0) = (t_grid[0], values[0]);
        if !(v0 / t0 < SMALL_LIMIT_RATIO) {
            record(4, w(vec![t0], vec![v0]));
        }
        let (t1, v1) = (*t_grid.last().unwrap(), *values.last().unwrap());
        if !(v1 / t1 > LARGE_LIMIT_RATIO) {
            record(5, w(vec![t1], vec![v1]));
        }
    }

    let checks: Vec<PropertyCheck> = order
        .iter()
        .zip(witnesses)
        .map(|(&property, witness)| PropertyCheck { property, passed: witness.is_none(), witness })
        .collect();
    let first_violation = checks.iter().find(|c| !c.passed).map(|c| c.property);
    Ok(PhiValidation {
        checks,
        first_violation,
        sample_points: sample_points.len(),
        t_samples: t_grid.len(),
    })
}
