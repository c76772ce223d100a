use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AxisBox, Domain};
use crate::error::{Error, Result};

/// A closed-form function with partial derivatives.
///
/// `eval(alpha, x)` returns `D^alpha f(x)`. Implementations must be pure.
pub trait Analytic: Send + Sync + fmt::Debug {
    /// Highest derivative order available; `None` means unbounded.
    fn max_order(&self) -> Option<usize>;

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64;

    fn supports_order(&self, order: usize) -> bool {
        self.max_order().is_none_or(|m| order <= m)
    }
}

/// `f ≡ value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Analytic for Constant {
    fn max_order(&self) -> Option<usize> {
        None
    }

    fn eval(&self, alpha: &[usize], _x: &[f64]) -> f64 {
        if alpha.iter().all(|&a| a == 0) {
            self.0
        } else {
            0.0
        }
    }
}

/// `f(x) = offset + gradient · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub offset: f64,
    pub gradient: Vec<f64>,
}

impl Analytic for Affine {
    fn max_order(&self) -> Option<usize> {
        None
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        match alpha.iter().sum::<usize>() {
            0 => self.offset + self.gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>(),
            1 => {
                let axis = alpha.iter().position(|&a| a == 1).unwrap();
                self.gradient.get(axis).copied().unwrap_or(0.0)
            }
            _ => 0.0,
        }
    }
}

/// Tensor product `Π f(ωᵢ (xᵢ − oᵢ))` with `f = sin` or `f = cos`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trig {
    pub origin: Vec<f64>,
    pub frequency: Vec<f64>,
    pub cosine: bool,
}

impl Trig {
    /// `Π sin(π (xᵢ − aᵢ)/Lᵢ)`, the first Dirichlet eigenfunction of the box.
    pub fn dirichlet(domain: &Domain) -> Self {
        let b = domain.bounds();
        Trig {
            origin: b.lower.clone(),
            frequency: (0..domain.dim()).map(|i| std::f64::consts::PI / b.extent(i)).collect(),
            cosine: false,
        }
    }

    /// `Π cos(π (xᵢ − aᵢ)/Lᵢ)`.
    pub fn cosine_mode(domain: &Domain) -> Self {
        Trig { cosine: true, ..Self::dirichlet(domain) }
    }
}

impl Analytic for Trig {
    fn max_order(&self) -> Option<usize> {
        None
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (i, &xi) in x.iter().enumerate() {
            let w = self.frequency[i];
            let arg = w * (xi - self.origin[i]);
            // sin^(k) = sin(· + kπ/2); cos is sin shifted by one derivative.
            let k = alpha.get(i).copied().unwrap_or(0) + usize::from(self.cosine);
            let d = match k % 4 {
                0 => arg.sin(),
                1 => arg.cos(),
                2 => -arg.sin(),
                _ => -arg.cos(),
            };
            v *= d * w.powi(alpha.get(i).copied().unwrap_or(0) as i32);
        }
        v
    }
}

/// `s · f`.
#[derive(Debug)]
struct Scaled {
    factor: f64,
    inner: Arc<dyn Analytic>,
}

impl Analytic for Scaled {
    fn max_order(&self) -> Option<usize> {
        self.inner.max_order()
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        self.factor * self.inner.eval(alpha, x)
    }
}

/// `D^offset f`.
#[derive(Debug)]
struct Derived {
    offset: Vec<usize>,
    inner: Arc<dyn Analytic>,
}

impl Analytic for Derived {
    fn max_order(&self) -> Option<usize> {
        let used: usize = self.offset.iter().sum();
        self.inner.max_order().map(|m| m.saturating_sub(used))
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        let total: Vec<usize> = self.offset.iter().zip(alpha).map(|(a, b)| a + b).collect();
        self.inner.eval(&total, x)
    }
}

/// `a·f + b·g`.
#[derive(Debug)]
struct Combination {
    a: f64,
    f: Arc<dyn Analytic>,
    b: f64,
    g: Arc<dyn Analytic>,
}

impl Analytic for Combination {
    fn max_order(&self) -> Option<usize> {
        match (self.f.max_order(), self.g.max_order()) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        }
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        self.a * self.f.eval(alpha, x) + self.b * self.g.eval(alpha, x)
    }
}

/// Where a grid function may be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub region: AxisBox,
    /// Set when `region` lies strictly inside the domain.
    pub compact: bool,
}

impl Support {
    pub fn new(region: AxisBox, domain: &Domain) -> Result<Self> {
        if !domain.bounds().contains_box(&region) {
            return Err(Error::Geometry(format!(
                "support {:?}..{:?} is not contained in the domain",
                region.lower, region.upper
            )));
        }
        let compact = domain.bounds().strictly_contains_box(&region);
        Ok(Self { region, compact })
    }

    pub fn whole(domain: &Domain) -> Self {
        Self { region: domain.bounds().clone(), compact: false }
    }

    /// Smallest box containing both supports.
    fn hull(&self, other: &Support, domain: &Domain) -> Support {
        let region = AxisBox {
            lower: self.region.lower.iter().zip(&other.region.lower).map(|(a, b)| a.min(*b)).collect(),
            upper: self.region.upper.iter().zip(&other.region.upper).map(|(a, b)| a.max(*b)).collect(),
        };
        let compact = domain.bounds().strictly_contains_box(&region);
        Support { region, compact }
    }
}

/// Function sampled at the nodes of a [`Domain`].
#[derive(Clone)]
pub struct GridFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
    support: Support,
    analytic: Option<Arc<dyn Analytic>>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("nodes", &self.domain.nodes())
            .field("support", &self.support)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl GridFunction {
    pub fn zeros(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        Self {
            support: Support::whole(&domain),
            domain,
            values: vec![0.0; n],
            analytic: Some(Arc::new(Constant(0.0))),
        }
    }

    /// Samples `f` at every node inside `support` (the whole box when `None`).
    ///
    /// Nodes outside the support are set to zero and `f` is treated as the
    /// restriction to it.
    pub fn from_analytic(
        domain: Arc<Domain>,
        f: Arc<dyn Analytic>,
        support: Option<AxisBox>,
    ) -> Result<Self> {
        let support = match support {
            Some(region) => Support::new(region, &domain)?,
            None => Support::whole(&domain),
        };
        let zero = vec![0; domain.dim()];
        let values = sample(&domain, &support.region, |x| f.eval(&zero, x));
        Ok(Self { domain, values, support, analytic: Some(f) })
    }

    /// Wraps nodal values; derivatives fall back to finite differences.
    pub fn from_values(domain: Arc<Domain>, values: Vec<f64>, support: Option<AxisBox>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch);
        }
        let support = match support {
            Some(region) => Support::new(region, &domain)?,
            None => Support::whole(&domain),
        };
        let mut x = vec![0.0; domain.dim()];
        for (i, v) in values.iter().enumerate() {
            domain.point_into(i, &mut x);
            if *v != 0.0 && !support.region.contains(&x, 0.0) {
                return Err(Error::Construction(format!(
                    "value {v} at node {i} lies outside the declared support"
                )));
            }
        }
        Ok(Self { domain, values, support, analytic: None })
    }

    /// `value` on the closed box `region`, zero elsewhere.
    pub fn indicator(domain: Arc<Domain>, region: AxisBox, value: f64) -> Result<Self> {
        let support = Support::new(region, &domain)?;
        let values = sample(&domain, &support.region, |_| value);
        Ok(Self { domain, values, support, analytic: None })
    }

    pub(crate) fn from_parts(
        domain: Arc<Domain>,
        values: Vec<f64>,
        support: Support,
        analytic: Option<Arc<dyn Analytic>>,
    ) -> Self {
        Self { domain, values, support, analytic }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn analytic(&self) -> Option<&Arc<dyn Analytic>> {
        self.analytic.as_ref()
    }

    /// Drops the analytic evaluator so derivatives use finite differences.
    pub fn without_analytic(mut self) -> Self {
        self.analytic = None;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    /// `s · u`, with the analytic evaluator scaled alongside.
    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
            support: self.support.clone(),
            analytic: self
                .analytic
                .as_ref()
                .map(|f| Arc::new(Scaled { factor: s, inner: f.clone() }) as Arc<dyn Analytic>),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if !self.same_domain(other) {
            return Err(Error::DomainMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        let analytic = match (&self.analytic, &other.analytic) {
            (Some(f), Some(g)) => Some(Arc::new(Combination { a, f: f.clone(), b, g: g.clone() }) as Arc<dyn Analytic>),
            _ => None,
        };
        Ok(GridFunction {
            domain: self.domain.clone(),
            values,
            support: self.support.hull(&other.support, &self.domain),
            analytic,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(1.0, other, -1.0)
    }

    pub(crate) fn derived_analytic(&self, alpha: &[usize]) -> Option<Arc<dyn Analytic>> {
        self.analytic.as_ref().map(|f| {
            Arc::new(Derived { offset: alpha.to_vec(), inner: f.clone() }) as Arc<dyn Analytic>
        })
    }

    /// Value at an arbitrary point: the analytic evaluator when attached,
    /// multilinear interpolation of nodal values otherwise. Zero outside the support.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        if !self.support.region.contains(x, 0.0) {
            return 0.0;
        }
        match &self.analytic {
            Some(f) => f.eval(&vec![0; x.len()], x),
            None => interpolate(&self.domain, &self.values, x),
        }
    }

    /// Writes `x1,…,xN,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.domain.dim()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        let mut x = vec![0.0; self.domain.dim()];
        for (i, v) in self.values.iter().enumerate() {
            self.domain.point_into(i, &mut x);
            for xi in &x {
                write!(w, "{xi},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Evaluates `f` at nodes inside `region`, zero elsewhere.
pub(crate) fn sample<F>(domain: &Domain, region: &AxisBox, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = domain.dim();
    let mut values = vec![0.0; domain.len()];
    values
        .par_chunks_mut(crate::sum::CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut x = vec![0.0; dim];
            for (k, v) in chunk.iter_mut().enumerate() {
                domain.point_into(c * crate::sum::CHUNK + k, &mut x);
                if region.contains(&x, 0.0) {
                    *v = f(&x);
                }
            }
        });
    values
}

/// Multilinear interpolation of nodal values; zero outside the box.
pub(crate) fn interpolate(domain: &Domain, values: &[f64], x: &[f64]) -> f64 {
    let dim = domain.dim();
    if !domain.bounds().contains(x, 0.0) {
        return 0.0;
    }
    let mut base = vec![0usize; dim];
    let mut frac = vec![0.0; dim];
    for axis in 0..dim {
        let n = domain.nodes()[axis];
        let s = (x[axis] - domain.bounds().lower[axis]) / domain.spacing()[axis];
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        base[axis] = i;
        frac[axis] = (s - i as f64).clamp(0.0, 1.0);
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0;
        for axis in 0..dim {
            let up = (corner >> axis) & 1 == 1;
            w *= if up { frac[axis] } else { 1.0 - frac[axis] };
            flat += (base[axis] + usize::from(up)) * domain.strides()[axis];
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}
