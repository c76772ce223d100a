//! Scalar fields on a box: variable exponents `p(·)` and double-phase weights `a(·)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::AxisBox;
use crate::error::{Error, Result};

/// Closed-form or sampled description of a scalar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldExpr {
    Constant { value: f64 },
    /// `offset + gradient · x`.
    Affine { offset: f64, gradient: Vec<f64> },
    /// `mean + amplitude · sin(2π · frequency · x_axis)`.
    Sinusoid { mean: f64, amplitude: f64, frequency: f64, axis: usize },
    /// `below` for `x_axis < at`, `above` otherwise.
    Step { axis: usize, at: f64, below: f64, above: f64 },
    /// Node values on a uniform grid over `bounds`, row-major with the last
    /// axis fastest, interpolated multilinearly.
    Grid { bounds: AxisBox, nodes: Vec<usize>, values: Vec<f64> },
}

/// A [`FieldExpr`] restricted to a box, with its exact range on that box.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: FieldExpr,
    region: Option<AxisBox>,
    min: f64,
    max: f64,
}

const BOX_SLACK: f64 = 1e-12;

impl ScalarField {
    /// `region` is the box on which the field may be evaluated; `None` is
    /// only accepted for constants. Grid fields default to their own bounds.
    pub fn new(expr: FieldExpr, region: Option<AxisBox>) -> Result<Self> {
        let region = match (&expr, region) {
            (FieldExpr::Grid { bounds, .. }, None) => Some(bounds.clone()),
            (_, r) => r,
        };
        let (min, max) = match (&expr, &region) {
            (FieldExpr::Constant { value }, _) => (*value, *value),
            (_, None) => {
                return Err(Error::Construction(
                    "non-constant fields need a bounding box".into(),
                ))
            }
            (e, Some(b)) => range_on(e, b)?,
        };
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Construction("field values must be finite".into()));
        }
        Ok(Self { expr, region, min, max })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(FieldExpr::Constant { value }, None)
    }

    pub fn expr(&self) -> &FieldExpr {
        &self.expr
    }

    pub fn region(&self) -> Option<&AxisBox> {
        self.region.as_ref()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }

    /// Field value at `x`; points outside the field's box are a domain error.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if let Some(b) = &self.region {
            let slack = BOX_SLACK * (0..b.dim()).map(|i| b.extent(i)).fold(1.0, f64::max);
            if !b.contains(x, slack) {
                return Err(Error::OutsideDomain { point: x.to_vec() });
            }
        }
        Ok(match &self.expr {
            FieldExpr::Constant { value } => *value,
            FieldExpr::Affine { offset, gradient } => {
                offset + gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>()
            }
            FieldExpr::Sinusoid { mean, amplitude, frequency, axis } => {
                mean + amplitude * (2.0 * PI * frequency * x[*axis]).sin()
            }
            FieldExpr::Step { axis, at, below, above } => {
                if x[*axis] < *at {
                    *below
                } else {
                    *above
                }
            }
            FieldExpr::Grid { bounds, nodes, values } => grid_interpolate(bounds, nodes, values, x),
        })
    }
}

fn check_axis(axis: usize, dim: usize) -> Result<()> {
    if axis >= dim {
        return Err(Error::Construction(format!("field axis {axis} out of range for dimension {dim}")));
    }
    Ok(())
}

/// Exact range of `expr` on the closed box `b`.
fn range_on(expr: &FieldExpr, b: &AxisBox) -> Result<(f64, f64)> {
    let dim = b.dim();
    match expr {
        FieldExpr::Constant { value } => Ok((*value, *value)),
        FieldExpr::Affine { offset, gradient } => {
            if gradient.len() != dim {
                return Err(Error::Construction(format!(
                    "affine gradient has {} components, box has {dim}",
                    gradient.len()
                )));
            }
            let (mut lo, mut hi) = (*offset, *offset);
            for (i, g) in gradient.iter().enumerate() {
                let (a, c) = (g * b.lower[i], g * b.upper[i]);
                lo += a.min(c);
                hi += a.max(c);
            }
            Ok((lo, hi))
        }
        FieldExpr::Sinusoid { mean, amplitude, frequency, axis } => {
            check_axis(*axis, dim)?;
            let (ta, tb) = (2.0 * PI * frequency * b.lower[*axis], 2.0 * PI * frequency * b.upper[*axis]);
            let (ta, tb) = (ta.min(tb), ta.max(tb));
            let mut lo = ta.sin().min(tb.sin());
            let mut hi = ta.sin().max(tb.sin());
            // Interior extrema of sin sit at π/2 + kπ.
            let first = ((ta - PI / 2.0) / PI).ceil() as i64;
            let last = ((tb - PI / 2.0) / PI).floor() as i64;
            for k in first..=last.min(first + 1) {
                let v = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let (a, c) = (mean + amplitude * lo, mean + amplitude * hi);
            Ok((a.min(c), a.max(c)))
        }
        FieldExpr::Step { axis, at, below, above } => {
            check_axis(*axis, dim)?;
            let (a, c) = (b.lower[*axis], b.upper[*axis]);
            Ok(if *at <= a {
                (*above, *above)
            } else if *at > c {
                (*below, *below)
            } else {
                (below.min(*above), below.max(*above))
            })
        }
        FieldExpr::Grid { bounds, nodes, values } => {
            if bounds.dim() != dim || nodes.len() != dim {
                return Err(Error::Construction("grid field dimension mismatch".into()));
            }
            if nodes.iter().any(|&n| n < 2) || values.len() != nodes.iter().product::<usize>() {
                return Err(Error::Construction(
                    "grid field needs at least 2 nodes per axis and one value per node".into(),
                ));
            }
            if !bounds.contains_box(b) {
                return Err(Error::Construction("grid field does not cover the requested box".into()));
            }
            // Multilinear interpolants attain their extrema at nodes; the node
            // range is a valid (possibly loose) enclosure on a sub-box.
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok((lo, hi))
        }
    }
}

fn grid_interpolate(bounds: &AxisBox, nodes: &[usize], values: &[f64], x: &[f64]) -> f64 {
    let dim = nodes.len();
    let mut strides = vec![1usize; dim];
    for i in (0..dim.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * nodes[i + 1];
    }
    let mut base = vec![0usize; dim];
    let mut frac = vec![0.0; dim];
    for axis in 0..dim {
        let h = bounds.extent(axis) / (nodes[axis] - 1) as f64;
        let s = ((x[axis] - bounds.lower[axis]) / h).clamp(0.0, (nodes[axis] - 1) as f64);
        let i = (s.floor() as usize).min(nodes[axis] - 2);
        base[axis] = i;
        frac[axis] = s - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0;
        for axis in 0..dim {
            let up = (corner >> axis) & 1 == 1;
            w *= if up { frac[axis] } else { 1.0 - frac[axis] };
            flat += (base[axis] + usize::from(up)) * strides[axis];
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

/// Variable exponent `p(·)` with `1 ≤ p⁻ ≤ p(x) ≤ p⁺ < ∞`.
///
/// The library accepts `p⁻ = 1` so that exponents touching 1 (for example
/// `2 + sin(2πx₁)`) can still be inspected by the condition checkers;
/// [`ExponentField::is_phi_range`] reports whether the strict bound holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField(ScalarField);

impl ExponentField {
    pub fn new(expr: FieldExpr, region: Option<AxisBox>) -> Result<Self> {
        let f = ScalarField::new(expr, region)?;
        if f.min() < 1.0 {
            return Err(Error::Construction(format!(
                "exponent lower bound must be at least 1 (got {})",
                f.min()
            )));
        }
        Ok(Self(f))
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new(FieldExpr::Constant { value: p }, None)
    }

    /// `offset + gradient · x` on `region`.
    pub fn affine(offset: f64, gradient: Vec<f64>, region: AxisBox) -> Result<Self> {
        Self::new(FieldExpr::Affine { offset, gradient }, Some(region))
    }

    /// `p⁻ > 1`, the range required of a Φ-function exponent.
    pub fn is_phi_range(&self) -> bool {
        self.0.min() > 1.0
    }

    pub fn lower(&self) -> f64 {
        self.0.min()
    }

    pub fn upper(&self) -> f64 {
        self.0.max()
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.0.eval(x)
    }
}

/// Nonnegative weight `a(·)` of a double-phase function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField(ScalarField);

impl WeightField {
    pub fn new(expr: FieldExpr, region: Option<AxisBox>) -> Result<Self> {
        let f = ScalarField::new(expr, region)?;
        if f.min() < 0.0 {
            return Err(Error::Construction(format!("weight must be nonnegative (minimum {})", f.min())));
        }
        Ok(Self(f))
    }

    pub fn constant(a: f64) -> Result<Self> {
        Self::new(FieldExpr::Constant { value: a }, None)
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.0.eval(x)
    }
}
