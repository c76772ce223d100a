use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Analytic, AxisBox, Domain, GridFunction};
use crate::error::{Error, Result};

/// One-dimensional profile of a tensor bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `b(s) = exp(1 − 1/(1 − s²))` on `|s| < 1`; `C^∞` with `b(0) = 1`.
    SmoothExp,
    /// `b(s) = (1 − s²)₊^k`; `C^{k−1}`.
    Poly(u32),
}

impl BumpKind {
    /// Profile value and its first two derivatives at `s`.
    pub fn profile(self, s: f64) -> [f64; 3] {
        if s.abs() >= 1.0 {
            return [0.0; 3];
        }
        let r = 1.0 - s * s;
        match self {
            BumpKind::SmoothExp => {
                let b = (1.0 - 1.0 / r).exp();
                let g1 = -2.0 * s / (r * r);
                let g2 = -2.0 / (r * r) - 8.0 * s * s / (r * r * r);
                [b, b * g1, b * (g1 * g1 + g2)]
            }
            BumpKind::Poly(k) => {
                let k = k as i32;
                let kf = k as f64;
                let b = r.powi(k);
                let d1 = -2.0 * kf * s * r.powi(k - 1);
                let d2 = if k >= 2 {
                    -2.0 * kf * r.powi(k - 1) + 4.0 * kf * (kf - 1.0) * s * s * r.powi(k - 2)
                } else {
                    -2.0 * kf
                };
                [b, d1, d2]
            }
        }
    }

    /// Orders for which the classical derivative is also the weak one.
    pub fn max_order(self) -> usize {
        match self {
            BumpKind::SmoothExp => 2,
            BumpKind::Poly(k) => (k as usize).min(2),
        }
    }
}

/// `u(x) = Π bᵢ((xᵢ − cᵢ)/wᵢ)`, with analytic partial derivatives up to order 2.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBump {
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
    pub kind: BumpKind,
}

impl TensorBump {
    pub fn support(&self) -> AxisBox {
        AxisBox {
            lower: self.center.iter().zip(&self.widths).map(|(c, w)| c - w).collect(),
            upper: self.center.iter().zip(&self.widths).map(|(c, w)| c + w).collect(),
        }
    }
}

impl Analytic for TensorBump {
    fn max_order(&self) -> Option<usize> {
        Some(self.kind.max_order())
    }

    fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (i, &xi) in x.iter().enumerate() {
            let w = self.widths[i];
            let k = alpha.get(i).copied().unwrap_or(0);
            if k > 2 {
                // Not reached through `derivative`, which checks `max_order` first.
                return f64::NAN;
            }
            let p = self.kind.profile((xi - self.center[i]) / w);
            v *= p[k] / w.powi(k as i32);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }
}

/// Builds a tensor bump whose open support `{|xᵢ − cᵢ| < wᵢ}` must lie strictly inside Ω.
pub fn make_bump(
    domain: Arc<Domain>,
    center: &[f64],
    widths: &[f64],
    kind: BumpKind,
) -> Result<GridFunction> {
    let dim = domain.dim();
    if center.len() != dim || widths.len() != dim {
        return Err(Error::Construction(format!(
            "bump center/widths must have {dim} components"
        )));
    }
    if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Construction("bump widths must be positive".into()));
    }
    if let BumpKind::Poly(0) = kind {
        return Err(Error::Construction("poly bump exponent must be at least 1".into()));
    }
    let bump = TensorBump { center: center.to_vec(), widths: widths.to_vec(), kind };
    let region = bump.support();
    if !domain.bounds().strictly_contains_box(&region) {
        return Err(Error::Geometry(format!(
            "bump support {:?}..{:?} escapes the interior of the domain",
            region.lower, region.upper
        )));
    }
    GridFunction::from_analytic(domain, Arc::new(bump), Some(region))
}
