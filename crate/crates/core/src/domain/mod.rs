//! Axis-aligned boxes discretized on uniform per-axis grids, together with
//! sampled test functions, discrete differentiation and mollification.

mod bump;
mod diff;
mod function;
mod mollify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bump::{make_bump, BumpKind, TensorBump};
pub use diff::derivative;
pub use function::{Affine, Analytic, Constant, GridFunction, Support, Trig};
pub use mollify::mollify;

/// Closed axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Construction(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !a.is_finite() || !b.is_finite() || b < a {
                return Err(Error::Construction(format!(
                    "box axis {i}: bounds [{a}, {b}] must be finite and ordered"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Closed containment with an absolute slack per axis.
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&xi, (&a, &b))| xi >= a - slack && xi <= b + slack)
    }

    /// `other ⊂ self` (closed).
    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| other.lower[i] >= self.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// `other` lies in the interior of `self`.
    pub fn strictly_contains_box(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| other.lower[i] > self.lower[i] && other.upper[i] < self.upper[i])
    }

    pub fn translated(&self, shift: &[f64]) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().zip(shift).map(|(a, s)| a + s).collect(),
            upper: self.upper.iter().zip(shift).map(|(b, s)| b + s).collect(),
        }
    }

    /// Enlarges every axis by `per_axis[i]` on both sides.
    pub fn fattened(&self, per_axis: &[f64]) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().zip(per_axis).map(|(a, e)| a - e).collect(),
            upper: self.upper.iter().zip(per_axis).map(|(b, e)| b + e).collect(),
        }
    }

    pub fn intersection(&self, other: &AxisBox) -> AxisBox {
        AxisBox {
            lower: self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect(),
        }
    }
}

/// Bounded box Ω with a uniform grid of `nodes[i]` points along axis `i`.
///
/// Nodes are stored in row-major order: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: AxisBox,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    axis_weights: Vec<Vec<f64>>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes: Vec<usize>) -> Result<Self> {
        let bounds = AxisBox::new(lower, upper)?;
        if nodes.len() != bounds.dim() {
            return Err(Error::Construction(format!(
                "{} node counts given for a {}-dimensional box",
                nodes.len(),
                bounds.dim()
            )));
        }
        for (i, &n) in nodes.iter().enumerate() {
            if bounds.extent(i) <= 0.0 {
                return Err(Error::Construction(format!(
                    "axis {i}: domain must have positive extent"
                )));
            }
            if n < 2 {
                return Err(Error::Construction(format!(
                    "axis {i}: at least 2 nodes required (got {n})"
                )));
            }
        }
        let spacing: Vec<f64> = (0..bounds.dim())
            .map(|i| bounds.extent(i) / (nodes[i] - 1) as f64)
            .collect();
        let mut strides = vec![1; nodes.len()];
        for i in (0..nodes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * nodes[i + 1];
        }
        let axis_weights = nodes
            .iter()
            .zip(&spacing)
            .map(|(&n, &h)| {
                let mut w = vec![h; n];
                w[0] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                w
            })
            .collect();
        Ok(Self { bounds, nodes, spacing, strides, axis_weights })
    }

    /// `[0, 1]^dim` with `nodes` points per axis.
    pub fn unit(dim: usize, nodes: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim], vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn bounds(&self) -> &AxisBox {
        &self.bounds
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Total number of grid nodes.
    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.bounds.extent(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinate of node `index` along `axis`; the last node is pinned to the upper bound.
    #[inline]
    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        if index + 1 == self.nodes[axis] {
            self.bounds.upper[axis]
        } else {
            self.bounds.lower[axis] + index as f64 * self.spacing[axis]
        }
    }

    #[inline]
    pub fn unflatten(&self, flat: usize, out: &mut [usize]) {
        let mut rest = flat;
        for (axis, &stride) in self.strides.iter().enumerate() {
            out[axis] = rest / stride;
            rest %= stride;
        }
    }

    #[inline]
    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Fills `out` with the coordinates of node `flat`.
    #[inline]
    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for (axis, &stride) in self.strides.iter().enumerate() {
            out[axis] = self.coordinate(axis, rest / stride);
            rest %= stride;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.point_into(flat, &mut p);
        p
    }

    /// Tensor trapezoidal weight of node `flat`.
    #[inline]
    pub fn weight(&self, flat: usize) -> f64 {
        let mut rest = flat;
        let mut w = 1.0;
        for (axis, &stride) in self.strides.iter().enumerate() {
            w *= self.axis_weights[axis][rest / stride];
            rest %= stride;
        }
        w
    }

    /// Trapezoidal weights of one axis.
    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.axis_weights[axis]
    }

    /// Nodes lying on the boundary of the box.
    pub fn is_boundary_node(&self, flat: usize) -> bool {
        let mut rest = flat;
        for (axis, &stride) in self.strides.iter().enumerate() {
            let i = rest / stride;
            rest %= stride;
            if i == 0 || i + 1 == self.nodes[axis] {
                return true;
            }
        }
        false
    }

    /// Trapezoidal quadrature of nodal values over the whole box.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DomainMismatch);
        }
        crate::sum::par_sum(values.len(), |i| Ok(self.weight(i) * values[i]))
    }
}

/// Derivative order `α = (α₁, …, α_N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `α = k·e_axis`.
    pub fn axis(dim: usize, axis: usize, k: usize) -> Self {
        let mut a = vec![0; dim];
        a[axis] = k;
        MultiIndex(a)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = α₁ + ⋯ + α_N`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn component(&self, axis: usize) -> usize {
        self.0.get(axis).copied().unwrap_or(0)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All multi-indices of exactly order `k` in dimension `dim`, in lexicographic order.
    pub fn of_order(dim: usize, k: usize) -> Vec<MultiIndex> {
        fn rec(dim: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=remaining).rev() {
                prefix.push(first);
                rec(dim, remaining - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if dim == 0 {
            return out;
        }
        rec(dim, k, &mut Vec::with_capacity(dim), &mut out);
        out
    }

    /// All multi-indices with `|α| ≤ k`, grouped by increasing order.
    pub fn up_to_order(dim: usize, k: usize) -> Vec<MultiIndex> {
        (0..=k).flat_map(|j| Self::of_order(dim, j)).collect()
    }

    /// `#{β : |β| = k}` in dimension `dim`, i.e. `C(k + dim − 1, dim − 1)`.
    pub fn count_of_order(dim: usize, k: usize) -> usize {
        if dim == 0 {
            return 0;
        }
        let (n, r) = (k + dim - 1, (dim - 1).min(k));
        (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else if i == 0 {
                        lo
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn diameter_examples() {
        assert_eq!(Domain::unit(1, 9).unwrap().diameter(), 1.0);
        assert_relative_eq!(Domain::unit(2, 9).unwrap().diameter(), std::f64::consts::SQRT_2, epsilon = 1e-6);
        let d = Domain::new(vec![0.0, 0.0], vec![3.0, 3.0], vec![9, 9]).unwrap();
        assert_relative_eq!(d.diameter(), 4.242_641, epsilon = 1e-6);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Domain::new(vec![0.0], vec![0.0], vec![9]).is_err());
        assert!(Domain::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(Domain::new(vec![0.0], vec![f64::INFINITY], vec![9]).is_err());
        assert!(Domain::new(vec![0.0, 0.0], vec![1.0], vec![9]).is_err());
    }

    #[test]
    fn flat_index_round_trip_and_weights() {
        let d = Domain::new(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 3.0], vec![3, 4, 5]).unwrap();
        let mut m = vec![0; 3];
        for flat in 0..d.len() {
            d.unflatten(flat, &mut m);
            assert_eq!(d.flatten(&m), flat);
        }
        let ones = vec![1.0; d.len()];
        assert_relative_eq!(d.integrate(&ones).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_is_exact_for_linear_integrands() {
        let d = Domain::new(vec![0.0, 0.0], vec![2.0, 1.0], vec![7, 5]).unwrap();
        let values: Vec<f64> = (0..d.len())
            .map(|i| {
                let p = d.point(i);
                3.0 * p[0] - p[1] + 0.5
            })
            .collect();
        // ∫∫ (3x − y + 1/2) = 3·2·1 − 2·(1/2) + 1 = 6
        assert_relative_eq!(d.integrate(&values).unwrap(), 6.0, epsilon = 1e-13);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(MultiIndex::of_order(2, 1), vec![MultiIndex(vec![1, 0]), MultiIndex(vec![0, 1])]);
        assert_eq!(MultiIndex::of_order(3, 2).len(), 6);
        assert_eq!(MultiIndex::up_to_order(2, 2).len(), 6);
        for dim in 1..5 {
            for k in 0..5 {
                assert_eq!(MultiIndex::of_order(dim, k).len(), MultiIndex::count_of_order(dim, k));
                assert!(MultiIndex::of_order(dim, k).iter().all(|a| a.order() == k));
            }
        }
        assert_eq!(MultiIndex(vec![1, 2, 0]).order(), 3);
        assert_eq!(MultiIndex(vec![1, 2]).component(5), 0);
    }

    #[test]
    fn log_space_endpoints_are_exact() {
        let g = log_space(1e-6, 1e6, 49);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[48], 1e6);
        assert_relative_eq!(g[24], 1.0, epsilon = 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn diameter_translation_and_scaling(
            lo in prop::collection::vec(-10.0f64..10.0, 1..4),
            ext in prop::collection::vec(0.1f64..5.0, 4),
            shift in -20.0f64..20.0,
            scale in 0.1f64..10.0,
        ) {
            let n = lo.len();
            let up: Vec<f64> = lo.iter().zip(&ext).map(|(a, e)| a + e).collect();
            let d = Domain::new(lo.clone(), up.clone(), vec![5; n]).unwrap();
            let moved = Domain::new(
                lo.iter().map(|a| a + shift).collect(),
                up.iter().map(|b| b + shift).collect(),
                vec![5; n],
            ).unwrap();
            let scaled = Domain::new(
                lo.iter().map(|a| a * scale).collect(),
                up.iter().map(|b| b * scale).collect(),
                vec![5; n],
            ).unwrap();
            prop_assert!((d.diameter() - moved.diameter()).abs() <= 1e-12 * (1.0 + shift.abs()) * d.diameter().max(1.0));
            prop_assert!((scaled.diameter() - scale * d.diameter()).abs() <= 1e-12 * scaled.diameter());
        }
    }
}
