//! Modulars `ρ_M(u) = ∫ M(x, |u|)`, Luxemburg and Sobolev-Luxemburg norms,
//! and modular distances.

use serde::{Deserialize, Serialize};

use crate::domain::{derivative, Domain, GridFunction, MultiIndex};
use crate::error::{Error, Result};
use crate::phi::{LocalPhi, YoungFunction};
use crate::sum::par_sum;

/// Default relative tolerance of the norm solver.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Bisection steps allowed after bracketing.
pub const MAX_BISECTION: usize = 200;
const MAX_BRACKETING: usize = 2200;

/// Outcome of a Luxemburg-type norm solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    /// Final `[lo, hi]` with `modular(u/lo) > 1 ≥ modular(u/hi)`.
    pub lambda_bracket: [f64; 2],
    pub modular_at_value: f64,
    pub iterations: usize,
}

impl NormResult {
    fn zero() -> Self {
        Self { value: 0.0, lambda_bracket: [0.0, 0.0], modular_at_value: 0.0, iterations: 0 }
    }
}

/// `Σ_k ∫ M(x, |v_k(x)|)` over a fixed set of sampled fields, with `M(x, ·)`
/// resolved once per node. Nodes where every field vanishes are skipped since
/// `M(x, 0) = 0`.
pub struct ModularSum {
    nodes: Vec<usize>,
    weights: Vec<f64>,
    locals: Vec<LocalPhi>,
    /// `values[k][j]` is `|v_k|` at `nodes[j]`.
    values: Vec<Vec<f64>>,
    max_abs: f64,
}

impl ModularSum {
    pub fn new<F: YoungFunction + ?Sized>(phi: &F, domain: &Domain, fields: &[&[f64]]) -> Result<Self> {
        if fields.iter().any(|f| f.len() != domain.len()) {
            return Err(Error::DomainMismatch);
        }
        let nodes: Vec<usize> = (0..domain.len())
            .filter(|&i| fields.iter().any(|f| f[i] != 0.0))
            .collect();
        let mut locals = Vec::with_capacity(nodes.len());
        let mut x = vec![0.0; domain.dim()];
        for &i in &nodes {
            domain.point_into(i, &mut x);
            locals.push(phi.local(&x)?);
        }
        let weights = nodes.iter().map(|&i| domain.weight(i)).collect();
        let values: Vec<Vec<f64>> = fields
            .iter()
            .map(|f| nodes.iter().map(|&i| f[i].abs()).collect())
            .collect();
        let max_abs = values.iter().flatten().fold(0.0, |m: f64, v| m.max(*v));
        Ok(Self { nodes, weights, locals, values, max_abs })
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs == 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    /// `Σ_k ∫ M(x, |v_k|/λ)`.
    pub fn divided(&self, lambda: f64) -> Result<f64> {
        self.sum(|v| v / lambda)
    }

    /// `Σ_k ∫ M(x, c|v_k|)`.
    pub fn scaled(&self, c: f64) -> Result<f64> {
        self.sum(|v| c * v)
    }

    fn sum<G: Fn(f64) -> f64 + Sync>(&self, arg: G) -> Result<f64> {
        par_sum(self.nodes.len(), |j| {
            let local = &self.locals[j];
            let mut acc = 0.0;
            for field in &self.values {
                let v = field[j];
                if v != 0.0 {
                    acc += local.eval(arg(v)).map_err(|e| e.at_node(self.nodes[j]))?;
                }
            }
            Ok(self.weights[j] * acc)
        })
    }

    /// The same sum for the fields multiplied by `s`.
    pub fn rescaled(&self, s: f64) -> ModularSum {
        let s = s.abs();
        ModularSum {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            locals: self.locals.clone(),
            values: self.values.iter().map(|f| f.iter().map(|v| s * v).collect()).collect(),
            max_abs: s * self.max_abs,
        }
    }

    /// Luxemburg-type norm `inf{λ > 0 : Σ_k ρ(v_k/λ) ≤ 1}`.
    ///
    /// Brackets by doubling/halving from `max |v|`, then bisects until the
    /// bracket width is at most `tol·lo`. A modular that overflows at
    /// some `λ` counts as exceeding 1 there.
    pub fn norm(&self, tol: f64) -> Result<NormResult> {
        self.norm_from(tol, None)
    }

    /// As [`ModularSum::norm`], but brackets outward from `guess` in small
    /// geometric steps first. The bracket is always verified, so a poor guess
    /// only costs evaluations.
    pub fn norm_near(&self, tol: f64, guess: f64) -> Result<NormResult> {
        self.norm_from(tol, Some(guess))
    }

    fn norm_from(&self, tol: f64, guess: Option<f64>) -> Result<NormResult> {
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!("norm tolerance must be positive (got {tol})")));
        }
        if self.is_zero() {
            return Ok(NormResult::zero());
        }
        let above_one = |lambda: f64| -> Result<bool> {
            match self.divided(lambda) {
                Ok(m) => Ok(m > 1.0),
                Err(Error::Range { .. }) => Ok(true),
                Err(e) => Err(e),
            }
        };
        let (start, mut ratio) = match guess {
            Some(g) if g > 0.0 && g.is_finite() => (g * (1.0 - 4.0 * tol), 1.0 + 8.0 * tol),
            _ => (self.max_abs, 2.0),
        };
        let (mut lo, mut hi);
        let mut k = 0;
        if above_one(start)? {
            lo = start;
            hi = start * ratio;
            while above_one(hi)? {
                lo = hi;
                ratio = (ratio * ratio).min(2.0);
                hi *= ratio;
                k += 1;
                if k > MAX_BRACKETING || !hi.is_finite() {
                    return Err(Error::NotConverged { solver: "norm bracketing", iterations: k });
                }
            }
        } else {
            hi = start;
            lo = start / ratio;
            while !above_one(lo)? {
                hi = lo;
                ratio = (ratio * ratio).min(2.0);
                lo /= ratio;
                k += 1;
                if k > MAX_BRACKETING || lo == 0.0 {
                    return Err(Error::NotConverged { solver: "norm bracketing", iterations: k });
                }
            }
        }
        let mut iterations = 0;
        while hi - lo > tol * lo {
            if iterations == MAX_BISECTION {
                return Err(Error::NotConverged { solver: "norm bisection", iterations });
            }
            let mid = 0.5 * (lo + hi);
            if above_one(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let value = 0.5 * (lo + hi);
        let modular_at_value = self.divided(value)?;
        Ok(NormResult { value, lambda_bracket: [lo, hi], modular_at_value, iterations })
    }
}

/// `ρ_M(u) = ∫_Ω M(x, |u(x)|) dx` by trapezoidal quadrature.
pub fn modular<F: YoungFunction + ?Sized>(phi: &F, u: &GridFunction) -> Result<f64> {
    ModularSum::new(phi, u.domain(), &[u.values()])?.divided(1.0)
}

/// `‖u‖_{M,Ω} = inf{λ > 0 : ρ_M(u/λ) ≤ 1}`.
pub fn luxemburg_norm<F: YoungFunction + ?Sized>(phi: &F, u: &GridFunction, tol: f64) -> Result<NormResult> {
    ModularSum::new(phi, u.domain(), &[u.values()])?.norm(tol)
}

/// `‖u‖_{m,M,Ω} = inf{λ > 0 : Σ_{|α|≤m} ρ_M(D^α u/λ) ≤ 1}`.
pub fn sobolev_norm<F: YoungFunction + ?Sized>(phi: &F, u: &GridFunction, m: usize, tol: f64) -> Result<NormResult> {
    let derivatives = MultiIndex::up_to_order(u.domain().dim(), m)
        .iter()
        .map(|alpha| derivative(u, alpha))
        .collect::<Result<Vec<_>>>()?;
    let fields: Vec<&[f64]> = derivatives.iter().map(|d| d.values()).collect();
    ModularSum::new(phi, u.domain(), &fields)?.norm(tol)
}

/// `ρ_M((u − v)/λ)`.
pub fn modular_gap<F: YoungFunction + ?Sized>(phi: &F, u: &GridFunction, v: &GridFunction, lambda: f64) -> Result<f64> {
    if !u.same_domain(v) {
        return Err(Error::DomainMismatch);
    }
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("λ must be positive (got {lambda})")));
    }
    let diff: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
    ModularSum::new(phi, u.domain(), &[&diff])?.divided(lambda)
}
