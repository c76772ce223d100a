//! Numerical Young conjugate `M*(x, s) = sup_{t ≥ 0} (st − M(x, t))` and the
//! Young/Hölder inequality checks built on it.

use serde::{Deserialize, Serialize};

use crate::domain::{log_space, GridFunction};
use crate::error::{Error, Result};
use crate::modular::luxemburg_norm;
use crate::phi::{LocalPhi, YoungFunction};
use crate::sum::par_sum;

/// Default relative tolerance of the golden-section search.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 2100;
const MAX_GOLDEN: usize = 2000;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateResult {
    pub value: f64,
    pub argmax: f64,
    pub bracket_width: f64,
}

/// `sup_{t ≥ 0} (st − M(t))` for a frozen `M`.
///
/// The maximizer is bracketed by doubling `t` from 1 until the concave
/// objective stops increasing, then located by golden-section search until
/// the bracket is narrower than `tol` relative to its upper end.
pub fn conjugate_local(phi: &LocalPhi, s: f64, tol: f64) -> Result<ConjugateResult> {
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::Precondition(format!("conjugate argument must be finite and non-negative (got {s})")));
    }
    if s == 0.0 {
        return Ok(ConjugateResult { value: 0.0, argmax: 0.0, bracket_width: 0.0 });
    }
    let objective = |t: f64| -> Result<f64> {
        match phi.eval(t) {
            Ok(m) => Ok(s * t - m),
            Err(Error::Range { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };

    let (mut a, mut b) = (0.0, 1.0);
    let mut best = (0.0, 0.0);
    let mut g_mid = objective(1.0)?;
    if g_mid > 0.0 {
        best = (1.0, g_mid);
        let mut mid: f64 = 1.0;
        let mut doublings = 0;
        loop {
            let hi = 2.0 * mid;
            if !hi.is_finite() || doublings > MAX_DOUBLINGS {
                return Err(Error::NotPhi(format!("s·t − M(t) keeps growing for s = {s}; M is not superlinear")));
            }
            let g_hi = objective(hi)?;
            if g_hi <= g_mid {
                b = hi;
                break;
            }
            a = mid;
            mid = hi;
            g_mid = g_hi;
            best = (mid, g_mid);
            doublings += 1;
        }
    }

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (objective(c)?, objective(d)?);
    let mut steps = 0;
    while b - a > tol * b {
        if steps == MAX_GOLDEN {
            return Err(Error::NotConverged { solver: "conjugate golden section", iterations: steps });
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = objective(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = objective(d)?;
        }
        steps += 1;
    }
    let mid = 0.5 * (a + b);
    for (t, g) in [(c, gc), (d, gd), (mid, objective(mid)?)] {
        if g > best.1 {
            best = (t, g);
        }
    }
    Ok(ConjugateResult { value: best.1, argmax: best.0, bracket_width: b - a })
}

/// `M*(x, s)`.
pub fn conjugate<F: YoungFunction + ?Sized>(phi: &F, x: &[f64], s: f64, tol: f64) -> Result<ConjugateResult> {
    conjugate_local(&phi.local(x)?, s, tol)
}

/// `M**(x, t)`, obtained by conjugating the numerical conjugate.
pub fn biconjugate<F: YoungFunction + ?Sized>(phi: &F, x: &[f64], t: f64, tol: f64) -> Result<ConjugateResult> {
    let inner = LocalPhi::Conjugate { inner: Box::new(phi.local(x)?), tol };
    conjugate_local(&inner, t, tol)
}

/// The conjugate as a Young function in its own right, so modulars and norms
/// can be taken with respect to `M*`.
pub struct ConjugateOf<'a, F: YoungFunction + ?Sized> {
    pub phi: &'a F,
    pub tol: f64,
}

impl<'a, F: YoungFunction + ?Sized> ConjugateOf<'a, F> {
    pub fn new(phi: &'a F, tol: f64) -> Self {
        Self { phi, tol }
    }
}

impl<F: YoungFunction + ?Sized> YoungFunction for ConjugateOf<'_, F> {
    fn local(&self, x: &[f64]) -> Result<LocalPhi> {
        Ok(LocalPhi::Conjugate { inner: Box::new(self.phi.local(x)?), tol: self.tol })
    }
}

/// 256 logarithmically spaced probes in `[1e-6, 1e6]`.
pub fn audit_grid() -> Vec<f64> {
    log_space(1e-6, 1e6, 256)
}

/// Smallest `M*(s) − (st − M(t))` over the audit grid. The computed conjugate
/// is a valid supremum estimate when this is not below `−tol·max(1, M*(s))`.
pub fn audit_margin(phi: &LocalPhi, s: f64, tol: f64) -> Result<f64> {
    let value = conjugate_local(phi, s, tol)?.value;
    let mut worst = f64::INFINITY;
    for t in audit_grid() {
        let m = match phi.eval(t) {
            Ok(m) => m,
            Err(Error::Range { .. }) => continue,
            Err(e) => return Err(e),
        };
        worst = worst.min(value - (s * t - m));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungTriple {
    pub x: Vec<f64>,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub passed: bool,
    pub triples: usize,
    pub failures: usize,
    /// Smallest `M(x,u) + M*(x,v) − uv` seen, with its triple.
    pub worst_margin: f64,
    pub worst: Option<YoungTriple>,
}

/// Checks `uv ≤ M(x,u) + M*(x,v)` with slack `tol·max(1, uv)`. Triples where
/// `M(x,u)` overflows hold trivially.
pub fn young_check<F: YoungFunction + ?Sized>(phi: &F, triples: &[YoungTriple], tol: f64) -> Result<YoungReport> {
    let mut report = YoungReport { passed: true, triples: triples.len(), failures: 0, worst_margin: f64::INFINITY, worst: None };
    for triple in triples {
        if triple.u < 0.0 || triple.v < 0.0 {
            return Err(Error::Precondition("Young triples need u, v ≥ 0".into()));
        }
        let local = phi.local(&triple.x)?;
        let m = match local.eval(triple.u) {
            Ok(m) => m,
            Err(Error::Range { .. }) => continue,
            Err(e) => return Err(e),
        };
        let star = conjugate_local(&local, triple.v, DEFAULT_TOL.min(tol))?.value;
        let uv = triple.u * triple.v;
        let margin = m + star - uv;
        if margin < -tol * uv.max(1.0) {
            report.failures += 1;
            report.passed = false;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst = Some(triple.clone());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub passed: bool,
    /// `∫ |uv|`.
    pub lhs: f64,
    pub norm_u: f64,
    pub conjugate_norm_v: f64,
    /// `2 ‖u‖_M ‖v‖_{M*}`.
    pub rhs: f64,
}

/// Checks `∫|uv| ≤ 2‖u‖_M ‖v‖_{M*}` up to a relative `tol`.
pub fn holder_check<F: YoungFunction + ?Sized>(
    phi: &F,
    u: &GridFunction,
    v: &GridFunction,
    tol: f64,
) -> Result<HolderReport> {
    if !u.same_domain(v) {
        return Err(Error::DomainMismatch);
    }
    let domain = u.domain();
    let (uv, vv) = (u.values(), v.values());
    let lhs = par_sum(domain.len(), |i| Ok(domain.weight(i) * (uv[i] * vv[i]).abs()))?;
    let norm_u = luxemburg_norm(phi, u, DEFAULT_TOL)?.value;
    let conjugate_norm_v = luxemburg_norm(&ConjugateOf::new(phi, DEFAULT_TOL), v, DEFAULT_TOL)?.value;
    let rhs = 2.0 * norm_u * conjugate_norm_v;
    Ok(HolderReport { passed: lhs <= rhs * (1.0 + tol), lhs, norm_u, conjugate_norm_v, rhs })
}
