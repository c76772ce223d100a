//! Poincaré-type inequalities for compactly supported functions:
//!
//! * modular: `Σ_{|α|<m} ∫ M(x,|D^α u|) ≤ Σ_{|α|=m} ∫ M(x, c|D^α u|)`,
//! * norm: `Σ_{|α|<m} ‖D^α u‖_M ≤ C Σ_{|α|=m} ‖D^α u‖_M`,
//!
//! with `c = 2d·max(1, 2d)^{m−1}` (`d` the box diameter) and
//! `C = c·(1 + #{|β| = m})`.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::{derivative, make_bump, BumpKind, Domain, GridFunction, MultiIndex};
use crate::error::{Error, Result};
use crate::modular::{ModularSum, NormResult, DEFAULT_TOL as NORM_TOL};
use crate::phi::YoungFunction;

pub const MODULAR_TOL: f64 = 1e-8;
pub const NORM_VERDICT_TOL: f64 = 1e-6;
/// Lower-order derivatives must be at most this fraction of their maximum on
/// the boundary nodes.
const BOUNDARY_TOL: f64 = 1e-12;

/// `c_{m,Ω} = 2d·max(1, 2d)^{m−1}`.
pub fn poincare_constant(domain: &Domain, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Precondition("Poincaré order must be at least 1".into()));
    }
    let step = 2.0 * domain.diameter();
    Ok(step * step.max(1.0).powi(m as i32 - 1))
}

/// `C(m,Ω) = c_{m,Ω}·(1 + #{|β| = m})`.
pub fn norm_constant(domain: &Domain, m: usize) -> Result<f64> {
    let count = MultiIndex::count_of_order(domain.dim(), m);
    Ok(poincare_constant(domain, m)? * (1 + count) as f64)
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularSide {
    pub constant: f64,
    /// `Σ_{|α|<m} ∫ M(x,|D^α u|)`.
    pub lhs: f64,
    /// `Σ_{|α|=m} ∫ M(x, c|D^α u|)`.
    pub rhs: f64,
    pub ratio: f64,
    pub tol: f64,
    pub passed: bool,
}

impl ModularSide {
    fn new(constant: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self { constant, lhs, rhs, ratio: ratio(lhs, rhs), tol, passed: lhs <= rhs * (1.0 + tol) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSide {
    /// `Σ_{|α|<m} ‖D^α u‖`.
    pub lower: f64,
    /// `Σ_{|α|=m} ‖D^α u‖`.
    pub top: f64,
    /// `#{|β| = m}`.
    pub top_count: usize,
    pub constant: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub tol: f64,
    pub passed: bool,
}

impl NormSide {
    fn new(lower: f64, top: f64, top_count: usize, constant: f64, tol: f64) -> Self {
        let rhs = constant * top;
        Self { lower, top, top_count, constant, rhs, ratio: ratio(lower, rhs), tol, passed: lower <= rhs * (1.0 + tol) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub test_function: String,
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modular: Option<ModularSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSide>,
}

impl PoincareReport {
    pub fn passed(&self) -> bool {
        self.modular.as_ref().is_none_or(|s| s.passed) && self.norm.as_ref().is_none_or(|s| s.passed)
    }
}

/// `D^α u` for every `|α| ≤ m`, split into orders below `m` and exactly `m`.
struct Derivatives {
    lower: Vec<GridFunction>,
    top: Vec<GridFunction>,
}

impl Derivatives {
    fn new(u: &GridFunction, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("Poincaré order must be at least 1".into()));
        }
        let dim = u.domain().dim();
        let lower = MultiIndex::up_to_order(dim, m - 1)
            .iter()
            .map(|a| derivative(u, a))
            .collect::<Result<Vec<_>>>()?;
        let top = MultiIndex::of_order(dim, m)
            .iter()
            .map(|a| derivative(u, a))
            .collect::<Result<Vec<_>>>()?;
        for (d, alpha) in lower.iter().zip(MultiIndex::up_to_order(dim, m - 1)) {
            vanishes_on_boundary(d, &alpha)?;
        }
        Ok(Self { lower, top })
    }
}

/// Compact support is required; a function without a compact support
/// certificate is accepted when it vanishes on the boundary nodes.
fn vanishes_on_boundary(d: &GridFunction, alpha: &MultiIndex) -> Result<()> {
    if d.support().compact {
        return Ok(());
    }
    let domain = d.domain();
    let limit = BOUNDARY_TOL * d.max_abs();
    match (0..domain.len()).find(|&i| domain.is_boundary_node(i) && d.values()[i].abs() > limit) {
        None => Ok(()),
        Some(i) => Err(Error::Precondition(format!(
            "D^{alpha} u = {} at boundary node {i}; test functions must vanish on ∂Ω",
            d.values()[i]
        ))),
    }
}

fn sums<F: YoungFunction + ?Sized>(phi: &F, fields: &[GridFunction]) -> Result<Vec<ModularSum>> {
    fields
        .iter()
        .map(|f| ModularSum::new(phi, f.domain(), &[f.values()]))
        .collect()
}

fn modular_side(lower: &[ModularSum], top: &[ModularSum], c: f64, tol: f64) -> Result<ModularSide> {
    let mut lhs = 0.0;
    for s in lower {
        lhs += s.scaled(1.0)?;
    }
    let mut rhs = 0.0;
    for s in top {
        rhs += s.scaled(c)?;
    }
    Ok(ModularSide::new(c, lhs, rhs, tol))
}

/// Solves one norm per derivative; `guesses` warm-start the brackets.
fn norms(sums: &[ModularSum], guesses: Option<&[f64]>) -> Result<Vec<NormResult>> {
    sums.iter()
        .enumerate()
        .map(|(k, s)| match guesses.map(|g| g[k]) {
            Some(g) if g > 0.0 => s.norm_near(NORM_TOL, g),
            _ => s.norm(NORM_TOL),
        })
        .collect()
}

fn norm_side(lower: &[NormResult], top: &[NormResult], domain: &Domain, m: usize, tol: f64) -> Result<NormSide> {
    let l: f64 = lower.iter().map(|n| n.value).sum();
    let t: f64 = top.iter().map(|n| n.value).sum();
    Ok(NormSide::new(l, t, top.len(), norm_constant(domain, m)?, tol))
}

/// Both sides of the modular inequality with `c` defaulting to
/// [`poincare_constant`]; passes iff `LHS ≤ RHS·(1 + tol)`.
pub fn verify_modular_poincare<F: YoungFunction + ?Sized>(
    phi: &F,
    u: &GridFunction,
    id: &str,
    m: usize,
    c: Option<f64>,
    tol: f64,
) -> Result<PoincareReport> {
    let d = Derivatives::new(u, m)?;
    let c = match c {
        Some(c) => c,
        None => poincare_constant(u.domain(), m)?,
    };
    let side = modular_side(&sums(phi, &d.lower)?, &sums(phi, &d.top)?, c, tol)?;
    Ok(PoincareReport { test_function: id.into(), order: m, modular: Some(side), norm: None })
}

/// The norm inequality with `C(m,Ω)`; passes iff it holds with `(1 + tol)` slack.
pub fn verify_norm_poincare<F: YoungFunction + ?Sized>(
    phi: &F,
    u: &GridFunction,
    id: &str,
    m: usize,
    tol: f64,
) -> Result<PoincareReport> {
    let d = Derivatives::new(u, m)?;
    let lower = norms(&sums(phi, &d.lower)?, None)?;
    let top = norms(&sums(phi, &d.top)?, None)?;
    let side = norm_side(&lower, &top, u.domain(), m, tol)?;
    Ok(PoincareReport { test_function: id.into(), order: m, modular: None, norm: Some(side) })
}

/// A tensor bump described in absolute coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub id: String,
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
    pub kind: BumpKind,
}

impl BumpSpec {
    /// Center and half-widths given as fractions of each axis extent.
    pub fn relative(id: &str, domain: &Domain, center: f64, width: f64, kind: BumpKind) -> Self {
        let b = domain.bounds();
        Self {
            id: id.into(),
            center: (0..domain.dim()).map(|a| b.lower[a] + center * b.extent(a)).collect(),
            widths: (0..domain.dim()).map(|a| width * b.extent(a)).collect(),
            kind,
        }
    }

    pub fn build(&self, domain: Arc<Domain>) -> Result<GridFunction> {
        make_bump(domain, &self.center, &self.widths, self.kind)
    }
}

/// Five `smooth_exp` bumps (centered, two off-center, narrow, wide) and two
/// `poly_4` bumps.
pub fn default_family(domain: &Domain) -> Vec<BumpSpec> {
    use BumpKind::{Poly, SmoothExp};
    [
        ("smooth_centered", 0.5, 0.3, SmoothExp),
        ("smooth_left", 0.3, 0.2, SmoothExp),
        ("smooth_right", 0.7, 0.2, SmoothExp),
        ("smooth_narrow", 0.5, 0.08, SmoothExp),
        ("smooth_wide", 0.5, 0.45, SmoothExp),
        ("poly4_centered", 0.5, 0.4, Poly(4)),
        ("poly4_offset", 0.35, 0.25, Poly(4)),
    ]
    .into_iter()
    .map(|(id, c, w, k)| BumpSpec::relative(id, domain, c, w, k))
    .collect()
}

/// `2^lo, …, 2^hi`.
pub fn power_of_two_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

pub fn default_scalings() -> Vec<f64> {
    power_of_two_ladder(-5, 5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub test_function: String,
    pub scaling: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratio of the modular inequality (m = 1) over scaled bumps. Carries no
/// verdict: it is evidence for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub constant: f64,
    pub curve: Vec<CurvePoint>,
    pub sup_ratio: f64,
    pub argmax: Option<CurvePoint>,
}

impl SearchReport {
    /// CSV `scaling,lhs,rhs,ratio` for one test function.
    pub fn write_curve_csv<W: Write>(&self, test_function: &str, mut w: W) -> std::io::Result<()> {
        writeln!(w, "scaling,lhs,rhs,ratio")?;
        for p in self.curve.iter().filter(|p| p.test_function == test_function) {
            writeln!(w, "{:e},{:e},{:e},{:e}", p.scaling, p.lhs, p.rhs, p.ratio)?;
        }
        Ok(())
    }
}

pub fn counterexample_search<F: YoungFunction + ?Sized>(
    phi: &F,
    domain: Arc<Domain>,
    bumps: &[BumpSpec],
    scalings: &[f64],
    c: f64,
) -> Result<SearchReport> {
    let mut curve = Vec::new();
    for spec in bumps {
        let d = Derivatives::new(&spec.build(domain.clone())?, 1)?;
        let (lower, top) = (sums(phi, &d.lower)?, sums(phi, &d.top)?);
        for &s in scalings {
            let lower: Vec<ModularSum> = lower.iter().map(|x| x.rescaled(s)).collect();
            let top: Vec<ModularSum> = top.iter().map(|x| x.rescaled(s)).collect();
            let side = modular_side(&lower, &top, c, 0.0)?;
            curve.push(CurvePoint { test_function: spec.id.clone(), scaling: s, lhs: side.lhs, rhs: side.rhs, ratio: side.ratio });
        }
    }
    let argmax = curve
        .iter()
        .fold(None::<&CurvePoint>, |best, p| match best {
            Some(b) if !(p.ratio > b.ratio) => Some(b),
            _ => Some(p),
        })
        .cloned();
    let sup_ratio = argmax.as_ref().map_or(0.0, |p| p.ratio);
    Ok(SearchReport { constant: c, curve, sup_ratio, argmax })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub phi: String,
    pub test_function: String,
    pub scaling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modular: Option<ModularSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCell {
    pub phi: String,
    pub test_function: String,
    pub scaling: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTiming {
    pub total_seconds: f64,
    /// Seconds per Φ-function, in input order.
    pub per_phi_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub order: usize,
    pub cells: Vec<SweepCell>,
    pub modular_passed: usize,
    pub modular_total: usize,
    pub norm_passed: usize,
    pub norm_total: usize,
    pub errors: usize,
    pub worst_modular: Option<WorstCell>,
    pub worst_norm: Option<WorstCell>,
    /// Wall-clock data, excluded from reproducibility comparisons.
    pub timing: SweepTiming,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.errors == 0 && self.modular_passed == self.modular_total && self.norm_passed == self.norm_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub modular: bool,
    pub norm: bool,
    pub modular_tol: f64,
    pub norm_tol: f64,
    /// Overrides the modular-side constant.
    pub constant: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { modular: true, norm: true, modular_tol: MODULAR_TOL, norm_tol: NORM_VERDICT_TOL, constant: None }
    }
}

/// Runs the modular and/or norm inequality over every
/// (Φ-function, test function, scaling) cell. Failing evaluations are
/// recorded in their cell and never abort the sweep.
pub fn sweep<F: YoungFunction>(
    phis: &[(String, F)],
    domain: Arc<Domain>,
    family: &[BumpSpec],
    scalings: &[f64],
    m: usize,
    options: &SweepOptions,
) -> Result<SweepReport> {
    let c = match options.constant {
        Some(c) => c,
        None => poincare_constant(&domain, m)?,
    };
    let started = Instant::now();
    let mut cells = Vec::new();
    let mut per_phi_seconds = Vec::new();
    let bases: Vec<Result<Derivatives>> = family
        .iter()
        .map(|spec| spec.build(domain.clone()).and_then(|u| Derivatives::new(&u, m)))
        .collect();
    for (name, phi) in phis {
        let phi_started = Instant::now();
        for (spec, base) in family.iter().zip(&bases) {
            let cell = |scaling, modular, norm, error| SweepCell {
                phi: name.clone(),
                test_function: spec.id.clone(),
                scaling,
                modular,
                norm,
                error,
            };
            let prepared = base
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|d| Ok((sums(phi, &d.lower)?, sums(phi, &d.top)?)));
            let (lower, top) = match prepared {
                Ok(p) => p,
                Err(e) => {
                    cells.extend(scalings.iter().map(|&s| cell(s, None, None, Some(e.to_string()))));
                    continue;
                }
            };
            // Norms of the previous scaling, rescaled, seed the next brackets.
            let mut previous: Option<(f64, Vec<f64>, Vec<f64>)> = None;
            for &s in scalings {
                let lower_s: Vec<ModularSum> = lower.iter().map(|x| x.rescaled(s)).collect();
                let top_s: Vec<ModularSum> = top.iter().map(|x| x.rescaled(s)).collect();
                let outcome = (|| -> Result<(Option<ModularSide>, Option<NormSide>)> {
                    let modular = if options.modular {
                        Some(modular_side(&lower_s, &top_s, c, options.modular_tol)?)
                    } else {
                        None
                    };
                    let norm = if options.norm {
                        let guess = |v: &[f64], prev_s: f64| -> Vec<f64> { v.iter().map(|n| n * s / prev_s).collect() };
                        let (gl, gt) = match &previous {
                            Some((ps, l, t)) => (Some(guess(l, *ps)), Some(guess(t, *ps))),
                            None => (None, None),
                        };
                        let ln = norms(&lower_s, gl.as_deref())?;
                        let tn = norms(&top_s, gt.as_deref())?;
                        previous = Some((s, ln.iter().map(|n| n.value).collect(), tn.iter().map(|n| n.value).collect()));
                        Some(norm_side(&ln, &tn, &domain, m, options.norm_tol)?)
                    } else {
                        None
                    };
                    Ok((modular, norm))
                })();
                cells.push(match outcome {
                    Ok((modular, norm)) => cell(s, modular, norm, None),
                    Err(e) => cell(s, None, None, Some(e.to_string())),
                });
            }
        }
        per_phi_seconds.push(phi_started.elapsed().as_secs_f64());
    }

    let worst = |pick: &dyn Fn(&SweepCell) -> Option<f64>| {
        cells
            .iter()
            .filter_map(|c| pick(c).map(|r| (c, r)))
            .fold(None::<(&SweepCell, f64)>, |best, (c, r)| match best {
                Some((b, br)) if !(r > br) => Some((b, br)),
                _ => Some((c, r)),
            })
            .map(|(c, r)| WorstCell { phi: c.phi.clone(), test_function: c.test_function.clone(), scaling: c.scaling, ratio: r })
    };
    let worst_modular = worst(&|c| c.modular.as_ref().map(|s| s.ratio));
    let worst_norm = worst(&|c| c.norm.as_ref().map(|s| s.ratio));
    Ok(SweepReport {
        order: m,
        modular_passed: cells.iter().filter(|c| c.modular.as_ref().is_some_and(|s| s.passed)).count(),
        modular_total: if options.modular { cells.len() } else { 0 },
        norm_passed: cells.iter().filter(|c| c.norm.as_ref().is_some_and(|s| s.passed)).count(),
        norm_total: if options.norm { cells.len() } else { 0 },
        errors: cells.iter().filter(|c| c.error.is_some()).count(),
        worst_modular,
        worst_norm,
        cells,
        timing: SweepTiming { total_seconds: started.elapsed().as_secs_f64(), per_phi_seconds },
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::domain::{Constant, Trig};
    use crate::field::{ExponentField, FieldExpr, WeightField};
    use crate::phi::PhiFunction;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(dim: usize, n: usize) -> Arc<Domain> {
        Arc::new(Domain::unit(dim, n).unwrap())
    }

    fn square() -> PhiFunction {
        PhiFunction::power(2.0).unwrap()
    }

    fn sine(d: &Arc<Domain>) -> GridFunction {
        GridFunction::from_analytic(d.clone(), Arc::new(Trig::dirichlet(d)), None).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(poincare_constant(&Domain::unit(1, 9).unwrap(), 1).unwrap(), 2.0);
        assert_eq!(poincare_constant(&Domain::unit(1, 9).unwrap(), 2).unwrap(), 4.0);
        let square3 = Domain::new(vec![0.0, 0.0], vec![3.0, 3.0], vec![9, 9]).unwrap();
        assert_relative_eq!(poincare_constant(&square3, 1).unwrap(), 6.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(norm_constant(&Domain::unit(1, 9).unwrap(), 1).unwrap(), 4.0);
        assert_relative_eq!(norm_constant(&Domain::unit(2, 9).unwrap(), 1).unwrap(), 3.0 * 2.0 * 2f64.sqrt());
        // Small boxes: the per-step constant is not raised to a power.
        let small = Domain::new(vec![0.0], vec![0.1], vec![9]).unwrap();
        assert_relative_eq!(poincare_constant(&small, 3).unwrap(), 0.2);
        assert!(poincare_constant(&small, 0).is_err());
    }

    #[test]
    fn zero_function_passes_trivially() {
        let d = unit(1, 65);
        let z = GridFunction::zeros(d);
        let r = verify_modular_poincare(&square(), &z, "zero", 1, None, MODULAR_TOL).unwrap();
        let s = r.modular.unwrap();
        assert_eq!((s.lhs, s.rhs, s.ratio), (0.0, 0.0, 0.0));
        assert!(s.passed);
        let n = verify_norm_poincare(&square(), &z, "zero", 1, NORM_VERDICT_TOL).unwrap().norm.unwrap();
        assert_eq!((n.lower, n.rhs), (0.0, 0.0));
        assert!(n.passed);
    }

    #[test]
    fn sine_closed_forms() {
        let d = unit(1, 1025);
        let u = sine(&d);
        let s = verify_modular_poincare(&square(), &u, "sin", 1, Some(2.0), MODULAR_TOL).unwrap().modular.unwrap();
        assert!((s.lhs - 0.5).abs() < 1e-6);
        assert!((s.rhs - 2.0 * PI * PI).abs() < 1e-6);
        assert!((s.ratio - 1.0 / (4.0 * PI * PI)).abs() < 1e-8);
        assert!(s.passed);
        let n = verify_norm_poincare(&square(), &u, "sin", 1, NORM_VERDICT_TOL).unwrap().norm.unwrap();
        assert_relative_eq!(n.lower, 0.5f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(n.top, PI * 0.5f64.sqrt(), max_relative = 1e-9);
        assert_eq!(n.constant, 4.0);
        assert!(n.passed);
    }

    #[test]
    fn functions_not_vanishing_on_the_boundary_are_rejected() {
        let d = unit(1, 33);
        let one = GridFunction::from_analytic(d, Arc::new(Constant(1.0)), None).unwrap();
        assert!(matches!(
            verify_modular_poincare(&square(), &one, "one", 1, None, MODULAR_TOL),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn second_order_inequality() {
        let d = unit(1, 2049);
        let u = make_bump(d, &[0.5], &[0.3], BumpKind::SmoothExp).unwrap();
        let r = verify_modular_poincare(&square(), &u, "bump", 2, None, MODULAR_TOL).unwrap();
        assert_eq!(r.modular.as_ref().unwrap().constant, 4.0);
        assert!(r.passed());
        assert!(verify_norm_poincare(&square(), &u, "bump", 2, NORM_VERDICT_TOL).unwrap().passed());
    }

    #[test]
    fn scaling_consistency_for_constant_exponents() {
        let d = unit(1, 1025);
        let u = make_bump(d, &[0.4], &[0.25], BumpKind::Poly(4)).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let phi = PhiFunction::power(p).unwrap();
            let base = verify_modular_poincare(&phi, &u, "u", 1, None, MODULAR_TOL).unwrap().modular.unwrap().ratio;
            for s in [2f64.powi(-5), 0.3, 7.0, 32.0] {
                let r = verify_modular_poincare(&phi, &u.scaled(s), "su", 1, None, MODULAR_TOL).unwrap().modular.unwrap().ratio;
                assert_relative_eq!(r, base, max_relative = 1e-8);
            }
        }
    }

    fn families(dim: usize) -> Vec<(String, PhiFunction)> {
        let region = crate::domain::AxisBox::new(vec![0.0; dim], vec![1.0; dim]).unwrap();
        let mut g = vec![0.0; dim];
        g[0] = 1.0;
        let p = ExponentField::affine(2.0, g.clone(), region.clone()).unwrap();
        let a = WeightField::new(FieldExpr::Affine { offset: 0.0, gradient: g }, Some(region)).unwrap();
        vec![
            ("square".into(), square()),
            ("variable".into(), PhiFunction::power_variable(p.clone())),
            ("power_log".into(), PhiFunction::power_log(p)),
            ("double_phase".into(), PhiFunction::double_phase(2.0, 3.0, a).unwrap()),
        ]
    }

    #[test]
    fn one_dimensional_sweep_passes() {
        let d = unit(1, 1025);
        let family = default_family(&d);
        assert_eq!(family.len(), 7);
        let r = sweep(&families(1), d, &family, &default_scalings(), 1, &SweepOptions::default()).unwrap();
        assert_eq!(r.cells.len(), 4 * 7 * 11);
        assert_eq!(r.errors, 0);
        assert!(r.passed(), "{:?} {:?}", r.worst_modular, r.worst_norm);
        assert!(r.worst_modular.unwrap().ratio < 1.0);
    }

    #[test]
    fn sweep_norms_match_cold_solves() {
        let d = unit(1, 513);
        let family = default_family(&d)[..2].to_vec();
        let phis = families(1);
        let r = sweep(&phis, d.clone(), &family, &[0.25, 1.0, 4.0], 1, &SweepOptions::default()).unwrap();
        for cell in &r.cells {
            let (_, phi) = phis.iter().find(|(n, _)| *n == cell.phi).unwrap();
            let spec = family.iter().find(|b| b.id == cell.test_function).unwrap();
            let u = spec.build(d.clone()).unwrap().scaled(cell.scaling);
            let cold = verify_norm_poincare(phi, &u, &spec.id, 1, NORM_VERDICT_TOL).unwrap().norm.unwrap();
            let warm = cell.norm.as_ref().unwrap();
            assert_relative_eq!(cold.lower, warm.lower, max_relative = 1e-9);
            assert_relative_eq!(cold.top, warm.top, max_relative = 1e-9);
            let m = verify_modular_poincare(phi, &u, &spec.id, 1, None, MODULAR_TOL).unwrap().modular.unwrap();
            assert_relative_eq!(m.lhs, cell.modular.as_ref().unwrap().lhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn sweep_records_errors_per_cell() {
        let d = unit(1, 257);
        let bad = BumpSpec { id: "escapes".into(), center: vec![0.1], widths: vec![0.3], kind: BumpKind::SmoothExp };
        let family = vec![bad, default_family(&d).remove(0)];
        let r = sweep(&families(1)[..1], d, &family, &[1.0, 2.0], 1, &SweepOptions::default()).unwrap();
        assert_eq!(r.errors, 2);
        assert!(!r.passed());
        assert_eq!(r.modular_passed, 2);
        let empty: Vec<(String, PhiFunction)> = Vec::new();
        let r = sweep(&empty, unit(1, 33), &[], &[1.0], 1, &SweepOptions::default()).unwrap();
        assert!(r.cells.is_empty() && r.passed());
    }

    #[test]
    fn verdicts_are_stable_under_tiny_tolerance_changes() {
        let d = unit(1, 257);
        let family = default_family(&d);
        let strict = SweepOptions { modular_tol: 0.0, norm_tol: 0.0, ..SweepOptions::default() };
        let loose = SweepOptions { modular_tol: 1e-9, norm_tol: 1e-9, ..SweepOptions::default() };
        let a = sweep(&families(1), d.clone(), &family, &default_scalings(), 1, &strict).unwrap();
        let b = sweep(&families(1), d, &family, &default_scalings(), 1, &loose).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            let margin = 1.0 - x.modular.as_ref().unwrap().ratio;
            if margin > 1e-9 {
                assert_eq!(x.modular.as_ref().unwrap().passed, y.modular.as_ref().unwrap().passed);
            }
        }
    }

    #[test]
    fn counterexample_search_reports_curves() {
        let d = unit(1, 1025);
        let family = default_family(&d);
        let scalings = power_of_two_ladder(-10, 10);
        let r = counterexample_search(&square(), d.clone(), &family, &scalings, 2.0).unwrap();
        assert_eq!(r.curve.len(), 7 * 21);
        assert!(r.sup_ratio <= 1.0);
        let doubled = counterexample_search(&square(), d.clone(), &family, &scalings, 4.0).unwrap();
        for (a, b) in r.curve.iter().zip(&doubled.curve) {
            assert!(b.ratio <= a.ratio);
        }
        let p = ExponentField::new(
            FieldExpr::Sinusoid { mean: 2.0, amplitude: 1.0, frequency: 1.0, axis: 0 },
            Some(d.bounds().clone()),
        )
        .unwrap();
        let r = counterexample_search(&PhiFunction::power_variable(p), d, &family, &scalings, 2.0).unwrap();
        assert!(r.sup_ratio.is_finite());
        let mut csv = Vec::new();
        r.write_curve_csv("smooth_narrow", &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("scaling,lhs,rhs,ratio\n"));
        assert_eq!(text.lines().count(), 22);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn rhs_is_monotone_in_c(c1 in 0.1f64..5.0, dc in 0.0f64..5.0, center in 0.3f64..0.7, s in 0.05f64..20.0) {
            let d = unit(1, 257);
            let u = make_bump(d, &[center], &[0.2], BumpKind::SmoothExp).unwrap().scaled(s);
            for (_, phi) in families(1) {
                let a = verify_modular_poincare(&phi, &u, "u", 1, Some(c1), MODULAR_TOL).unwrap().modular.unwrap();
                let b = verify_modular_poincare(&phi, &u, "u", 1, Some(c1 + dc), MODULAR_TOL).unwrap().modular.unwrap();
                prop_assert!(a.rhs <= b.rhs);
                prop_assert_eq!(a.lhs, b.lhs);
            }
        }

        #[test]
        fn generated_bumps_satisfy_the_modular_inequality(
            center in 0.3f64..0.7, width in 0.05f64..0.25, s in 0.01f64..40.0, poly in proptest::bool::ANY,
        ) {
            let d = unit(1, 1025);
            let kind = if poly { BumpKind::Poly(4) } else { BumpKind::SmoothExp };
            let u = make_bump(d, &[center], &[width], kind).unwrap().scaled(s);
            for (_, phi) in families(1) {
                prop_assert!(verify_modular_poincare(&phi, &u, "u", 1, None, MODULAR_TOL).unwrap().passed());
            }
        }
    }
}
