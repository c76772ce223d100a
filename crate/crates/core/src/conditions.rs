//! Sampled checkers for the structural hypotheses on `M`: the domination
//! condition (M1), log-Hölder continuity of `p(·)`, the monotonicity
//! conditions (Y₀)/(Y∞), and local integrability.
//!
//! A pass verdict is a statement about the declared sampling resolution only.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{log_space, AxisBox, Domain};
use crate::error::{Error, Result};
use crate::field::ExponentField;
use crate::phi::{LocalPhi, YoungFunction};
use crate::sum::par_sum;

/// Relative tolerance for equality in monotonicity and domination tests.
pub const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    M1,
    LogHolder,
    Y,
    LocalIntegrability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YForm {
    /// One direction for every `t`.
    YInfinity,
    /// One direction below `t₀`, one at and above it.
    YZero,
}

/// Two sample points at a fixed `t` whose values strictly rise or fall
/// along the checked axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePair {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `M(x,s) > φ(|x−y|,s)·M(y,s)`.
    Domination { x: Vec<f64>, y: Vec<f64>, s: f64, lhs: f64, rhs: f64 },
    /// Largest `φ(ε, cε^{−N})` on the ε ladder.
    Ladder { epsilon: f64, value: f64, growth: f64 },
    /// Worst `|p(x)−p(y)|` against `−C₀/log|x−y|`.
    Modulus { x: Vec<f64>, y: Vec<f64>, lhs: f64, rhs: f64 },
    Monotone { form: YForm, t0: Option<f64>, below: Option<Direction>, above: Direction },
    NonMonotone { rising: Option<MonotonePair>, falling: Option<MonotonePair> },
    Integral { value: f64, max_nodal: f64 },
    Overflow { x: Vec<f64>, t: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_samples: Option<usize>,
    /// Samples dropped because `M` overflowed there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub resolution: Resolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Pairs `(x, y)` with `0 < |x−y| ≤ 1/2`: a lattice of base points, each
/// paired with points at geometrically shrinking offsets along every axis and
/// the main diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSampling {
    pub lattice: usize,
    pub offsets: Vec<f64>,
    /// 0 keeps the lattice; anything else jitters base points reproducibly.
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        Self { lattice: 17, offsets: (1..=20).map(|k| 0.5f64.powi(k)).collect(), seed: 0 }
    }
}

impl PairSampling {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn pairs(&self, region: &AxisBox) -> Vec<(Vec<f64>, Vec<f64>)> {
        let dim = region.dim();
        let n = self.lattice.max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut directions: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        if dim > 1 {
            directions.push(vec![1.0 / (dim as f64).sqrt(); dim]);
        }
        let total = n.pow(dim as u32);
        let mut out = Vec::new();
        let mut idx = vec![0; dim];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..dim).rev() {
                idx[a] = rem % n;
                rem /= n;
            }
            let base: Vec<f64> = (0..dim)
                .map(|a| {
                    let h = region.extent(a) / (n - 1) as f64;
                    let mut c = region.lower[a] + h * idx[a] as f64;
                    if self.seed != 0 {
                        c += rng.gen_range(-0.5..0.5) * h;
                    }
                    c.clamp(region.lower[a], region.upper[a])
                })
                .collect();
            for dir in &directions {
                for &delta in &self.offsets {
                    for sign in [1.0, -1.0] {
                        let y: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + sign * delta * d).collect();
                        let dist = distance(&base, &y);
                        if region.contains(&y, 0.0) && dist > 0.0 && dist <= 0.5 {
                            out.push((base.clone(), y));
                        }
                    }
                }
            }
        }
        out
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Comparison function `φ(τ, s)` of (M1).
#[derive(Clone)]
pub enum Comparison {
    /// `φ ≡ 1`.
    Unit,
    /// `max{s^{σ(τ)}, s^{−σ(τ)}}` with `σ(τ) = −C/log τ`.
    LogHolder { constant: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Unit => write!(f, "Unit"),
            Comparison::LogHolder { constant } => write!(f, "LogHolder({constant})"),
            Comparison::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Comparison {
    pub fn eval(&self, tau: f64, s: f64) -> f64 {
        match self {
            Comparison::Unit => 1.0,
            Comparison::LogHolder { constant } => {
                if tau == 0.0 {
                    return 1.0;
                }
                let sigma = -constant / tau.ln();
                s.powf(sigma).max(s.powf(-sigma))
            }
            Comparison::Custom(f) => f(tau, s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct M1Options {
    pub pairs: PairSampling,
    pub s_ladder: Vec<f64>,
    pub epsilon_ladder: Vec<f64>,
    /// Ladder values above this bound fail.
    pub cap: f64,
    /// Relative growth over the last ladder step above which a bounded
    /// ladder is reported inconclusive.
    pub growth_tol: f64,
}

impl Default for M1Options {
    fn default() -> Self {
        Self {
            pairs: PairSampling::default(),
            s_ladder: log_space(1e-6, 1e6, 49),
            epsilon_ladder: (3..=20).map(|k| 0.5f64.powi(k)).collect(),
            cap: 1e6,
            growth_tol: 1e-2,
        }
    }
}

/// Evaluates the (M1) domination at one sample. `None` when it holds or when
/// `M` overflows; otherwise `(M(x,s), φ(|x−y|,s)·M(y,s))`.
pub fn m1_violation<F: YoungFunction + ?Sized>(
    phi: &F,
    comparison: &Comparison,
    x: &[f64],
    y: &[f64],
    s: f64,
) -> Result<Option<(f64, f64)>> {
    let (lx, ly) = (phi.local(x)?, phi.local(y)?);
    Ok(match domination(&lx, &ly, comparison.eval(distance(x, y), s), s)? {
        Sample::Violated(l, r) => Some((l, r)),
        _ => None,
    })
}

enum Sample {
    Holds,
    Violated(f64, f64),
    Skipped,
}

fn domination(lx: &LocalPhi, ly: &LocalPhi, factor: f64, s: f64) -> Result<Sample> {
    let (mx, my) = match (lx.eval(s), ly.eval(s)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::Range { .. }), _) | (_, Err(Error::Range { .. })) => return Ok(Sample::Skipped),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let rhs = factor * my;
    Ok(if mx > rhs * (1.0 + EQUALITY_TOL) { Sample::Violated(mx, rhs) } else { Sample::Holds })
}

/// (M1): `M(x,s) ≤ φ(|x−y|,s)·M(y,s)` on sampled `(x, y, s)`, and
/// boundedness of `φ(ε, cε^{−N})` as `ε → 0⁺`.
pub fn check_m1<F: YoungFunction + ?Sized>(
    phi: &F,
    comparison: &Comparison,
    c: f64,
    region: &AxisBox,
    options: &M1Options,
) -> Result<ConditionReport> {
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("(M1) constant c must be positive (got {c})")));
    }
    let pairs = options.pairs.pairs(region);
    let mut resolution = Resolution {
        pairs: Some(pairs.len()),
        s_samples: Some(options.s_ladder.len()),
        epsilon_samples: Some(options.epsilon_ladder.len()),
        ..Resolution::default()
    };
    let report = |verdict, witness, resolution, note: Option<String>| ConditionReport {
        condition: Condition::M1,
        verdict,
        witness,
        resolution,
        note,
    };

    // φ(·, s) must be nondecreasing in τ.
    let taus = log_space(0.5f64.powi(20), 0.5, 21);
    for &s in &options.s_ladder {
        for w in taus.windows(2) {
            let (a, b) = (comparison.eval(w[0], s), comparison.eval(w[1], s));
            if b < a * (1.0 - EQUALITY_TOL) {
                let note = format!("φ(·, {s}) decreases between τ = {} and τ = {}", w[0], w[1]);
                return Ok(report(Verdict::Inconclusive, None, resolution, Some(note)));
            }
        }
    }

    let per_pair: Vec<(Option<Witness>, f64, usize)> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<(Option<Witness>, f64, usize)> {
            let (lx, ly) = (phi.local(x)?, phi.local(y)?);
            let tau = distance(x, y);
            let mut worst: (Option<Witness>, f64) = (None, 1.0);
            let mut skipped = 0;
            for &s in &options.s_ladder {
                match domination(&lx, &ly, comparison.eval(tau, s), s)? {
                    Sample::Holds => {}
                    Sample::Skipped => skipped += 1,
                    Sample::Violated(lhs, rhs) => {
                        let ratio = lhs / rhs;
                        if ratio > worst.1 || worst.0.is_none() {
                            worst = (Some(Witness::Domination { x: x.clone(), y: y.clone(), s, lhs, rhs }), ratio);
                        }
                    }
                }
            }
            Ok((worst.0, worst.1, skipped))
        })
        .collect::<Result<_>>()?;
    resolution.skipped = Some(per_pair.iter().map(|p| p.2).sum());
    let mut worst: Option<(Witness, f64)> = None;
    for (w, ratio, _) in per_pair {
        if let Some(w) = w {
            if worst.as_ref().is_none_or(|(_, r)| ratio > *r) {
                worst = Some((w, ratio));
            }
        }
    }
    if let Some((w, _)) = worst {
        return Ok(report(Verdict::Fail, Some(w), resolution, None));
    }

    let n = region.dim() as i32;
    let ladder: Vec<(f64, f64)> = options
        .epsilon_ladder
        .iter()
        .map(|&e| (e, comparison.eval(e, c * e.powi(-n))))
        .collect();
    let growth = match ladder.as_slice() {
        [.., (_, a), (_, b)] => b / a,
        _ => 1.0,
    };
    let (epsilon, value) = ladder
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |m, (e, v)| if !(v <= m.1) { (e, v) } else { m });
    let witness = Some(Witness::Ladder { epsilon, value, growth });
    let verdict = if !value.is_finite() || value > options.cap {
        Verdict::Fail
    } else if growth > 1.0 + options.growth_tol {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(report(verdict, witness, resolution, None))
}

/// `(|p(x)−p(y)|, −C₀/log|x−y|)`.
pub fn log_holder_sides(p: &ExponentField, c0: f64, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let lhs = (p.eval(x)? - p.eval(y)?).abs();
    Ok((lhs, -c0 / distance(x, y).ln()))
}

/// `|p(x)−p(y)| ≤ −C₀/log|x−y|` on sampled pairs; the witness is the pair
/// with the largest ratio of the two sides.
pub fn check_log_holder(p: &ExponentField, c0: f64, region: &AxisBox, sampling: &PairSampling) -> Result<ConditionReport> {
    if !(c0 > 0.0) {
        return Err(Error::Precondition(format!("log-Hölder constant must be positive (got {c0})")));
    }
    let pairs = sampling.pairs(region);
    let sides: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(x, y)| log_holder_sides(p, c0, x, y))
        .collect::<Result<_>>()?;
    let mut worst: Option<(usize, f64)> = None;
    for (i, (lhs, rhs)) in sides.iter().enumerate() {
        let ratio = lhs / rhs;
        if worst.is_none_or(|(_, r)| ratio > r) {
            worst = Some((i, ratio));
        }
    }
    let verdict = match worst {
        Some((_, r)) if r > 1.0 + EQUALITY_TOL => Verdict::Fail,
        _ => Verdict::Pass,
    };
    let witness = worst.map(|(i, _)| Witness::Modulus {
        x: pairs[i].0.clone(),
        y: pairs[i].1.clone(),
        lhs: sides[i].0,
        rhs: sides[i].1,
    });
    Ok(ConditionReport {
        condition: Condition::LogHolder,
        verdict,
        witness,
        resolution: Resolution { pairs: Some(pairs.len()), ..Resolution::default() },
        note: None,
    })
}

#[derive(Debug, Clone)]
pub struct YSampling {
    /// Nodes on the checked segment.
    pub nodes: usize,
    /// Grid points per other axis.
    pub coarse: usize,
    pub t_ladder: Vec<f64>,
}

impl Default for YSampling {
    fn default() -> Self {
        Self { nodes: 257, coarse: 9, t_ladder: log_space(1e-4, 1e4, 64) }
    }
}

/// Monotonicity of `xᵢ ↦ M(x, t)` at one `t`, over every line.
struct TClass {
    rising: Option<MonotonePair>,
    falling: Option<MonotonePair>,
}

impl TClass {
    fn up_ok(&self) -> bool {
        self.falling.is_none()
    }
    fn down_ok(&self) -> bool {
        self.rising.is_none()
    }
    fn fits(&self, d: Direction) -> bool {
        match d {
            Direction::Nondecreasing => self.up_ok(),
            Direction::Nonincreasing => self.down_ok(),
            Direction::Constant => self.up_ok() && self.down_ok(),
        }
    }
}

/// `+1` if `b` exceeds `a` beyond the equality tolerance, `−1` if below, else 0.
fn step_sign(a: f64, b: f64) -> i8 {
    let slack = EQUALITY_TOL * a.abs().max(b.abs());
    if b > a + slack {
        1
    } else if b < a - slack {
        -1
    } else {
        0
    }
}

/// Re-evaluates a monotonicity witness: `Some(+1)` if `M(·,t)` strictly rises
/// from `x` to `y`, `Some(−1)` if it strictly falls, `None` if equal within tolerance.
pub fn pair_direction<F: YoungFunction + ?Sized>(phi: &F, pair: &MonotonePair) -> Result<Option<i8>> {
    let a = phi.value(&pair.x, pair.t)?;
    let b = phi.value(&pair.y, pair.t)?;
    Ok(match step_sign(a, b) {
        0 => None,
        s => Some(s),
    })
}

struct YLines {
    lines: Vec<Vec<Vec<f64>>>,
}

impl YLines {
    fn new(region: &AxisBox, axis: usize, segment: (f64, f64), sampling: &YSampling) -> Self {
        let dim = region.dim();
        let n = sampling.nodes.max(2);
        let along: Vec<f64> = (0..n)
            .map(|k| if k + 1 == n { segment.1 } else { segment.0 + (segment.1 - segment.0) * k as f64 / (n - 1) as f64 })
            .collect();
        let others: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
        let m = sampling.coarse.max(2);
        let count = m.pow(others.len() as u32);
        let lines = (0..count)
            .map(|flat| {
                let mut base = vec![0.0; dim];
                let mut rem = flat;
                for &a in others.iter().rev() {
                    let k = rem % m;
                    rem /= m;
                    base[a] = region.lower[a] + region.extent(a) * k as f64 / (m - 1) as f64;
                    if k + 1 == m {
                        base[a] = region.upper[a];
                    }
                }
                along
                    .iter()
                    .map(|&v| {
                        let mut x = base.clone();
                        x[axis] = v;
                        x
                    })
                    .collect()
            })
            .collect();
        Self { lines }
    }

    fn locals<F: YoungFunction + ?Sized>(&self, phi: &F) -> Result<Vec<Vec<LocalPhi>>> {
        self.lines
            .iter()
            .map(|line| line.iter().map(|x| phi.local(x)).collect())
            .collect()
    }

    fn classify(&self, locals: &[Vec<LocalPhi>], t: f64) -> Result<TClass> {
        let mut class = TClass { rising: None, falling: None };
        for (line, local) in self.lines.iter().zip(locals) {
            let values: Vec<f64> = local.iter().map(|m| m.eval(t)).collect::<Result<_>>()?;
            for k in 0..values.len() - 1 {
                let pair = || MonotonePair {
                    t,
                    x: line[k].clone(),
                    y: line[k + 1].clone(),
                    values: [values[k], values[k + 1]],
                };
                match step_sign(values[k], values[k + 1]) {
                    1 if class.rising.is_none() => class.rising = Some(pair()),
                    -1 if class.falling.is_none() => class.falling = Some(pair()),
                    _ => {}
                }
            }
            if class.rising.is_some() && class.falling.is_some() {
                break;
            }
        }
        Ok(class)
    }
}

fn uniform(classes: &[TClass]) -> Option<Direction> {
    let up = classes.iter().all(TClass::up_ok);
    let down = classes.iter().all(TClass::down_ok);
    match (up, down) {
        (true, true) => Some(Direction::Constant),
        (true, false) => Some(Direction::Nondecreasing),
        (false, true) => Some(Direction::Nonincreasing),
        (false, false) => None,
    }
}

/// (Y∞)/(Y₀) along `axis` on `segment`, with the remaining coordinates swept
/// over a coarse grid of `region`.
///
/// (Y∞) passes when one monotonicity direction holds for every sampled `t`.
/// Otherwise (Y₀) passes when the ladder splits into a lower part with one
/// uniform direction and an upper part with another; without a supplied `t₀`
/// the split point is refined by bisection between the bracketing ladder values.
pub fn check_y<F: YoungFunction + ?Sized>(
    phi: &F,
    region: &AxisBox,
    axis: usize,
    segment: (f64, f64),
    t0: Option<f64>,
    sampling: &YSampling,
) -> Result<ConditionReport> {
    if axis >= region.dim() {
        return Err(Error::Precondition(format!("axis {axis} outside a {}-dimensional box", region.dim())));
    }
    let (a, b) = segment;
    if !(a < b) || a < region.lower[axis] || b > region.upper[axis] {
        return Err(Error::Precondition(format!("segment [{a}, {b}] must lie within the box along axis {axis}")));
    }
    if sampling.t_ladder.is_empty() || sampling.t_ladder.windows(2).any(|w| !(w[0] < w[1] && w[0] > 0.0)) {
        return Err(Error::Precondition("t ladder must be positive and increasing".into()));
    }
    let lines = YLines::new(region, axis, segment, sampling);
    let locals = lines.locals(phi)?;
    let classes: Vec<TClass> = sampling
        .t_ladder
        .par_iter()
        .map(|&t| lines.classify(&locals, t))
        .collect::<Result<_>>()?;
    let resolution = Resolution {
        nodes: Some(sampling.nodes.max(2)),
        lines: Some(lines.lines.len()),
        t_samples: Some(classes.len()),
        ..Resolution::default()
    };
    let done = |verdict, witness| ConditionReport { condition: Condition::Y, verdict, witness: Some(witness), resolution: resolution.clone(), note: None };

    if let Some(d) = uniform(&classes) {
        return Ok(done(Verdict::Pass, Witness::Monotone { form: YForm::YInfinity, t0: None, below: None, above: d }));
    }

    let ladder = &sampling.t_ladder;
    let split = match t0 {
        Some(t0) => {
            let k = ladder.partition_point(|&t| t < t0);
            match (uniform(&classes[..k]), uniform(&classes[k..])) {
                (Some(lo), Some(hi)) => Some((t0, lo, hi)),
                _ => None,
            }
        }
        None => match (1..classes.len()).find_map(|k| match (uniform(&classes[..k]), uniform(&classes[k..])) {
            (Some(lo), Some(hi)) => Some((k, lo, hi)),
            _ => None,
        }) {
            Some((k, lo, hi)) => Some((refine_t0(&lines, &locals, ladder[k - 1], ladder[k], lo, hi)?, lo, hi)),
            None => None,
        },
    };
    if let Some((t0, below, above)) = split {
        return Ok(done(Verdict::Pass, Witness::Monotone { form: YForm::YZero, t0: Some(t0), below: Some(below), above }));
    }

    let both = classes.iter().find(|c| c.rising.is_some() && c.falling.is_some());
    let (rising, falling) = match both {
        Some(c) => (c.rising.clone(), c.falling.clone()),
        None => (
            classes.iter().find_map(|c| c.rising.clone()),
            classes.iter().find_map(|c| c.falling.clone()),
        ),
    };
    Ok(done(Verdict::Fail, Witness::NonMonotone { rising, falling }))
}

/// Narrows the split between `lo` (lower regime) and `hi` (upper regime) by
/// geometric bisection; returns the smallest `t` known to be in the upper regime.
fn refine_t0(
    lines: &YLines,
    locals: &[Vec<LocalPhi>],
    mut lo: f64,
    mut hi: f64,
    below: Direction,
    above: Direction,
) -> Result<f64> {
    for _ in 0..200 {
        if hi / lo - 1.0 <= 1e-14 {
            break;
        }
        let mid = (lo * hi).sqrt();
        let class = lines.classify(locals, mid)?;
        let (up, down) = (class.fits(above), class.fits(below));
        if up && down {
            return Ok(mid);
        } else if up {
            hi = mid;
        } else if down {
            lo = mid;
        } else {
            break;
        }
    }
    Ok(hi)
}

/// `∫_K M(x, c) dx` by trapezoidal quadrature with `nodes` points per axis.
/// Passes when every nodal value and the sum are finite; overflow is
/// inconclusive since it may be an artifact of double precision.
pub fn check_local_integrability<F: YoungFunction + ?Sized>(
    phi: &F,
    c: f64,
    region: &AxisBox,
    nodes: usize,
) -> Result<ConditionReport> {
    if !(c >= 0.0) || c.is_infinite() {
        return Err(Error::Precondition(format!("integrability level must be finite and non-negative (got {c})")));
    }
    let grid = Domain::new(region.lower.clone(), region.upper.clone(), vec![nodes.max(2); region.dim()])?;
    let resolution = Resolution { nodes: Some(nodes.max(2)), ..Resolution::default() };
    let values: Vec<std::result::Result<f64, Vec<f64>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            match phi.value(&x, c) {
                Ok(v) => Ok(Ok(v)),
                Err(Error::Range { .. }) => Ok(Err(x)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    if let Some(x) = values.iter().find_map(|v| v.clone().err()) {
        return Ok(ConditionReport {
            condition: Condition::LocalIntegrability,
            verdict: Verdict::Inconclusive,
            witness: Some(Witness::Overflow { x, t: c }),
            resolution,
            note: Some("M(x, c) overflows double precision".into()),
        });
    }
    let nodal: Vec<f64> = values.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    let value = par_sum(grid.len(), |i| Ok(grid.weight(i) * nodal[i]))?;
    let max_nodal = nodal.iter().fold(0.0f64, |m, v| m.max(*v));
    let verdict = if value.is_finite() { Verdict::Pass } else { Verdict::Inconclusive };
    Ok(ConditionReport {
        condition: Condition::LocalIntegrability,
        verdict,
        witness: Some(Witness::Integral { value, max_nodal }),
        resolution,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldExpr, WeightField};
    use crate::phi::PhiFunction;
    use proptest::prelude::*;

    fn unit_box(dim: usize) -> AxisBox {
        AxisBox::new(vec![0.0; dim], vec![1.0; dim]).unwrap()
    }

    fn linear_p(dim: usize) -> ExponentField {
        let mut g = vec![0.0; dim];
        g[0] = 1.0;
        ExponentField::affine(2.0, g, unit_box(dim)).unwrap()
    }

    fn sine_p(dim: usize) -> ExponentField {
        ExponentField::new(
            FieldExpr::Sinusoid { mean: 2.0, amplitude: 1.0, frequency: 1.0, axis: 0 },
            Some(unit_box(dim)),
        )
        .unwrap()
    }

    fn jump_p(dim: usize) -> ExponentField {
        ExponentField::new(FieldExpr::Step { axis: 0, at: 0.5, below: 2.0, above: 3.0 }, Some(unit_box(dim))).unwrap()
    }

    fn orlicz() -> PhiFunction {
        PhiFunction::orlicz("t ln(1+t) + t^2", Arc::new(|t: f64| t * t.ln_1p() + t * t))
    }

    #[test]
    fn pairs_respect_distance_and_box() {
        for dim in [1, 2] {
            for seed in [0, 7] {
                let pairs = PairSampling::with_seed(seed).pairs(&unit_box(dim));
                assert!(!pairs.is_empty());
                for (x, y) in &pairs {
                    let d = distance(x, y);
                    assert!(d > 0.0 && d <= 0.5);
                    assert!(unit_box(dim).contains(x, 0.0) && unit_box(dim).contains(y, 0.0));
                }
            }
        }
        let a = PairSampling::with_seed(3).pairs(&unit_box(2));
        assert_eq!(a, PairSampling::with_seed(3).pairs(&unit_box(2)));
        assert_ne!(a, PairSampling::with_seed(0).pairs(&unit_box(2)));
    }

    #[test]
    fn m1_orlicz_with_unit_comparison_passes() {
        for dim in [1, 2] {
            let r = check_m1(&orlicz(), &Comparison::Unit, 1.0, &unit_box(dim), &M1Options::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn m1_log_holder_comparison_passes() {
        for dim in [1, 2] {
            let phi = PhiFunction::power_variable(linear_p(dim));
            let r = check_m1(&phi, &Comparison::LogHolder { constant: 1.0 }, 1.0, &unit_box(dim), &M1Options::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
            match r.witness {
                Some(Witness::Ladder { value, .. }) => assert!((value - (dim as f64).exp()).abs() < 1e-9),
                w => panic!("{w:?}"),
            }
        }
    }

    #[test]
    fn m1_jump_exponent_fails_reproducibly() {
        let phi = PhiFunction::power_variable(jump_p(1));
        let cmp = Comparison::LogHolder { constant: 1.0 };
        let r = check_m1(&phi, &cmp, 1.0, &unit_box(1), &M1Options::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let Some(Witness::Domination { x, y, s, lhs, rhs }) = r.witness else { panic!() };
        assert!((x[0] - 0.5) * (y[0] - 0.5) <= 0.0, "pair {x:?} {y:?} does not straddle the jump");
        assert!(s >= 1e5 || s <= 1e-5, "{s}");
        assert_eq!(m1_violation(&phi, &cmp, &x, &y, s).unwrap(), Some((lhs, rhs)));
    }

    #[test]
    fn m1_unbounded_ladder_fails_and_slow_growth_is_inconclusive() {
        let phi = orlicz();
        let linear = Comparison::Custom(Arc::new(|_, s: f64| s.max(1.0)));
        let r = check_m1(&phi, &linear, 1.0, &unit_box(1), &M1Options::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(matches!(r.witness, Some(Witness::Ladder { .. })));
        let slow = Comparison::Custom(Arc::new(|_, s: f64| 1.0 + s.max(1.0).ln()));
        let r = check_m1(&phi, &slow, 1.0, &unit_box(1), &M1Options::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn log_holder_examples() {
        let sampling = PairSampling::default();
        for dim in [1, 2] {
            let constant = ExponentField::constant(2.5).unwrap();
            let r = check_log_holder(&constant, 1e-3, &unit_box(dim), &sampling).unwrap();
            assert_eq!(r.verdict, Verdict::Pass);
            let r = check_log_holder(&linear_p(dim), 1.0, &unit_box(dim), &sampling).unwrap();
            assert_eq!(r.verdict, Verdict::Pass);
            let Some(Witness::Modulus { lhs, rhs, .. }) = r.witness else { panic!() };
            // Worst ratio is τ·ln(1/τ), at most 1/e.
            assert!(lhs / rhs <= (-1.0f64).exp() + 1e-12);
            let r = check_log_holder(&jump_p(dim), 1.0, &unit_box(dim), &sampling).unwrap();
            assert_eq!(r.verdict, Verdict::Fail);
            let Some(Witness::Modulus { x, y, lhs, rhs }) = r.witness else { panic!() };
            assert_eq!(lhs, 1.0);
            assert!((x[0] - 0.5) * (y[0] - 0.5) <= 0.0);
            assert!(distance(&x, &y) <= 1e-5);
            assert_eq!(log_holder_sides(&jump_p(dim), 1.0, &x, &y).unwrap(), (lhs, rhs));
        }
    }

    #[test]
    fn y_zero_for_monotone_exponent() {
        for dim in [1, 2] {
            let phi = PhiFunction::power_variable(linear_p(dim));
            let r = check_y(&phi, &unit_box(dim), 0, (0.0, 1.0), None, &YSampling::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass);
            let Some(Witness::Monotone { form, t0, below, above }) = r.witness else { panic!() };
            assert_eq!(form, YForm::YZero);
            assert!((t0.unwrap() - 1.0).abs() < 1e-9, "{t0:?}");
            assert_eq!(below, Some(Direction::Nonincreasing));
            assert_eq!(above, Direction::Nondecreasing);
            let given = check_y(&phi, &unit_box(dim), 0, (0.0, 1.0), Some(1.0), &YSampling::default()).unwrap();
            assert_eq!(given.verdict, Verdict::Pass);
            let wrong = check_y(&phi, &unit_box(dim), 0, (0.0, 1.0), Some(10.0), &YSampling::default()).unwrap();
            assert_eq!(wrong.verdict, Verdict::Fail);
        }
    }

    #[test]
    fn y_infinity_for_double_phase_and_orlicz() {
        let a = WeightField::new(FieldExpr::Affine { offset: 0.0, gradient: vec![1.0, 0.0] }, Some(unit_box(2))).unwrap();
        let phi = PhiFunction::double_phase(2.0, 3.0, a).unwrap();
        let r = check_y(&phi, &unit_box(2), 0, (0.0, 1.0), None, &YSampling::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(matches!(r.witness, Some(Witness::Monotone { form: YForm::YInfinity, above: Direction::Nondecreasing, .. })));
        for axis in 0..2 {
            let r = check_y(&orlicz(), &unit_box(2), axis, (0.0, 1.0), None, &YSampling::default()).unwrap();
            assert!(matches!(r.witness, Some(Witness::Monotone { form: YForm::YInfinity, above: Direction::Constant, .. })));
        }
        // Along an axis the weight does not depend on, M is constant.
        let r = check_y(&phi, &unit_box(2), 1, (0.0, 1.0), None, &YSampling::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn y_fails_for_interior_extremum_with_reproducible_witness() {
        let phi = PhiFunction::power_variable(sine_p(1));
        let r = check_y(&phi, &unit_box(1), 0, (0.0, 1.0), None, &YSampling::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let Some(Witness::NonMonotone { rising: Some(up), falling: Some(down) }) = r.witness else { panic!() };
        assert_eq!(up.t, down.t);
        assert_eq!(pair_direction(&phi, &up).unwrap(), Some(1));
        assert_eq!(pair_direction(&phi, &down).unwrap(), Some(-1));
        assert_eq!(phi.value(&up.x, up.t).unwrap(), up.values[0]);
    }

    #[test]
    fn refinement_preserves_failures() {
        let cases = [
            PhiFunction::power_variable(sine_p(1)),
            PhiFunction::power_variable(ExponentField::new(
                FieldExpr::Sinusoid { mean: 2.5, amplitude: 0.5, frequency: 2.0, axis: 0 },
                Some(unit_box(1)),
            ).unwrap()),
        ];
        for phi in cases {
            for nodes in [65, 129, 257] {
                let sampling = YSampling { nodes, ..YSampling::default() };
                let r = check_y(&phi, &unit_box(1), 0, (0.0, 1.0), None, &sampling).unwrap();
                assert_eq!(r.verdict, Verdict::Fail, "{nodes}");
            }
        }
    }

    #[test]
    fn y_rejects_bad_segments() {
        let phi = orlicz();
        assert!(check_y(&phi, &unit_box(1), 0, (0.0, 2.0), None, &YSampling::default()).is_err());
        assert!(check_y(&phi, &unit_box(1), 1, (0.0, 1.0), None, &YSampling::default()).is_err());
    }

    #[test]
    fn integrability_examples() {
        let k = unit_box(1);
        let phi = PhiFunction::power_variable(linear_p(1));
        let r = check_local_integrability(&phi, 1.0, &k, 257).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = check_local_integrability(&phi, 0.0, &k, 257).unwrap();
        assert_eq!(r.witness, Some(Witness::Integral { value: 0.0, max_nodal: 0.0 }));
        let exp = PhiFunction::exp_power(ExponentField::new(
            FieldExpr::Affine { offset: 1.5, gradient: vec![0.5] },
            Some(k.clone()),
        ).unwrap());
        let r = check_local_integrability(&exp, 10.0, &k, 257).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let Some(Witness::Integral { max_nodal, .. }) = r.witness else { panic!() };
        assert!((max_nodal - 100f64.exp_m1()).abs() <= 1e-12 * max_nodal);
        let r = check_local_integrability(&exp, 1e3, &k, 33).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(matches!(r.witness, Some(Witness::Overflow { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn log_holder_is_symmetric(x in 0.0f64..1.0, y in 0.0f64..1.0, c0 in 0.1f64..3.0) {
            prop_assume!(x != y && (x - y).abs() <= 0.5);
            for p in [linear_p(1), sine_p(1), jump_p(1)] {
                prop_assert_eq!(log_holder_sides(&p, c0, &[x], &[y]).unwrap(), log_holder_sides(&p, c0, &[y], &[x]).unwrap());
            }
        }

        #[test]
        fn x_independent_functions_satisfy_y_infinity(axis in 0usize..2, scale in 0.1f64..10.0) {
            let phi = PhiFunction::orlicz("scaled square", Arc::new(move |t: f64| scale * t * t));
            let sampling = YSampling { nodes: 33, coarse: 3, ..YSampling::default() };
            let r = check_y(&phi, &unit_box(2), axis, (0.0, 1.0), None, &sampling).unwrap();
            prop_assert_eq!(r.verdict, Verdict::Pass);
            let is_y_infinity = matches!(r.witness, Some(Witness::Monotone { form: YForm::YInfinity, .. }));
            prop_assert!(is_y_infinity);
        }
    }
}
