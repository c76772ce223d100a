//! Human-readable summary of a resolved configuration.

use std::collections::BTreeSet;
use std::fmt::Write;

use musielak::poincare::poincare_constant;
use musielak::MultiIndex;

use crate::config::Resolved;

const INTEGER_TOL: f64 = 1e-12;

fn as_integer(v: f64) -> Option<u64> {
    let r = v.round();
    ((v - r).abs() <= INTEGER_TOL * r.max(1.0) && r >= 1.0 && r < 2f64.powi(52)).then_some(r as u64)
}

/// `√s = k√r` with `r` square-free.
fn simplify_sqrt(s: u64) -> (u64, u64) {
    let (mut k, mut r) = (1, s);
    let mut f = 2;
    while f * f <= r {
        while r % (f * f) == 0 {
            r /= f * f;
            k *= f;
        }
        f += 1;
    }
    (k, r)
}

fn decimal(v: f64) -> String {
    match as_integer(v) {
        Some(n) => n.to_string(),
        None => format!("{v:.6}"),
    }
}

/// `c_{m,Ω} = 2d·max(1, 2d)^{m−1}` as an exact radical when the squared
/// diameter is an integer, otherwise as a decimal.
fn format_constant(squared_diameter: f64, m: usize, value: f64) -> String {
    let exact = as_integer(squared_diameter).and_then(|s| {
        // s ≥ 1, so 2d ≥ 1 and the constant is (2d)^m = 2^m s^{m/2}.
        let e = m as u32;
        let (k, r) = simplify_sqrt(s);
        let mut coeff = 2u64.checked_pow(e)?.checked_mul(s.checked_pow(e / 2)?)?;
        let mut radical = 1;
        if e % 2 == 1 {
            coeff = coeff.checked_mul(k)?;
            radical = r;
        }
        Some((coeff, radical))
    });
    match exact {
        Some((coeff, 1)) => format!("{coeff}"),
        Some((coeff, radical)) => {
            let lead = if coeff == 1 { String::new() } else { coeff.to_string() };
            format!("{lead}√{radical} ≈ {value:.6}")
        }
        None => decimal(value),
    }
}

pub fn describe(resolved: &Resolved) -> String {
    let domain = &resolved.domain;
    let b = domain.bounds();
    let mut out = String::new();
    let dim = domain.dim();
    let interval = |a: usize| format!("[{}, {}]", b.lower[a], b.upper[a]);
    let boxes: Vec<String> = (0..dim).map(interval).collect();
    writeln!(out, "domain: d = {dim}, Ω = {}", boxes.join(" × ")).unwrap();
    let nodes: Vec<String> = domain.nodes().iter().map(|n| n.to_string()).collect();
    let spacing: Vec<String> = domain.spacing().iter().map(|h| format!("{h:e}")).collect();
    writeln!(out, "nodes: {} (h = {})", nodes.join(" × "), spacing.join(", ")).unwrap();
    writeln!(out, "diameter: {:.6}", domain.diameter()).unwrap();

    if resolved.phis.is_empty() {
        writeln!(out, "Φ-functions: none").unwrap();
    } else {
        writeln!(out, "Φ-functions:").unwrap();
        for (id, phi) in &resolved.phis {
            writeln!(out, "  {id}: {}", phi.describe()).unwrap();
        }
    }
    let t = &resolved.config.tolerances;
    writeln!(out, "tolerances: solver {:e}, modular {:e}, norm {:e}", t.solver, t.modular, t.norm).unwrap();

    let mut orders: BTreeSet<usize> = resolved.config.tasks.iter().filter_map(|t| t.kind.order()).collect();
    orders.insert(1);
    let squared: f64 = (0..dim).map(|a| b.extent(a).powi(2)).sum();
    for m in orders {
        let c = poincare_constant(domain, m).expect("orders are positive");
        let count = MultiIndex::count_of_order(dim, m);
        let big = c * (1 + count) as f64;
        writeln!(
            out,
            "order m = {m}: c = {}; #{{|β|={m}}} = {count}, C = c·{} = {}",
            format_constant(squared, m, c),
            1 + count,
            decimal(big)
        )
        .unwrap();
    }

    if resolved.config.tasks.is_empty() {
        writeln!(out, "tasks: none").unwrap();
    } else {
        writeln!(out, "tasks:").unwrap();
        for (task, name) in resolved.config.tasks.iter().zip(&resolved.names) {
            writeln!(out, "  {name} ({})", task.kind.label()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radicals_are_simplified() {
        assert_eq!(simplify_sqrt(2), (1, 2));
        assert_eq!(simplify_sqrt(8), (2, 2));
        assert_eq!(simplify_sqrt(18), (3, 2));
        assert_eq!(simplify_sqrt(9), (3, 1));
    }

    #[test]
    fn constants_render_exactly_when_possible() {
        assert_eq!(format_constant(1.0, 1, 2.0), "2");
        assert_eq!(format_constant(2.0, 1, 2.0 * 2f64.sqrt()), "2√2 ≈ 2.828427");
        // (2√2)² = 8.
        assert_eq!(format_constant(2.0, 2, 8.0), "8");
        assert_eq!(format_constant(3.0, 1, 2.0 * 3f64.sqrt()), "2√3 ≈ 3.464102");
        assert_eq!(format_constant(0.5, 1, 2.0 * 0.5f64.sqrt()), "1.414214");
    }
}
