use super::function::sample;
use super::{Domain, GridFunction, MultiIndex, Support};
use crate::error::{Error, Result};

/// Highest total order handled by the finite-difference fallback.
const FD_MAX_ORDER: usize = 2;

/// `D^α u`.
///
/// Uses the attached analytic evaluator when there is one. Otherwise applies
/// second-order stencils: central in the interior, one-sided at the box edges.
/// In finite-difference mode the support grows by one cell along every
/// differentiated axis.
pub fn derivative(u: &GridFunction, alpha: &MultiIndex) -> Result<GridFunction> {
    let domain = u.domain();
    if alpha.dim() != domain.dim() {
        return Err(Error::Construction(format!(
            "multi-index {alpha} does not match dimension {}",
            domain.dim()
        )));
    }
    let order = alpha.order();
    if order == 0 {
        return Ok(u.clone());
    }
    if let Some(f) = u.analytic() {
        if !f.supports_order(order) {
            return Err(Error::UnsupportedOrder { order, available: f.max_order().unwrap_or(0) });
        }
        let derived = u.derived_analytic(alpha.components()).expect("analytic present");
        let values = sample(domain, &u.support().region, |x| derived.eval(&vec![0; x.len()], x));
        return Ok(GridFunction::from_parts(domain.clone(), values, u.support().clone(), Some(derived)));
    }
    if order > FD_MAX_ORDER {
        return Err(Error::UnsupportedOrder { order, available: FD_MAX_ORDER });
    }

    let mut values = u.values().to_vec();
    let mut grow = vec![0.0; domain.dim()];
    for (axis, &k) in alpha.components().iter().enumerate() {
        if k == 0 {
            continue;
        }
        let needed = if k == 1 { 3 } else { 4 };
        if domain.nodes()[axis] < needed {
            return Err(Error::Construction(format!(
                "finite differences of order {k} need at least {needed} nodes on axis {axis}"
            )));
        }
        values = stencil_along(domain, &values, axis, k);
        grow[axis] = domain.spacing()[axis];
    }
    let region = u.support().region.fattened(&grow).intersection(domain.bounds());
    let compact = domain.bounds().strictly_contains_box(&region);
    Ok(GridFunction::from_parts(domain.clone(), values, Support { region, compact }, None))
}

fn stencil_along(domain: &Domain, values: &[f64], axis: usize, k: usize) -> Vec<f64> {
    let n = domain.nodes()[axis];
    let stride = domain.strides()[axis];
    let h = domain.spacing()[axis];
    let mut out = vec![0.0; values.len()];
    let mut multi = vec![0; domain.dim()];
    for (flat, o) in out.iter_mut().enumerate() {
        domain.unflatten(flat, &mut multi);
        let i = multi[axis];
        let at = |j: usize| values[flat - i * stride + j * stride];
        *o = match k {
            1 => {
                if i == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                } else if i + 1 == n {
                    (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * h)
                }
            }
            _ => {
                if i == 0 {
                    (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h)
                } else if i + 1 == n {
                    (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / (h * h)
                } else {
                    (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h)
                }
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{make_bump, Affine, AxisBox, BumpKind, Trig};

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_of_zero_is_zero() {
        let d = Arc::new(Domain::unit(2, 9).unwrap());
        let z = GridFunction::zeros(d.clone());
        for alpha in MultiIndex::up_to_order(2, 2) {
            assert!(derivative(&z, &alpha).unwrap().is_zero());
            assert!(derivative(&z.clone().without_analytic(), &alpha).unwrap().is_zero());
        }
    }

    #[test]
    fn central_differences_are_exact_on_linear_functions() {
        let d = Arc::new(Domain::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![17, 9]).unwrap());
        let u = GridFunction::from_analytic(
            d.clone(),
            Arc::new(Affine { offset: 0.0, gradient: vec![1.0, 0.0] }),
            None,
        )
        .unwrap()
        .without_analytic();
        let du = derivative(&u, &MultiIndex(vec![1, 0])).unwrap();
        assert!(du.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let dy = derivative(&u, &MultiIndex(vec![0, 1])).unwrap();
        assert!(dy.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn second_order_stencils_are_exact_on_quadratics() {
        let d = Arc::new(Domain::unit(1, 11).unwrap());
        let values: Vec<f64> = (0..11).map(|i| d.point(i)[0].powi(2)).collect();
        let u = GridFunction::from_values(d, values, None).unwrap();
        let du = derivative(&u, &MultiIndex(vec![1])).unwrap();
        let d2 = derivative(&u, &MultiIndex(vec![2])).unwrap();
        for i in 0..11 {
            let x = i as f64 / 10.0;
            assert!((du.values()[i] - 2.0 * x).abs() < 1e-12);
            assert!((d2.values()[i] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let mut errors = Vec::new();
        for n in [129, 257, 513, 1025] {
            let d = Arc::new(Domain::unit(1, n).unwrap());
            let u = make_bump(d, &[0.5], &[0.3], BumpKind::SmoothExp).unwrap();
            let exact = derivative(&u, &MultiIndex(vec![1])).unwrap();
            let fd = derivative(&u.clone().without_analytic(), &MultiIndex(vec![1])).unwrap();
            errors.push(max_diff(exact.values(), fd.values()));
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio} from {errors:?}");
        }
    }

    #[test]
    fn mixed_derivative_matches_analytic() {
        let d = Arc::new(Domain::unit(2, 257).unwrap());
        let u = make_bump(d, &[0.5, 0.45], &[0.3, 0.35], BumpKind::SmoothExp).unwrap();
        let alpha = MultiIndex(vec![1, 1]);
        let exact = derivative(&u, &alpha).unwrap();
        let fd = derivative(&u.clone().without_analytic(), &alpha).unwrap();
        let scale = exact.max_abs();
        let err = max_diff(exact.values(), fd.values());
        assert!(err < 2e-2 * scale, "{err} vs {scale}");
    }

    #[test]
    fn unsupported_orders_are_reported() {
        let d = Arc::new(Domain::unit(1, 33).unwrap());
        let u = make_bump(d.clone(), &[0.5], &[0.3], BumpKind::SmoothExp).unwrap();
        assert_eq!(
            derivative(&u, &MultiIndex(vec![3])).unwrap_err(),
            Error::UnsupportedOrder { order: 3, available: 2 }
        );
        assert!(matches!(
            derivative(&u.clone().without_analytic(), &MultiIndex(vec![3])),
            Err(Error::UnsupportedOrder { order: 3, .. })
        ));
        let p1 = make_bump(d.clone(), &[0.5], &[0.3], BumpKind::Poly(1)).unwrap();
        assert!(derivative(&p1, &MultiIndex(vec![1])).is_ok());
        assert!(derivative(&p1, &MultiIndex(vec![2])).is_err());
        // Trigonometric functions carry every order.
        let s = GridFunction::from_analytic(d, Arc::new(Trig::dirichlet(&Domain::unit(1, 3).unwrap())), None).unwrap();
        assert!(derivative(&s, &MultiIndex(vec![5])).is_ok());
    }

    #[test]
    fn fd_support_grows_by_one_cell() {
        let d = Arc::new(Domain::unit(1, 101).unwrap());
        let u = GridFunction::indicator(d, AxisBox::new(vec![0.3], vec![0.6]).unwrap(), 1.0).unwrap();
        let du = derivative(&u, &MultiIndex(vec![1])).unwrap();
        let r = &du.support().region;
        assert!((r.lower[0] - 0.29).abs() < 1e-12 && (r.upper[0] - 0.61).abs() < 1e-12);
        for (i, v) in du.values().iter().enumerate() {
            let x = i as f64 / 100.0;
            if x < r.lower[0] - 1e-12 || x > r.upper[0] + 1e-12 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn derivative_commutes_with_scaling() {
        let d = Arc::new(Domain::unit(2, 33).unwrap());
        let u = make_bump(d, &[0.4, 0.6], &[0.3, 0.25], BumpKind::Poly(4)).unwrap();
        for s in [-3.0, 0.1, 17.0, 1e5] {
            for alpha in MultiIndex::up_to_order(2, 2) {
                // Analytic mode: exact.
                let lhs = derivative(&u.scaled(s), &alpha).unwrap();
                let rhs = derivative(&u, &alpha).unwrap().scaled(s);
                assert_eq!(lhs.values(), rhs.values());
            }
        }
        let fd = u.clone().without_analytic();
        for s in [0.25, 2.0, -8.0] {
            // Power-of-two factors commute exactly with the stencils.
            for alpha in MultiIndex::up_to_order(2, 2) {
                let lhs = derivative(&fd.scaled(s), &alpha).unwrap();
                let rhs = derivative(&fd, &alpha).unwrap().scaled(s);
                assert_eq!(lhs.values(), rhs.values());
            }
        }
    }
}
