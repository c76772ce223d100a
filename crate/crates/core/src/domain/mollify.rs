use rayon::prelude::*;

use super::function::{interpolate, sample};
use super::{BumpKind, Domain, GridFunction, Support};
use crate::error::{Error, Result};

/// `J_ε ∗ u(· − z)`: translate by `z`, then convolve with the normalized
/// smooth kernel of radius `ε`.
///
/// The kernel is the tensor `smooth_exp` bump `Π b(yᵢ/ε)` sampled on the
/// grid offsets and normalized so its quadrature sum is 1. The result has no
/// analytic evaluator.
pub fn mollify(u: &GridFunction, epsilon: f64, shift: &[f64]) -> Result<GridFunction> {
    let domain = u.domain();
    let dim = domain.dim();
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Construction(format!("mollification radius must be positive (got {epsilon})")));
    }
    if shift.len() != dim {
        return Err(Error::Construction(format!("shift must have {dim} components")));
    }
    let region = u.support().region.translated(shift).fattened(&vec![epsilon; dim]);
    let fits = if u.support().compact {
        domain.bounds().strictly_contains_box(&region)
    } else {
        domain.bounds().contains_box(&region)
    };
    if !fits {
        return Err(Error::Geometry(format!(
            "shifted support fattened by ε = {epsilon} reaches {:?}..{:?}, outside the domain",
            region.lower, region.upper
        )));
    }

    let mut values = if shift.iter().all(|&z| z == 0.0) {
        u.values().to_vec()
    } else {
        let moved = u.support().region.translated(shift);
        sample(domain, &moved, |x| {
            let back: Vec<f64> = x.iter().zip(shift).map(|(xi, z)| xi - z).collect();
            match u.analytic() {
                Some(f) => f.eval(&vec![0; dim], &back),
                None => interpolate(domain, u.values(), &back),
            }
        })
    };
    for axis in 0..dim {
        let weights = kernel_weights(domain.spacing()[axis], epsilon);
        values = convolve_axis(domain, &values, axis, &weights);
    }
    let compact = domain.bounds().strictly_contains_box(&region);
    Ok(GridFunction::from_parts(domain.clone(), values, Support { region, compact }, None))
}

/// Normalized 1-D weights at offsets `−r..=r` cells.
fn kernel_weights(h: f64, epsilon: f64) -> Vec<f64> {
    let r = (epsilon / h).ceil() as usize;
    let raw: Vec<f64> = (0..=2 * r)
        .map(|j| {
            let offset = (j as f64 - r as f64) * h;
            BumpKind::SmoothExp.profile(offset / epsilon)[0]
        })
        .collect();
    let total: f64 = crate::sum::compensated_sum(&raw);
    raw.into_iter().map(|w| w / total).collect()
}

fn convolve_axis(domain: &Domain, values: &[f64], axis: usize, weights: &[f64]) -> Vec<f64> {
    let n = domain.nodes()[axis] as isize;
    let stride = domain.strides()[axis];
    let r = (weights.len() / 2) as isize;
    let dim = domain.dim();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(crate::sum::CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut multi = vec![0; dim];
            for (k, o) in chunk.iter_mut().enumerate() {
                let flat = c * crate::sum::CHUNK + k;
                domain.unflatten(flat, &mut multi);
                let i = multi[axis] as isize;
                let line_start = flat - multi[axis] * stride;
                let mut acc = 0.0;
                for (j, w) in weights.iter().enumerate() {
                    let src = i + r - j as isize;
                    if (0..n).contains(&src) {
                        acc += w * values[line_start + src as usize * stride];
                    }
                }
                *o = acc;
            }
        });
    out
}
