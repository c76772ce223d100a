//! Compensated and order-stable summation.
//!
//! Parallel reductions split the index range into chunks of a fixed size that
//! does not depend on the thread count, sum each chunk sequentially and then
//! combine the partial sums in chunk order. Results are therefore bit-identical
//! for any rayon pool size.

use rayon::prelude::*;

use crate::error::Result;

/// Chunk length used by every parallel reduction in the crate.
pub const CHUNK: usize = 2048;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice in index order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Deterministic parallel sum of `term(i)` for `i in 0..len`.
///
/// The first error in index order is returned, independent of scheduling.
pub fn par_sum<F>(len: usize, term: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    if len <= CHUNK {
        let mut acc = NeumaierSum::new();
        for i in 0..len {
            acc.add(term(i)?);
        }
        return Ok(acc.value());
    }
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<Result<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = NeumaierSum::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                acc.add(term(i)?);
            }
            Ok(acc.value())
        })
        .collect();
    let mut acc = NeumaierSum::new();
    for p in partials {
        acc.add(p?);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut values = vec![1.0e16];
        values.extend(std::iter::repeat_n(1.0, 1000));
        values.push(-1.0e16);
        assert_eq!(compensated_sum(&values), 1000.0);
    }

    #[test]
    fn par_sum_is_independent_of_pool_size() {
        let term = |i: usize| Ok((i as f64 * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64));
        let n = 50_000;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| par_sum(n, term)).unwrap();
        let b = four.install(|| par_sum(n, term)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn par_sum_reports_first_error() {
        let r = par_sum(10_000, |i| {
            if i == 7000 || i == 9000 {
                Err(crate::Error::Range { t: i as f64, node: Some(i) })
            } else {
                Ok(1.0)
            }
        });
        assert_eq!(r, Err(crate::Error::Range { t: 7000.0, node: Some(7000) }));
    }
}
