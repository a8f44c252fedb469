//! Compensated accumulation with a reduction order that does not depend on
//! the number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

/// Fixed chunk length for parallel partial sums.
pub const CHUNK: usize = 256;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    values.iter().for_each(|&x| acc.add(x));
    acc.value()
}

pub fn compensated_complex(values: &[Complex64]) -> Complex64 {
    let mut acc = CompensatedComplexSum::new();
    values.iter().for_each(|&z| acc.add(z));
    acc.value()
}

/// Sum in fixed-size chunks (in parallel), then combine the chunk partials
/// in index order. Bitwise reproducible across thread counts.
pub fn deterministic_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values.par_chunks(CHUNK).map(compensated).collect();
    compensated(&partials)
}

pub fn deterministic_sum_complex(values: &[Complex64]) -> Complex64 {
    let partials: Vec<Complex64> = values.par_chunks(CHUNK).map(compensated_complex).collect();
    compensated_complex(&partials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_mass() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated(&v), 2.0);
        assert_ne!(v.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let v: Vec<f64> = (0..10_000)
            .map(|i| ((i as f64) * 0.37).sin() / (1.0 + i as f64))
            .collect();
        let a = deterministic_sum(&v);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| deterministic_sum(&v));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
