//! Multi-dual numbers: a scalar plus independent nilpotent infinitesimals
//! `ε_1..ε_n` with `ε_i² = 0`. The coefficient of `ε_1⋯ε_n` in `f(x + Σ ε_i v_i)`
//! is the mixed partial `∂_1⋯∂_n f`, with no truncation error.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Coefficients indexed by subsets of `{ε_1..ε_n}` (bit i set = ε_{i+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn constant(order: usize, value: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 1 << order];
        coeffs[0] = value;
        Self { order, coeffs }
    }

    pub fn real(order: usize, value: f64) -> Self {
        Self::constant(order, Complex64::new(value, 0.0))
    }

    /// `value · ε_{index+1}`.
    pub fn infinitesimal(order: usize, index: usize, value: f64) -> Self {
        let mut j = Self::real(order, 0.0);
        j.coeffs[1 << index] = Complex64::new(value, 0.0);
        j
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of the product of all infinitesimals.
    pub fn top(&self) -> Complex64 {
        self.coeffs[(1 << self.order) - 1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// `self^{-k}` through the finite binomial series in the nilpotent part.
    pub fn powi_neg(&self, k: u32) -> Self {
        let w0 = self.value();
        let inv0 = w0.inv();
        let mut nil = self.scale(inv0);
        nil.coeffs[0] = Complex64::new(0.0, 0.0);
        let mut out = Self::real(self.order, 1.0);
        let mut term = Self::real(self.order, 1.0);
        // binom(-k, j) = (-1)^j (k+j-1 choose j)
        let mut binom = 1.0f64;
        for j in 1..=self.order {
            term = &term * &nil;
            binom *= -((k as f64) + (j as f64) - 1.0) / j as f64;
            out = &out + &term.scale(Complex64::new(binom, 0.0));
        }
        out.scale(inv0.powu(k))
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let size = self.coeffs.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); size];
        for (s, slot) in coeffs.iter_mut().enumerate() {
            // all submasks a of s, including s and 0
            let mut a = s;
            loop {
                *slot += self.coeffs[a] * rhs.coeffs[s ^ a];
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
        }
        Jet {
            order: self.order,
            coeffs,
        }
    }
}

/// 2×2 matrix over [`Jet`], row-major.
#[derive(Debug, Clone)]
pub struct JetMatrix(pub [Jet; 4]);

impl JetMatrix {
    pub fn from_real(order: usize, m: [f64; 4]) -> Self {
        JetMatrix(m.map(|x| Jet::real(order, x)))
    }

    pub fn mul(&self, rhs: &JetMatrix) -> JetMatrix {
        let [a, b, c, d] = &self.0;
        let [e, f, g, h] = &rhs.0;
        JetMatrix([
            &(a * e) + &(b * g),
            &(a * f) + &(b * h),
            &(c * e) + &(d * g),
            &(c * f) + &(d * h),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        // (2 + ε1)(3 + ε2) = 6 + 3ε1 + 2ε2 + ε1ε2
        let x = &Jet::real(2, 2.0) + &Jet::infinitesimal(2, 0, 1.0);
        let y = &Jet::real(2, 3.0) + &Jet::infinitesimal(2, 1, 1.0);
        let p = &x * &y;
        assert_eq!(p.value().re, 6.0);
        assert_eq!(p.coeffs[1].re, 3.0);
        assert_eq!(p.coeffs[2].re, 2.0);
        assert_eq!(p.top().re, 1.0);
    }

    #[test]
    fn negative_power_matches_calculus() {
        // f(x) = x^{-3}; ∂²/∂s∂u f(2 + s + u) = 12 x^{-5} at x = 2
        let x = &(&Jet::real(2, 2.0) + &Jet::infinitesimal(2, 0, 1.0)) + &Jet::infinitesimal(2, 1, 1.0);
        let p = x.powi_neg(3);
        assert!((p.value().re - 0.125).abs() < 1e-15);
        assert!((p.coeffs[1].re + 3.0 / 16.0).abs() < 1e-15);
        assert!((p.top().re - 12.0 / 32.0).abs() < 1e-15);
    }
}
