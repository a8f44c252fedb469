//! SL₂(ℝ) kernel: group law, the operator norm, and Cartan / Iwasawa
//! coordinates.
//!
//! Every element is stored as a row-major `[[a, b], [c, d]]` with
//! `ad - bc = 1` up to [`DET_TOLERANCE`]. The norm on the group is the
//! largest singular value, so for `a_t = diag(e^{t/2}, e^{-t/2})` we have
//! `‖a_t‖ = e^{t/2}` exactly.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Accepted deviation of the determinant from one, measured relative to
/// the size of the products `ad` and `bc`.
pub const DET_TOLERANCE: f64 = 1e-12;
/// Beyond [`DET_TOLERANCE`] and up to this bound the constructor rescales
/// by `1/√det`; further away the input is rejected.
pub const DET_RENORMALIZE_LIMIT: f64 = 1e-8;

/// Reduce an angle to `[0, 2π)` with a floored modulo.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A real 2×2 matrix of determinant one.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct GroupElement {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl TryFrom<[f64; 4]> for GroupElement {
    type Error = LabError;

    fn try_from(e: [f64; 4]) -> Result<Self> {
        GroupElement::new(e[0], e[1], e[2], e[3])
    }
}

impl From<GroupElement> for [f64; 4] {
    fn from(g: GroupElement) -> Self {
        g.entries()
    }
}

impl GroupElement {
    /// Validating constructor.
    ///
    /// Inputs whose determinant is off by more than [`DET_TOLERANCE`] but
    /// within [`DET_RENORMALIZE_LIMIT`] are rescaled by `1/√det`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(LabError::NumericOverflow(format!("entries [{a}, {b}, {c}, {d}]")));
        }
        let det = a * d - b * c;
        if !det.is_finite() {
            return Err(LabError::NumericOverflow(format!(
                "determinant of [{a}, {b}, {c}, {d}]"
            )));
        }
        let scale = 1f64.max((a * d).abs() + (b * c).abs());
        let dev = (det - 1.0).abs() / scale;
        if dev <= DET_TOLERANCE {
            Ok(Self { a, b, c, d })
        } else if dev <= DET_RENORMALIZE_LIMIT && det > 0.0 {
            let s = det.sqrt().recip();
            Ok(Self {
                a: a * s,
                b: b * s,
                c: c * s,
                d: d * s,
            })
        } else {
            Err(LabError::NotUnimodular { det })
        }
    }

    pub fn from_entries(e: [f64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `[[cos θ, -sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            a: c,
            b: -s,
            c: s,
            d: c,
        }
    }

    /// `diag(λ, 1/λ)` for `λ > 0`.
    pub fn diag(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(LabError::Domain(format!(
                "diag({lambda}) needs a positive finite entry"
            )));
        }
        Ok(Self {
            a: lambda,
            b: 0.0,
            c: 0.0,
            d: lambda.recip(),
        })
    }

    /// `a_t = diag(e^{t/2}, e^{-t/2})`.
    pub fn radial(t: f64) -> Self {
        Self {
            a: (0.5 * t).exp(),
            b: 0.0,
            c: 0.0,
            d: (-0.5 * t).exp(),
        }
    }

    /// Upper unipotent `n(x) = [[1, x], [0, 1]]`.
    pub fn unipotent(x: f64) -> Self {
        Self {
            a: 1.0,
            b: x,
            c: 0.0,
            d: 1.0,
        }
    }

    /// Lower unipotent `[[1, 0], [x, 1]]`.
    pub fn lower_unipotent(x: f64) -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: x,
            d: 1.0,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn multiply(&self, h: &GroupElement) -> Result<GroupElement> {
        let (a, b, c, d) = self.product_entries(h);
        Self::new(a, b, c, d)
    }

    /// Product without renormalization; only for trusted inputs where the
    /// determinant drift is already bounded by round-off.
    pub(crate) fn multiply_unchecked(&self, h: &GroupElement) -> GroupElement {
        let (a, b, c, d) = self.product_entries(h);
        GroupElement { a, b, c, d }
    }

    fn product_entries(&self, h: &GroupElement) -> (f64, f64, f64, f64) {
        (
            self.a * h.a + self.b * h.c,
            self.a * h.b + self.b * h.d,
            self.c * h.a + self.d * h.c,
            self.c * h.b + self.d * h.d,
        )
    }

    /// Adjugate `[[d, -b], [-c, a]]`.
    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    /// Split into a scaled rotation plus a scaled reflection:
    /// `g = ρ₁·rot(φ₁) + ρ₂·refl(φ₂)`; the singular values are `ρ₁ ± ρ₂`.
    fn conformal_split(&self) -> (f64, f64, f64, f64) {
        let u = 0.5 * (self.a + self.d);
        let v = 0.5 * (self.c - self.b);
        let r = 0.5 * (self.a - self.d);
        let s = 0.5 * (self.b + self.c);
        (u.hypot(v), v.atan2(u), r.hypot(s), s.atan2(r))
    }

    /// Largest singular value; always `>= 1` on SL₂(ℝ).
    pub fn group_norm(&self) -> f64 {
        let (rho1, _, rho2, _) = self.conformal_split();
        (rho1 + rho2).max(1.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn cartan(&self) -> CartanCoords {
        let (_, phi1, rho2, phi2) = self.conformal_split();
        let t = 2.0 * rho2.asinh();
        if rho2 == 0.0 {
            // degenerate fiber: put the whole rotation on the left
            return CartanCoords {
                theta1: normalize_angle(phi1),
                t: 0.0,
                theta2: 0.0,
            };
        }
        CartanCoords {
            theta1: normalize_angle(0.5 * (phi1 + phi2)),
            t,
            theta2: normalize_angle(0.5 * (phi1 - phi2)),
        }
    }

    pub fn iwasawa(&self) -> IwasawaCoords {
        let q = self.c * self.c + self.d * self.d;
        IwasawaCoords {
            x: (self.a * self.c + self.b * self.d) / q,
            y: q.recip(),
            theta: normalize_angle(self.c.atan2(self.d)),
        }
    }

    /// Möbius action on the upper half-plane, returned as `(x, y)`.
    pub fn mobius(&self, x: f64, y: f64) -> (f64, f64) {
        // (a z + b)/(c z + d) with z = x + iy
        let den = (self.c * x + self.d).powi(2) + (self.c * y).powi(2);
        let re = ((self.a * x + self.b) * (self.c * x + self.d) + self.a * self.c * y * y) / den;
        let im = y * self.det() / den;
        (re, im)
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// `g = rot(theta1) · a_t · rot(theta2)` with `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartanCoords {
    pub theta1: f64,
    pub t: f64,
    pub theta2: f64,
}

impl CartanCoords {
    pub fn recompose(&self) -> GroupElement {
        GroupElement::rotation(self.theta1)
            .multiply_unchecked(&GroupElement::radial(self.t))
            .multiply_unchecked(&GroupElement::rotation(self.theta2))
    }
}

/// `g = n(x) · diag(√y, 1/√y) · rot(theta)`; `x + iy = g·i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaCoords {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl IwasawaCoords {
    pub fn recompose(&self) -> GroupElement {
        let sy = self.y.sqrt();
        GroupElement::unipotent(self.x)
            .multiply_unchecked(&GroupElement {
                a: sy,
                b: 0.0,
                c: 0.0,
                d: sy.recip(),
            })
            .multiply_unchecked(&GroupElement::rotation(self.theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn arb_element() -> impl Strategy<Value = GroupElement> {
        (0.0..TAU, 0.0..6.0f64, 0.0..TAU).prop_map(|(a, t, b)| {
            CartanCoords {
                theta1: a,
                t,
                theta2: b,
            }
            .recompose()
        })
    }

    #[test]
    fn identity_and_inverse() {
        let i = GroupElement::identity();
        assert_eq!(i.multiply(&i).unwrap(), i);
        assert_eq!(i.inverse(), i);
        let g = GroupElement::new(2.0, 3.0, 1.0, 2.0).unwrap();
        assert!(g.multiply(&g.inverse()).unwrap().max_abs_diff(&i) <= 1e-12);
        assert_eq!(
            GroupElement::diag(2.0).unwrap().inverse(),
            GroupElement::diag(0.5).unwrap()
        );
        assert_eq!(GroupElement::unipotent(3.5).inverse(), GroupElement::unipotent(-3.5));
    }

    #[test]
    fn rotations_compose() {
        let p = GroupElement::rotation(0.7)
            .multiply(&GroupElement::rotation(1.9))
            .unwrap();
        assert!(p.max_abs_diff(&GroupElement::rotation(2.6)) < 1e-14);
    }

    #[test]
    fn constructor_renormalizes_or_rejects() {
        let g = GroupElement::new(1.0 + 1e-10, 0.0, 0.0, 1.0).unwrap();
        assert!((g.det() - 1.0).abs() < 1e-15);
        assert!(matches!(
            GroupElement::new(2.0, 0.0, 0.0, 1.0),
            Err(LabError::NotUnimodular { .. })
        ));
        assert!(matches!(
            GroupElement::new(f64::NAN, 0.0, 0.0, 1.0),
            Err(LabError::NumericOverflow(_))
        ));
        let big = GroupElement::diag(1e200).unwrap();
        assert!(matches!(big.multiply(&big), Err(LabError::NumericOverflow(_))));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(GroupElement::identity().group_norm(), 1.0);
        assert_abs_diff_eq!(GroupElement::diag(2.0).unwrap().group_norm(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            GroupElement::unipotent(1.0).group_norm(),
            (1.0 + 5f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(GroupElement::identity().frobenius_norm(), 2f64.sqrt());
        assert_abs_diff_eq!(GroupElement::diag(2.0).unwrap().frobenius_norm(), 4.25f64.sqrt());
    }

    #[test]
    fn cartan_examples() {
        let e = std::f64::consts::E;
        let c = GroupElement::diag(e).unwrap().cartan();
        assert_abs_diff_eq!(c.t, 2.0, epsilon = 1e-14);
        assert_eq!((c.theta1, c.theta2), (0.0, 0.0));

        let c = GroupElement::rotation(2.3).cartan();
        assert_eq!(c.t, 0.0);
        assert_eq!(c.theta2, 0.0);
        assert_abs_diff_eq!(normalize_angle(c.theta1 + c.theta2), 2.3, epsilon = 1e-14);

        let c = GroupElement::rotation(-0.4).cartan();
        assert_abs_diff_eq!(c.theta1, TAU - 0.4, epsilon = 1e-14);
    }

    #[test]
    fn iwasawa_examples() {
        let w = GroupElement::identity().iwasawa();
        assert_eq!((w.x, w.y, w.theta), (0.0, 1.0, 0.0));
        let w = GroupElement::unipotent(3.0).iwasawa();
        assert_eq!((w.x, w.y, w.theta), (3.0, 1.0, 0.0));
        let w = GroupElement::diag(2.0).unwrap().iwasawa();
        assert_abs_diff_eq!(w.x, 0.0);
        assert_abs_diff_eq!(w.y, 4.0, epsilon = 1e-14);
        assert_eq!(w.theta, 0.0);
    }

    #[test]
    fn norm_homogeneity_on_grid() {
        // ‖k₁ exp(sX) k₂‖ = ‖exp X‖^s for symmetric traceless X
        for &(p, q) in &[(0.3f64, 0.1f64), (1.0, -0.5), (-0.2, 0.9)] {
            let x_norm = (p * p + q * q).sqrt();
            for step in 0..=10 {
                let s = step as f64 * 0.5;
                // exp(s·[[p, q], [q, -p]]) = cosh(sλ) I + sinh(sλ)/λ · X, λ = √(p²+q²)
                let ch = (s * x_norm).cosh();
                let sh = if x_norm == 0.0 {
                    0.0
                } else {
                    (s * x_norm).sinh() / x_norm
                };
                let e = GroupElement::new(ch + sh * p, sh * q, sh * q, ch - sh * p).unwrap();
                let g = GroupElement::rotation(0.4 + s)
                    .multiply(&e)
                    .unwrap()
                    .multiply(&GroupElement::rotation(1.1 * s))
                    .unwrap();
                let unit = x_norm.exp();
                let lhs = g.group_norm();
                let rhs = unit.powf(s);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs, "s={s}: {lhs} vs {rhs}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn cartan_round_trip(g in arb_element()) {
            let c = g.cartan();
            prop_assert!(c.t >= 0.0);
            prop_assert!((0.0..TAU).contains(&c.theta1) && (0.0..TAU).contains(&c.theta2));
            prop_assert!(c.recompose().max_abs_diff(&g) < 1e-10 * g.group_norm().max(1.0));
            prop_assert!((c.t - 2.0 * g.group_norm().ln()).abs() < 1e-10);
        }

        #[test]
        fn iwasawa_round_trip(g in arb_element()) {
            let w = g.iwasawa();
            prop_assert!(w.y > 0.0);
            prop_assert!(w.recompose().max_abs_diff(&g) < 1e-10 * g.group_norm().powi(2));
            let (x, y) = g.mobius(0.0, 1.0);
            prop_assert!((x - w.x).abs() < 1e-10 * (1.0 + x.abs()));
            prop_assert!((y - w.y).abs() < 1e-10 * (1.0 + y));
        }

        #[test]
        fn norm_axioms(g in arb_element(), h in arb_element()) {
            prop_assert!((g.inverse().group_norm() - g.group_norm()).abs() <= 1e-12 * g.group_norm());
            let gh = g.multiply(&h).unwrap();
            prop_assert!(gh.group_norm() <= g.group_norm() * h.group_norm() * (1.0 + 1e-12));
            let n = g.group_norm();
            prop_assert!((g.frobenius_sq() - (n * n + 1.0 / (n * n))).abs() <= 1e-11 * n * n);
            let tr = g.a() + g.d();
            let sk = g.b() - g.c();
            prop_assert!((tr * tr + sk * sk - g.frobenius_sq() - 2.0).abs() <= 1e-12 * g.frobenius_sq());
        }
    }
}
