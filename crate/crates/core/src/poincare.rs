//! Truncated Poincaré series `P(g) = Σ_{γ ∈ Γ(N)} c_k(γ g)` with certified
//! tail bounds, plus the symmetry, cuspidality, and growth diagnostics that
//! the full series satisfies exactly.
//!
//! Truncation keeps `γ` with `‖γ‖_F ≤ R`. Beyond the ball we use
//!
//! * `|c_k(h)| ≤ (2/‖h‖_F)^k`,
//! * `‖γ g‖_F ≥ ‖γ‖_F / ‖g‖`,
//! * `#{γ ∈ SL₂(ℤ) : ‖γ‖_F ≤ S} ≤ κ₀ S²` for `S ≥ √2`,
//!
//! summed over dyadic shells `S_j = 2^j R`:
//!
//! ```text
//! tail = Σ_j κ₀ S_{j+1}² (2‖g‖/S_j)^k = 4κ₀R² (2‖g‖/R)^k / (1 − 2^{2−k}).
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{gamma_ball, quotient_norm_auto, CongruenceLevel, IntElement, LatticeBall};
use crate::discrete_series::{apply_word, EnvelopingWord, MatrixCoefficientParam, Side};
use crate::error::{LabError, Result};
use crate::group::GroupElement;
use crate::quadrature::unipotent_rule;
use crate::sum::{deterministic_sum, deterministic_sum_complex};

pub const DEFAULT_COUNT_CONSTANT: f64 = 20.0;
/// Radii at which the count envelope is checked against enumeration.
pub const VALIDATION_RADII: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

/// Lattice-count envelope `#{γ ∈ SL₂(ℤ) : ‖γ‖_F ≤ S} ≤ κ₀ S²`.
///
/// For a primitive first row `(a, b)` the admissible second rows lie on a
/// line of lattice points spaced `√(a² + b²)` apart, which gives
/// `κ₀ ≈ 5π` asymptotically; the small-radius range is checked by exact
/// enumeration before any tail is certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub count_constant: f64,
    /// `(S, #ball)` pairs from exhaustive enumeration.
    pub validation: Vec<(f64, usize)>,
}

impl TailModel {
    pub fn validated(count_constant: f64) -> Result<Self> {
        let full = CongruenceLevel::new(1)?;
        let mut validation = Vec::with_capacity(VALIDATION_RADII.len());
        for s in VALIDATION_RADII {
            let count = gamma_ball(full, s)?.count;
            if count as f64 > count_constant * s * s {
                return Err(LabError::UncertifiedTail(format!(
                    "count envelope {count_constant}·S² fails at S = {s}: {count} elements"
                )));
            }
            validation.push((s, count));
        }
        Ok(Self {
            count_constant,
            validation,
        })
    }

    /// Bound on `Σ_{‖γ‖_F > R} |c_k(γ g)|`; needs `R ≥ √2·‖g‖`.
    pub fn tail_bound(&self, k: u32, g_norm: f64, radius: f64) -> f64 {
        let k = k as f64;
        4.0 * self.count_constant * radius * radius * (2.0 * g_norm / radius).powf(k) / (1.0 - 2f64.powf(2.0 - k))
    }
}

/// A truncated evaluation together with its certified error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedValue {
    pub k: u32,
    #[serde(rename = "N")]
    pub level: u32,
    pub g: GroupElement,
    pub radius: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub tail_bound: f64,
    pub term_count: usize,
}

impl TruncatedValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Symmetry residual of the truncated series and the bound it must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub residual: f64,
    pub tail_sum: f64,
}

impl Residual {
    pub fn within_tails(&self) -> bool {
        self.residual <= self.tail_sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspidalityReport {
    pub residual: f64,
    /// Largest tail bound along `x ↦ n(x)·g`, `x ∈ [0, N]`.
    pub tail_bound: f64,
    pub width: f64,
    pub nodes: usize,
}

/// `P_{Γ(N)}(c_k)` truncated to a fixed Frobenius ball.
#[derive(Debug, Clone)]
pub struct PoincareSeries {
    param: MatrixCoefficientParam,
    level: CongruenceLevel,
    radius: f64,
    ball: LatticeBall,
    terms: Vec<GroupElement>,
    /// `−I ∈ Γ(N)`; `terms` then holds one representative per `±γ`.
    paired: bool,
    tail: TailModel,
}

impl PoincareSeries {
    pub fn new(k: i64, level: CongruenceLevel, radius: f64) -> Result<Self> {
        Self::with_tail_model(k, level, radius, TailModel::validated(DEFAULT_COUNT_CONSTANT)?)
    }

    pub fn with_tail_model(k: i64, level: CongruenceLevel, radius: f64, tail: TailModel) -> Result<Self> {
        let param = MatrixCoefficientParam::integrable(k)?;
        let ball = gamma_ball(level, radius)?;
        let paired = level.contains_minus_identity();
        let terms = ball
            .elements
            .iter()
            .filter(|g| !paired || g.sign_class_representative())
            .map(IntElement::to_group)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            param,
            level,
            radius,
            ball,
            terms,
            paired,
            tail,
        })
    }

    pub fn k(&self) -> u32 {
        self.param.k()
    }

    pub fn level(&self) -> CongruenceLevel {
        self.level
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ball(&self) -> &LatticeBall {
        &self.ball
    }

    pub fn tail_model(&self) -> &TailModel {
        &self.tail
    }

    fn check_radius(&self, g: &GroupElement) -> Result<()> {
        let need = 2f64.sqrt() * g.group_norm();
        if self.radius < need {
            return Err(LabError::Domain(format!(
                "truncation radius {} below sqrt(2)·‖g‖ = {need}",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn tail_bound(&self, g: &GroupElement) -> f64 {
        self.tail.tail_bound(self.k(), g.group_norm(), self.radius)
    }

    /// Raw truncated sum; terms for `γ` and `−γ` are added pairwise when
    /// both are present, so odd `k` cancels exactly.
    fn raw_sum(&self, g: &GroupElement) -> Complex64 {
        let p = &self.param;
        let terms: Vec<Complex64> = self
            .terms
            .par_iter()
            .map(|gamma| {
                let h = gamma.multiply_unchecked(g);
                if self.paired {
                    p.coeff(&h) + p.coeff(&h.neg())
                } else {
                    p.coeff(&h)
                }
            })
            .collect();
        deterministic_sum_complex(&terms)
    }

    pub fn eval(&self, g: &GroupElement) -> Result<TruncatedValue> {
        self.check_radius(g)?;
        let value = self.raw_sum(g);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(LabError::NumericOverflow("Poincaré partial sum".into()));
        }
        Ok(TruncatedValue {
            k: self.k(),
            level: self.level.get(),
            g: *g,
            radius: self.radius,
            value_re: value.re,
            value_im: value.im,
            tail_bound: self.tail_bound(g),
            term_count: self.ball.count,
        })
    }

    /// `Σ_{γ ∈ ball} |c_k(γ g)|`.
    pub fn absolute_sum(&self, g: &GroupElement) -> f64 {
        let terms: Vec<f64> = self
            .ball
            .elements
            .par_iter()
            .map(|gamma| {
                let h = gamma.to_group().expect("ball elements are unimodular");
                self.param.abs_coeff(&h.multiply_unchecked(g))
            })
            .collect();
        deterministic_sum(&terms)
    }

    /// `|P(g·rot(θ)) − e^{ikθ} P(g)|`.
    pub fn weight_equivariance_check(&self, g: &GroupElement, theta: f64) -> Result<Residual> {
        let base = self.eval(g)?;
        if theta == 0.0 {
            return Ok(Residual {
                residual: 0.0,
                tail_sum: 2.0 * base.tail_bound,
            });
        }
        let turned = self.eval(&g.multiply(&GroupElement::rotation(theta))?)?;
        let phase = Complex64::from_polar(1.0, self.k() as f64 * theta);
        Ok(Residual {
            residual: (turned.value() - phase * base.value()).norm(),
            tail_sum: base.tail_bound + turned.tail_bound,
        })
    }

    /// `|P(γ₀ g) − P(g)|` for `γ₀ ∈ Γ(N)`.
    pub fn left_invariance_check(&self, gamma0: &IntElement, g: &GroupElement) -> Result<Residual> {
        if !self.level.contains(gamma0) {
            return Err(LabError::Domain(format!(
                "{gamma0:?} is not in Γ({})",
                self.level.get()
            )));
        }
        let base = self.eval(g)?;
        if gamma0.is_identity() {
            return Ok(Residual {
                residual: 0.0,
                tail_sum: 2.0 * base.tail_bound,
            });
        }
        let moved = self.eval(&gamma0.to_group()?.multiply(g)?)?;
        Ok(Residual {
            residual: (moved.value() - base.value()).norm(),
            tail_sum: base.tail_bound + moved.tail_bound,
        })
    }

    /// Constant term along the cusp at ∞, `(1/N) ∫₀^N P(n(x) g) dx`.
    pub fn cuspidality_residual(&self, g: &GroupElement, nodes: usize) -> Result<CuspidalityReport> {
        let width = f64::from(self.level.get());
        // ‖n(x) g‖ is convex in x, so its maximum on [0, N] is at an endpoint
        let far = GroupElement::unipotent(width).multiply(g)?;
        let worst = if far.group_norm() > g.group_norm() { far } else { *g };
        self.check_radius(&worst)?;
        let rule = unipotent_rule(width, nodes)?;
        let terms: Vec<Complex64> = rule
            .iter()
            .map(|&(x, w)| w * self.raw_sum(&GroupElement::unipotent(x).multiply_unchecked(g)))
            .collect();
        let mean = deterministic_sum_complex(&terms) / width;
        Ok(CuspidalityReport {
            residual: mean.norm(),
            tail_bound: self.tail_bound(&worst),
            width,
            nodes,
        })
    }

    /// `max |value| + tail` over the samples.
    pub fn sup_norm_check(&self, samples: &[GroupElement]) -> Result<f64> {
        let mut best = 0.0f64;
        for g in samples {
            let v = self.eval(g)?;
            best = best.max(v.value().norm() + v.tail_bound);
        }
        Ok(best)
    }

    /// Grid estimate of `sup_x ‖x‖_{Γ\G}^{-s} |u·P(x)|` for a right-acting
    /// word `u` of length at most two (the empty word gives `|P|`).
    pub fn seminorm_estimate(&self, word: &EnvelopingWord, s: f64, grid: &[GroupElement]) -> Result<f64> {
        if grid.is_empty() {
            return Err(LabError::Domain("seminorm grid is empty".into()));
        }
        if word.len() > 2 {
            return Err(LabError::WordTooLong {
                len: word.len(),
                cap: 2,
            });
        }
        if !word.is_empty() && word.side() != Side::Right {
            return Err(LabError::Domain(
                "seminorms use the right regular action; left words do not commute with Γ-averaging".into(),
            ));
        }
        let mut best = 0.0f64;
        for x in grid {
            self.check_radius(x)?;
            let q = quotient_norm_auto(self.level, x)?;
            let terms: Vec<Complex64> = self
                .ball
                .elements
                .par_iter()
                .map(|gamma| {
                    let h = gamma
                        .to_group()
                        .expect("ball elements are unimodular")
                        .multiply_unchecked(x);
                    apply_word(&self.param, word, &h)
                })
                .collect();
            let v = deterministic_sum_complex(&terms).norm();
            best = best.max(q.powf(-s) * v);
        }
        Ok(best)
    }
}

/// One-shot truncated evaluation.
pub fn eval_truncated(k: i64, level: CongruenceLevel, g: &GroupElement, radius: f64) -> Result<TruncatedValue> {
    PoincareSeries::new(k, level, radius)?.eval(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(n: i64) -> CongruenceLevel {
        CongruenceLevel::new(n).unwrap()
    }

    fn probes() -> Vec<GroupElement> {
        vec![
            GroupElement::identity(),
            GroupElement::radial(0.5),
            GroupElement::unipotent(0.5)
                .multiply(&GroupElement::rotation(1.0 / 3.0))
                .unwrap(),
            GroupElement::new(1.1, 0.3, -0.2, 0.8545454545454545).unwrap(),
        ]
    }

    #[test]
    fn tail_model_validates_and_rejects() {
        let t = TailModel::validated(DEFAULT_COUNT_CONSTANT).unwrap();
        assert_eq!(t.validation.len(), 4);
        assert!(TailModel::validated(1.0).is_err());
        // closed form equals the explicit shell sum
        let (k, gn, r) = (5u32, 1.7, 30.0);
        let shells: f64 = (0..200)
            .map(|j| {
                let s = 2f64.powi(j) * r;
                t.count_constant * (2.0 * s).powi(2) * 2f64.powi(k as i32) * (s / gn).powi(-(k as i32))
            })
            .sum();
        assert!((t.tail_bound(k, gn, r) - shells).abs() < 1e-12 * shells);
    }

    #[test]
    fn single_term_truncation() {
        let s = PoincareSeries::new(5, level(5), 2.0).unwrap();
        assert_eq!(s.ball().count, 1);
        let p = MatrixCoefficientParam::new(5).unwrap();
        for g in probes().iter().filter(|g| g.group_norm() * 2f64.sqrt() <= 2.0) {
            let v = s.eval(g).unwrap();
            assert_eq!(v.value(), p.coeff(g));
            assert!(v.tail_bound > 0.0);
        }
        assert!(s.eval(&GroupElement::radial(3.0)).is_err());
        assert!(matches!(
            PoincareSeries::new(2, level(5), 2.0),
            Err(LabError::NotIntegrable { k: 2 })
        ));
    }

    #[test]
    fn parity_cancellation() {
        for n in [1, 2] {
            let s = PoincareSeries::new(5, level(n), 12.0).unwrap();
            for g in probes() {
                assert_eq!(s.eval(&g).unwrap().value(), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn even_weight_pairs_double() {
        let s = PoincareSeries::new(4, level(2), 12.0).unwrap();
        let p = MatrixCoefficientParam::new(4).unwrap();
        let g = probes()[2];
        let half: Complex64 = s
            .ball()
            .elements
            .iter()
            .filter(|e| e.sign_class_representative())
            .map(|e| p.coeff(&e.to_group().unwrap().multiply(&g).unwrap()))
            .sum();
        assert!((s.eval(&g).unwrap().value() - 2.0 * half).norm() < 1e-12);
    }

    #[test]
    fn tail_soundness_on_doubling() {
        for (k, n) in [(4, 2), (6, 2), (5, 3), (12, 3)] {
            let small = PoincareSeries::new(k, level(n), 10.0).unwrap();
            let big = PoincareSeries::new(k, level(n), 20.0).unwrap();
            for g in probes() {
                let a = small.eval(&g).unwrap();
                let b = big.eval(&g).unwrap();
                assert!((a.value() - b.value()).norm() <= a.tail_bound, "k={k} N={n}");
                assert!(b.tail_bound < a.tail_bound);
            }
        }
    }

    #[test]
    fn absolute_sums_monotone_and_bounded() {
        let g = probes()[1];
        let mut last = 0.0;
        for r in [4.0, 8.0, 16.0, 32.0] {
            let s = PoincareSeries::new(6, level(3), r).unwrap();
            let a = s.absolute_sum(&g);
            assert!(a >= last);
            let v = s.eval(&g).unwrap();
            assert!(a + v.tail_bound >= last);
            last = a;
        }
        let s = PoincareSeries::new(6, level(3), 8.0).unwrap();
        let v = s.eval(&g).unwrap();
        assert!(last <= s.absolute_sum(&g) + v.tail_bound);
    }

    #[test]
    fn symmetry_checks() {
        let s = PoincareSeries::new(6, level(3), 16.0).unwrap();
        let g = probes()[3];
        assert_eq!(s.weight_equivariance_check(&g, 0.0).unwrap().residual, 0.0);
        let r = s.weight_equivariance_check(&g, std::f64::consts::TAU / 6.0).unwrap();
        assert!(r.within_tails());
        let r = s.weight_equivariance_check(&g, 0.77).unwrap();
        assert!(r.within_tails());
        assert_eq!(
            s.left_invariance_check(&IntElement::IDENTITY, &g).unwrap().residual,
            0.0
        );
        let r = s.left_invariance_check(&IntElement::new(1, 3, 0, 1), &g).unwrap();
        assert!(r.within_tails(), "{r:?}");
        assert!(matches!(
            s.left_invariance_check(&IntElement::new(1, 1, 0, 1), &g),
            Err(LabError::Domain(_))
        ));
    }

    #[test]
    fn single_term_is_not_cuspidal() {
        // the admissible radius along n(x), x ∈ [0, 5], exceeds the single-term ball
        let s = PoincareSeries::new(6, level(5), 2.0).unwrap();
        assert!(s.cuspidality_residual(&GroupElement::identity(), 64).is_err());
        // so integrate c_6 itself: (1/5)∫₀⁵ 64 (2 + i x)^{-6} dx, by antiderivative
        let p = MatrixCoefficientParam::new(6).unwrap();
        let got = crate::quadrature::constant_term(|h| p.coeff(h), &GroupElement::identity(), 5.0, 64).unwrap();
        let anti = |x: f64| Complex64::new(0.0, 64.0 / 5.0) * Complex64::new(2.0, x).powi(-5);
        let exact = (anti(5.0) - anti(0.0)) / 5.0;
        assert!((got - exact).norm() < 1e-12, "{got} vs {exact}");
        assert!(got.norm() > 1e-3);
    }

    #[test]
    fn seminorm_behaviour() {
        let s = PoincareSeries::new(6, level(2), 12.0).unwrap();
        let grid = probes();
        let sup = s.sup_norm_check(&grid).unwrap();
        let s0 = s.seminorm_estimate(&EnvelopingWord::empty(), 0.0, &grid).unwrap();
        let max_abs = grid
            .iter()
            .map(|g| s.eval(g).unwrap().value().norm())
            .fold(0.0, f64::max);
        assert!((s0 - max_abs).abs() < 1e-12);
        assert!(s0 <= sup);
        let s2 = s.seminorm_estimate(&EnvelopingWord::empty(), 2.0, &grid).unwrap();
        assert!(s2 <= s0 + 1e-15);
        let e = EnvelopingWord::right(&[crate::discrete_series::Letter::E]).unwrap();
        assert!(s.seminorm_estimate(&e, 0.0, &grid).unwrap().is_finite());
        assert!(s.seminorm_estimate(&e, 0.0, &[]).is_err());
        let left = EnvelopingWord::left(&[crate::discrete_series::Letter::E]).unwrap();
        assert!(s.seminorm_estimate(&left, 0.0, &grid).is_err());
    }

    #[test]
    fn json_shape() {
        let v = eval_truncated(4, level(3), &GroupElement::identity(), 4.0).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        for key in [
            "k",
            "N",
            "g",
            "radius",
            "value_re",
            "value_im",
            "tail_bound",
            "term_count",
        ] {
            assert!(j.get(key).is_some(), "missing {key}");
        }
        assert_eq!(j["g"], serde_json::json!([1.0, 0.0, 0.0, 1.0]));
    }
}
