//! The weight-k holomorphic discrete series of SL₂(ℝ), seen through its
//! lowest-weight matrix coefficient
//!
//! ```text
//! c_k(g) = 2^k · (a + d + i(b − c))^{-k}
//! ```
//!
//! normalized so `c_k(I) = 1`. The functional `τ(g) = a + d + i(b − c)`
//! satisfies `τ(rot(θ)·g) = e^{-iθ}τ(g)` and `|τ(g)|² = ‖g‖_F² + 2`, which
//! gives bi-K-equivariance of weight `(k, k)` and `|c_k| = cosh(t/2)^{-k}` in
//! Cartan coordinates.
//!
//! Haar measure is `dg = sinh t · dk₁ dt dk₂` with `∫_K dk = 1`; the closed
//! forms below are stated for that normalization.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::GroupElement;
use crate::jet::{Jet, JetMatrix};
use crate::sum::compensated_complex;

/// Longest enveloping-algebra word accepted by [`derivative`].
pub const MAX_WORD_LEN: usize = 4;

/// Lowest K-type weight of the holomorphic discrete series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCoefficientParam {
    k: u32,
}

impl MatrixCoefficientParam {
    pub fn new(k: i64) -> Result<Self> {
        if k < 2 {
            return Err(LabError::Domain(format!("discrete series needs k >= 2, got {k}")));
        }
        let k = u32::try_from(k).map_err(|_| LabError::Domain(format!("weight {k} out of range")))?;
        Ok(Self { k })
    }

    /// Like [`MatrixCoefficientParam::new`] but also requires `c_k ∈ L¹(G)`.
    pub fn integrable(k: i64) -> Result<Self> {
        if k < 3 {
            return Err(LabError::NotIntegrable { k });
        }
        Self::new(k)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn is_integrable(&self) -> bool {
        self.k >= 3
    }

    pub fn normalization(&self) -> f64 {
        2f64.powi(self.k as i32)
    }

    /// `c_k(g)`.
    pub fn coeff(&self, g: &GroupElement) -> Complex64 {
        let w = Complex64::new(g.a() + g.d(), g.b() - g.c());
        (Complex64::new(2.0, 0.0) / w).powu(self.k)
    }

    /// `2^k (‖g‖_F² + 2)^{-k/2}`, equal to `|c_k(g)|`.
    pub fn abs_coeff(&self, g: &GroupElement) -> f64 {
        (4.0 / (g.frobenius_sq() + 2.0)).powf(0.5 * self.k as f64)
    }
}

/// `|c_k|` at Cartan radius `t`: `cosh(t/2)^{-k}`.
pub fn abs_coeff_radial(k: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(LabError::Domain(format!("radial coordinate {t} must be >= 0")));
    }
    Ok((0.5 * t).cosh().powi(-(k as i32)))
}

/// Basis of 𝔰𝔩₂: `H = diag(1, -1)`, `E` strictly upper, `F` strictly lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    H,
    E,
    F,
}

impl Letter {
    fn matrix(self) -> [f64; 4] {
        match self {
            Letter::H => [1.0, 0.0, 0.0, -1.0],
            Letter::E => [0.0, 1.0, 0.0, 0.0],
            Letter::F => [0.0, 0.0, 1.0, 0.0],
        }
    }

    /// `exp(sX)`, exact for this basis.
    pub fn exp(self, s: f64) -> GroupElement {
        match self {
            Letter::H => GroupElement::radial(2.0 * s),
            Letter::E => GroupElement::unipotent(s),
            Letter::F => GroupElement::lower_unipotent(s),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Letter::H => 'H',
            Letter::E => 'E',
            Letter::F => 'F',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `d/ds f(g·exp(sX))`
    Right,
    /// `d/ds f(exp(-sX)·g)`
    Left,
}

/// A word `X_1 X_2 ⋯ X_n` acting as `D_{X_1} D_{X_2} ⋯ D_{X_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopingWord {
    letters: Vec<Letter>,
    side: Side,
}

impl EnvelopingWord {
    pub fn new(letters: Vec<Letter>, side: Side) -> Result<Self> {
        if letters.len() > MAX_WORD_LEN {
            return Err(LabError::WordTooLong {
                len: letters.len(),
                cap: MAX_WORD_LEN,
            });
        }
        Ok(Self { letters, side })
    }

    pub fn right(letters: &[Letter]) -> Result<Self> {
        Self::new(letters.to_vec(), Side::Right)
    }

    pub fn left(letters: &[Letter]) -> Result<Self> {
        Self::new(letters.to_vec(), Side::Left)
    }

    pub fn empty() -> Self {
        Self {
            letters: Vec::new(),
            side: Side::Right,
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Parse `"HE"`, `"F"`, ... (empty string is the empty word).
    pub fn parse(s: &str, side: Side) -> Result<Self> {
        let letters = s
            .chars()
            .map(|ch| match ch {
                'H' | 'h' => Ok(Letter::H),
                'E' | 'e' => Ok(Letter::E),
                'F' | 'f' => Ok(Letter::F),
                other => Err(LabError::Usage(format!("unknown Lie algebra letter '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters, side)
    }

    /// All words of length 1..=max_len over {H, E, F} on one side.
    pub fn all_up_to(max_len: usize, side: Side) -> Vec<EnvelopingWord> {
        let mut out = Vec::new();
        let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
        for _ in 0..max_len.min(MAX_WORD_LEN) {
            layer = layer
                .iter()
                .flat_map(|w| {
                    [Letter::H, Letter::E, Letter::F].into_iter().map(move |l| {
                        let mut w = w.clone();
                        w.push(l);
                        w
                    })
                })
                .collect();
            out.extend(layer.iter().map(|w| EnvelopingWord {
                letters: w.clone(),
                side,
            }));
        }
        out
    }
}

impl fmt::Display for EnvelopingWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Right => "R",
            Side::Left => "L",
        };
        write!(f, "{side}(")?;
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Apply a (possibly empty) word to `c_k` at `g` by multi-dual propagation.
pub(crate) fn apply_word(param: &MatrixCoefficientParam, word: &EnvelopingWord, g: &GroupElement) -> Complex64 {
    let n = word.len();
    let mut m = JetMatrix::from_real(n, g.entries());
    for (i, letter) in word.letters.iter().enumerate() {
        let x = letter.matrix();
        let sign = match word.side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let step = JetMatrix([
            &Jet::real(n, 1.0) + &Jet::infinitesimal(n, i, sign * x[0]),
            Jet::infinitesimal(n, i, sign * x[1]),
            Jet::infinitesimal(n, i, sign * x[2]),
            &Jet::real(n, 1.0) + &Jet::infinitesimal(n, i, sign * x[3]),
        ]);
        m = match word.side {
            Side::Right => m.mul(&step),
            Side::Left => step.mul(&m),
        };
    }
    let [a, b, c, d] = &m.0;
    let tau = &(a + d) + &(b - c).scale(Complex64::new(0.0, 1.0));
    tau.scale(Complex64::new(0.5, 0.0)).powi_neg(param.k).top()
}

/// `D_{X_1} ⋯ D_{X_n} c_k (g)` for a non-empty word.
pub fn derivative(param: &MatrixCoefficientParam, word: &EnvelopingWord, g: &GroupElement) -> Result<Complex64> {
    if word.is_empty() {
        return Err(LabError::EmptyWord);
    }
    Ok(apply_word(param, word, g))
}

/// Rayleigh ratios of the Casimir on `c_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalue_estimate: Complex64,
    pub relative_spread: f64,
    pub sample_count: usize,
    pub skipped: usize,
}

pub const MIN_CASIMIR_SAMPLES: usize = 10;

/// `Ω c_k` with `Ω = H²/2 + EF + FE` acting on the right.
pub fn casimir(param: &MatrixCoefficientParam, g: &GroupElement) -> Complex64 {
    let w = |l: &[Letter]| apply_word(param, &EnvelopingWord::right(l).expect("short word"), g);
    0.5 * w(&[Letter::H, Letter::H]) + w(&[Letter::E, Letter::F]) + w(&[Letter::F, Letter::E])
}

/// Spread is the diameter of the ratio set divided by `|mean|`; when the
/// mean is below `1e-12` in modulus the absolute diameter is reported.
pub fn casimir_report(param: &MatrixCoefficientParam, samples: &[GroupElement]) -> Result<SpectralReport> {
    let ratios: Vec<Option<Complex64>> = samples
        .par_iter()
        .map(|g| {
            let f = param.coeff(g);
            (f.norm() >= 1e-30).then(|| casimir(param, g) / f)
        })
        .collect();
    let usable: Vec<Complex64> = ratios.iter().flatten().copied().collect();
    let skipped = samples.len() - usable.len();
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} sample(s) where |c_k| < 1e-30");
    }
    if usable.len() < MIN_CASIMIR_SAMPLES {
        return Err(LabError::InsufficientSamples {
            usable: usable.len(),
            needed: MIN_CASIMIR_SAMPLES,
        });
    }
    let mean = compensated_complex(&usable) / usable.len() as f64;
    let mut diameter = 0.0f64;
    for (i, x) in usable.iter().enumerate() {
        for y in &usable[i + 1..] {
            diameter = diameter.max((x - y).norm());
        }
    }
    let scale = if mean.norm() >= 1e-12 { mean.norm() } else { 1.0 };
    Ok(SpectralReport {
        eigenvalue_estimate: mean,
        relative_spread: diameter / scale,
        sample_count: usable.len(),
        skipped,
    })
}

/// `‖c_k‖_p = (4/(pk − 2))^{1/p}`.
pub fn lp_norm_closed_form(k: u32, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::Domain(format!("p = {p} must be >= 1")));
    }
    let pk = p * k as f64;
    if pk <= 2.0 {
        return Err(LabError::Divergent(format!("c_{k} is not in L^{p} (pk = {pk} <= 2)")));
    }
    Ok((4.0 / (pk - 2.0)).powf(p.recip()))
}

/// `d(π) = (k − 1)/2`, so that `∫|c_k|² = 1/d(π)`.
pub fn formal_degree(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(LabError::Domain(format!("discrete series needs k >= 2, got {k}")));
    }
    Ok((k as f64 - 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::CartanCoords;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn random_element(rng: &mut ChaCha8Rng, t_max: f64) -> GroupElement {
        CartanCoords {
            theta1: rng.gen_range(0.0..TAU),
            t: rng.gen_range(0.0..t_max),
            theta2: rng.gen_range(0.0..TAU),
        }
        .recompose()
    }

    #[test]
    fn coefficient_examples() {
        for k in [2, 3, 4, 7] {
            let p = MatrixCoefficientParam::new(k).unwrap();
            assert_eq!(p.coeff(&GroupElement::identity()), Complex64::new(1.0, 0.0));
            for theta in [0.3, 1.7, 4.0] {
                let z = p.coeff(&GroupElement::rotation(theta));
                let expect = Complex64::from_polar(1.0, k as f64 * theta);
                assert!((z - expect).norm() < 1e-13);
            }
            let t = 1.3;
            assert_abs_diff_eq!(
                p.coeff(&GroupElement::radial(t)).norm(),
                (0.5 * t).cosh().powi(-(k as i32)),
                epsilon = 1e-14
            );
        }
        assert!(MatrixCoefficientParam::new(1).is_err());
        assert!(matches!(
            MatrixCoefficientParam::integrable(2),
            Err(LabError::NotIntegrable { k: 2 })
        ));
    }

    #[test]
    fn radial_modulus() {
        assert_eq!(abs_coeff_radial(4, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            abs_coeff_radial(4, 2.0).unwrap(),
            1.0f64.cosh().powi(-4),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(abs_coeff_radial(4, 2.0).unwrap(), 0.176378, epsilon = 1e-6);
        assert!(abs_coeff_radial(4, -1.0).is_err());
    }

    #[test]
    fn modulus_identities_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [3u32, 4, 6] {
            let p = MatrixCoefficientParam::new(k as i64).unwrap();
            for _ in 0..1000 {
                let g = random_element(&mut rng, 5.0);
                let z = p.coeff(&g).norm();
                let t = g.cartan().t;
                assert!((z - abs_coeff_radial(k, t).unwrap()).abs() < 1e-12);
                assert!((z - p.abs_coeff(&g)).abs() < 1e-12);
                assert!(z <= (2.0 / g.frobenius_norm()).powi(k as i32) * (1.0 + 1e-12));
                assert!(z * g.group_norm().powi(k as i32) <= 2f64.powi(k as i32) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bi_k_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MatrixCoefficientParam::new(5).unwrap();
        for _ in 0..200 {
            let g = random_element(&mut rng, 3.0);
            let (th, ph) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            let lhs = p.coeff(
                &GroupElement::rotation(th)
                    .multiply(&g)
                    .unwrap()
                    .multiply(&GroupElement::rotation(ph))
                    .unwrap(),
            );
            let rhs = Complex64::from_polar(1.0, 5.0 * (th + ph)) * p.coeff(&g);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_examples_at_identity() {
        let p = MatrixCoefficientParam::new(4).unwrap();
        let id = GroupElement::identity();
        let h = derivative(&p, &EnvelopingWord::right(&[Letter::H]).unwrap(), &id).unwrap();
        assert!(h.norm() < 1e-15);
        let e = derivative(&p, &EnvelopingWord::right(&[Letter::E]).unwrap(), &id).unwrap();
        assert!((e - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert_eq!(derivative(&p, &EnvelopingWord::empty(), &id), Err(LabError::EmptyWord));
        assert!(matches!(
            EnvelopingWord::right(&[Letter::H; 5]),
            Err(LabError::WordTooLong { len: 5, cap: 4 })
        ));
    }

    #[test]
    fn left_and_right_derivatives_of_rotation_generator() {
        // E - F generates rot(-s); c_k(g·rot(-s)) = e^{-iks} c_k(g)
        let p = MatrixCoefficientParam::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_element(&mut rng, 2.0);
        let d = |l, side| derivative(&p, &EnvelopingWord::new(vec![l], side).unwrap(), &g).unwrap();
        let right = d(Letter::E, Side::Right) - d(Letter::F, Side::Right);
        assert!((right - Complex64::new(0.0, -3.0) * p.coeff(&g)).norm() < 1e-12);
        // left: d/ds c(exp(-s(E-F)) g) = d/ds c(rot(s) g) = ik c
        let left = d(Letter::E, Side::Left) - d(Letter::F, Side::Left);
        assert!((left - Complex64::new(0.0, 3.0) * p.coeff(&g)).norm() < 1e-12);
    }

    #[test]
    fn casimir_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let samples: Vec<GroupElement> = (0..100).map(|_| random_element(&mut rng, 2.0)).collect();
        let r4 = casimir_report(&MatrixCoefficientParam::new(4).unwrap(), &samples).unwrap();
        let r6 = casimir_report(&MatrixCoefficientParam::new(6).unwrap(), &samples).unwrap();
        assert!(r4.relative_spread < 1e-8, "{r4:?}");
        assert!(r6.relative_spread < 1e-8, "{r6:?}");
        assert!((r4.eigenvalue_estimate - r6.eigenvalue_estimate).norm() > 1.0);
        assert_eq!(r4.sample_count, 100);
        assert!(casimir_report(&MatrixCoefficientParam::new(4).unwrap(), &samples[..5]).is_err());
        // a "constant function" input is not even a group element
        assert!(GroupElement::from_entries([1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn closed_forms() {
        assert_eq!(lp_norm_closed_form(4, 1.0).unwrap(), 2.0);
        assert_eq!(lp_norm_closed_form(3, 1.0).unwrap(), 4.0);
        assert!(matches!(lp_norm_closed_form(2, 1.0), Err(LabError::Divergent(_))));
        assert_eq!(formal_degree(2).unwrap(), 0.5);
        assert_eq!(formal_degree(4).unwrap(), 1.5);
        for k in 2..20 {
            let n = lp_norm_closed_form(k, 2.0).unwrap();
            assert_abs_diff_eq!(n * n * formal_degree(k).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn word_parsing_and_enumeration() {
        let w = EnvelopingWord::parse("HE", Side::Left).unwrap();
        assert_eq!(w.letters(), &[Letter::H, Letter::E]);
        assert_eq!(w.to_string(), "L(HE)");
        assert!(EnvelopingWord::parse("HX", Side::Right).is_err());
        assert_eq!(EnvelopingWord::all_up_to(2, Side::Right).len(), 12);
    }
}
