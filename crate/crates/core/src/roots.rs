//! Root data for a split Cartan subspace: positive roots in the simple-root
//! basis, multiplicities, the half-sum ρ, the Haar density
//! `D(exp H) = ∏ sinh(α(H))^{m(α)}`, and the integrability threshold for
//! `‖g‖^{-m}`.
//!
//! Coefficients are rational so that ρ and `ρ(H_i)` are exact.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::GroupElement;

/// Abstract root data. Vectors `H` are given in the basis `H_1..H_r` dual
/// to the simple roots, so `α(H) = Σ_j α_j · h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSystemSpec {
    rank: usize,
    positive_roots: Vec<Vec<Rational64>>,
    multiplicities: Vec<u32>,
    rho: Vec<Rational64>,
}

#[derive(Serialize, Deserialize)]
struct RootSystemDoc {
    rank: usize,
    positive_roots: Vec<Vec<i64>>,
    multiplicities: Vec<u32>,
}

impl RootSystemSpec {
    pub fn new(rank: usize, positive_roots: Vec<Vec<i64>>, multiplicities: Vec<u32>) -> Result<Self> {
        if rank == 0 {
            return Err(LabError::InvalidSpec("rank must be at least 1".into()));
        }
        if positive_roots.len() != multiplicities.len() {
            return Err(LabError::InvalidSpec(format!(
                "{} roots but {} multiplicities",
                positive_roots.len(),
                multiplicities.len()
            )));
        }
        if let Some(m) = multiplicities.iter().find(|&&m| m == 0) {
            return Err(LabError::InvalidSpec(format!("multiplicity {m} < 1")));
        }
        for root in &positive_roots {
            if root.len() != rank {
                return Err(LabError::InvalidSpec(format!("root {root:?} is not of length {rank}")));
            }
            if root.iter().any(|&c| c < 0) || root.iter().all(|&c| c == 0) {
                return Err(LabError::InvalidSpec(format!("root {root:?} is not positive")));
            }
        }
        for i in 0..rank {
            let simple: Vec<i64> = (0..rank).map(|j| i64::from(i == j)).collect();
            if !positive_roots.contains(&simple) {
                return Err(LabError::InvalidSpec(format!("simple root {} missing", i + 1)));
            }
        }
        let positive_roots: Vec<Vec<Rational64>> = positive_roots
            .into_iter()
            .map(|r| r.into_iter().map(Rational64::from_integer).collect())
            .collect();
        let half = Rational64::new(1, 2);
        let mut rho = vec![Rational64::from_integer(0); rank];
        for (root, &m) in positive_roots.iter().zip(&multiplicities) {
            for (acc, &coef) in rho.iter_mut().zip(root) {
                *acc += half * coef * Rational64::from_integer(i64::from(m));
            }
        }
        Ok(Self {
            rank,
            positive_roots,
            multiplicities,
            rho,
        })
    }

    /// SL₂(ℝ): one positive root with `α(H_t) = t` for
    /// `a_t = diag(e^{t/2}, e^{-t/2})`, multiplicity one, `ρ = α/2`.
    pub fn a1() -> Self {
        Self::new(1, vec![vec![1]], vec![1]).expect("A1 data is valid")
    }

    /// Type A₂ with roots α₁, α₂, α₁+α₂.
    pub fn a2() -> Self {
        Self::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]], vec![1, 1, 1]).expect("A2 data is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: RootSystemDoc = serde_json::from_str(s).map_err(|e| LabError::InvalidSpec(e.to_string()))?;
        Self::new(doc.rank, doc.positive_roots, doc.multiplicities)
    }

    pub fn to_json(&self) -> String {
        let doc = RootSystemDoc {
            rank: self.rank,
            positive_roots: self
                .positive_roots
                .iter()
                .map(|r| r.iter().map(|c| c.to_integer()).collect())
                .collect(),
            multiplicities: self.multiplicities.clone(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn positive_roots(&self) -> &[Vec<Rational64>] {
        &self.positive_roots
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// ρ in the simple-root basis; `ρ(H_i)` is its i-th coefficient.
    pub fn rho(&self) -> &[Rational64] {
        &self.rho
    }

    /// Labels of the dual basis vectors.
    pub fn dual_basis_labels(&self) -> Vec<String> {
        (1..=self.rank).map(|i| format!("H_{i}")).collect()
    }

    fn eval_root(root: &[Rational64], h: &[f64]) -> f64 {
        root.iter()
            .zip(h)
            .map(|(c, x)| (*c.numer() as f64 / *c.denom() as f64) * x)
            .sum()
    }

    pub fn haar_density(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.rank {
            return Err(LabError::Domain(format!(
                "vector has {} coordinates, rank is {}",
                h.len(),
                self.rank
            )));
        }
        if h.iter().any(|&x| !(x >= 0.0)) {
            return Err(LabError::Domain(format!(
                "{h:?} is outside the closed positive chamber"
            )));
        }
        Ok(self
            .positive_roots
            .iter()
            .zip(&self.multiplicities)
            .map(|(root, &m)| Self::eval_root(root, h).sinh().powi(m as i32))
            .product())
    }

    /// `max_i 1/(c·ρ(H_i))`: `∫_G ‖g‖^{-m} dg` converges for every `m`
    /// strictly above this value.
    pub fn integrability_threshold(&self, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(LabError::Domain(format!("norm exponent c = {c} must be positive")));
        }
        let mut worst = f64::NEG_INFINITY;
        for (i, r) in self.rho.iter().enumerate() {
            if *r <= Rational64::from_integer(0) {
                return Err(LabError::InvalidSpec(format!("rho(H_{}) = {r} is not positive", i + 1)));
            }
            let inv = *r.denom() as f64 / (*r.numer() as f64 * c);
            worst = worst.max(inv);
        }
        Ok(worst)
    }
}

/// Constants with `C·a^{cρ} ≤ ‖a‖ ≤ D·a^{dρ}` on the closed positive Weyl
/// chamber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSandwich {
    pub c: f64,
    pub big_c: f64,
    pub d: f64,
    pub big_d: f64,
}

impl NormSandwich {
    /// Check the sandwich for SL₂ on `t ∈ [0, t_max]`, `a_t^ρ = e^{t/2}`.
    pub fn check_sl2(&self, t_max: f64, steps: usize) -> Result<()> {
        if self.c > self.d {
            return Err(LabError::Consistency(format!("c = {} exceeds d = {}", self.c, self.d)));
        }
        for i in 0..=steps {
            let t = t_max * i as f64 / steps as f64;
            let norm = GroupElement::radial(t).group_norm();
            let lower = self.big_c * (self.c * 0.5 * t).exp();
            let upper = self.big_d * (self.d * 0.5 * t).exp();
            let slack = 1e-12 * norm;
            if lower > norm + slack || norm > upper + slack {
                return Err(LabError::Consistency(format!(
                    "sandwich fails at t = {t}: {lower} <= {norm} <= {upper}"
                )));
            }
        }
        Ok(())
    }
}

/// For the operator norm on SL₂ the sandwich is an identity: `‖a_t‖ = a_t^ρ`.
pub fn sl2_norm_sandwich() -> Result<NormSandwich> {
    let s = NormSandwich {
        c: 1.0,
        big_c: 1.0,
        d: 1.0,
        big_d: 1.0,
    };
    s.check_sl2(20.0, 2000)?;
    Ok(s)
}
