//! Principal congruence subgroups `Γ(N) = {γ ∈ SL₂(ℤ) : γ ≡ I mod N}`.
//!
//! Balls `{γ ∈ Γ(N) : ‖γ‖_F ≤ R}` are enumerated exhaustively: `(a, b, c)`
//! range over their residue classes in `[-R, R]` and `d` is solved from
//! `ad − bc = 1` (or scanned when `a = 0`). Nothing is pruned except by the
//! Frobenius bound itself, so a returned ball is complete.
//!
//! `−I` lies in `Γ(N)` exactly when `N ≤ 2`, and it is kept.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::GroupElement;

/// Default limit on `(a, b, c)` scan candidates.
pub const DEFAULT_SCAN_CAP: u128 = 10_000_000;

static SCAN_CAP: AtomicU64 = AtomicU64::new(DEFAULT_SCAN_CAP as u64);

/// Cap used by [`gamma_ball`] and everything built on it.
pub fn scan_cap() -> u128 {
    u128::from(SCAN_CAP.load(Ordering::Relaxed))
}

pub fn set_scan_cap(cap: u64) {
    SCAN_CAP.store(cap, Ordering::Relaxed);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CongruenceLevel(u32);

impl CongruenceLevel {
    pub fn new(n: i64) -> Result<Self> {
        if n < 1 {
            return Err(LabError::Domain(format!("congruence level must be >= 1, got {n}")));
        }
        u32::try_from(n)
            .map(Self)
            .map_err(|_| LabError::Domain(format!("level {n} out of range")))
    }

    pub fn get(&self) -> u32 {
        self.0
    }

    pub fn contains(&self, g: &IntElement) -> bool {
        let n = i64::from(self.0);
        g.det() == 1
            && (g.a - 1).rem_euclid(n) == 0
            && g.b.rem_euclid(n) == 0
            && g.c.rem_euclid(n) == 0
            && (g.d - 1).rem_euclid(n) == 0
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.0 <= 2
    }
}

/// An integer matrix `[[a, b], [c, d]]`, serialized as `[a, b, c, d]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 4]", into = "[i64; 4]")]
pub struct IntElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl From<[i64; 4]> for IntElement {
    fn from(e: [i64; 4]) -> Self {
        Self {
            a: e[0],
            b: e[1],
            c: e[2],
            d: e[3],
        }
    }
}

impl From<IntElement> for [i64; 4] {
    fn from(g: IntElement) -> Self {
        [g.a, g.b, g.c, g.d]
    }
}

impl fmt::Debug for IntElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl IntElement {
    pub const IDENTITY: IntElement = IntElement { a: 1, b: 0, c: 0, d: 1 };
    pub const MINUS_IDENTITY: IntElement = IntElement {
        a: -1,
        b: 0,
        c: 0,
        d: -1,
    };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn frobenius_sq(&self) -> i64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }

    pub fn multiply(&self, o: &IntElement) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// As a real group element; fails only if `det ≠ 1`.
    pub fn to_group(&self) -> Result<GroupElement> {
        if self.det() != 1 {
            return Err(LabError::NotUnimodular { det: self.det() as f64 });
        }
        GroupElement::new(self.a as f64, self.b as f64, self.c as f64, self.d as f64)
    }

    pub fn group_norm(&self) -> f64 {
        self.to_group().map(|g| g.group_norm()).unwrap_or(f64::NAN)
    }

    /// Representative of `{γ, −γ}`: the one whose first nonzero entry is positive.
    pub fn sign_class_representative(&self) -> bool {
        [self.a, self.b, self.c, self.d]
            .into_iter()
            .find(|&x| x != 0)
            .is_some_and(|x| x > 0)
    }
}

/// Every element of `Γ(N)` with `‖γ‖_F ≤ radius`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeBall {
    #[serde(rename = "N")]
    pub level: CongruenceLevel,
    pub radius: f64,
    pub count: usize,
    pub elements: Vec<IntElement>,
    pub exhaustive: bool,
}

impl LatticeBall {
    pub fn contains(&self, g: &IntElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }
}

fn residue_values(residue: i64, modulus: i64, bound: i64) -> Vec<i64> {
    (-bound..=bound)
        .filter(|x| (x - residue).rem_euclid(modulus) == 0)
        .collect()
}

/// Number of `(a, b, c)` triples the scan visits at most.
pub fn scan_candidates(level: CongruenceLevel, radius: f64) -> u128 {
    let n = i64::from(level.get());
    let r = radius.floor() as i64;
    let na = residue_values(1, n, r).len() as u128;
    let nb = residue_values(0, n, r).len() as u128;
    na * nb * nb
}

pub fn gamma_ball(level: CongruenceLevel, radius: f64) -> Result<LatticeBall> {
    gamma_ball_with_cap(level, radius, scan_cap())
}

pub fn gamma_ball_with_cap(level: CongruenceLevel, radius: f64, cap: u128) -> Result<LatticeBall> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(LabError::Domain(format!("radius {radius} must be finite and >= 0")));
    }
    if radius > 3.0e9 {
        return Err(LabError::Capacity { needed: u128::MAX, cap });
    }
    let needed = scan_candidates(level, radius);
    if needed > cap {
        return Err(LabError::Capacity { needed, cap });
    }
    let n = i64::from(level.get());
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let fits = |s: i64| (s as f64) <= r2;
    let a_vals = residue_values(1, n, r);
    let bc_vals = residue_values(0, n, r);
    let d_vals = &a_vals;

    let mut elements: Vec<IntElement> = a_vals
        .par_iter()
        .flat_map_iter(|&a| {
            let mut found = Vec::new();
            for &b in &bc_vals {
                if !fits(a * a + b * b) {
                    continue;
                }
                for &c in &bc_vals {
                    let abc = a * a + b * b + c * c;
                    if !fits(abc) {
                        continue;
                    }
                    if a != 0 {
                        let num = 1 + b * c;
                        if num % a != 0 {
                            continue;
                        }
                        let d = num / a;
                        if (d - 1).rem_euclid(n) == 0 && fits(abc + d * d) {
                            found.push(IntElement::new(a, b, c, d));
                        }
                    } else if b * c == -1 {
                        for &d in d_vals {
                            if fits(abc + d * d) {
                                found.push(IntElement::new(a, b, c, d));
                            }
                        }
                    }
                }
            }
            found
        })
        .collect();
    elements.sort_unstable();
    Ok(LatticeBall {
        level,
        radius,
        count: elements.len(),
        elements,
        exhaustive: true,
    })
}

/// Frobenius radius large enough to contain the minimizer of `‖γ g‖`.
pub fn quotient_norm_radius(g: &GroupElement) -> f64 {
    g.group_norm() * g.frobenius_norm()
}

/// `inf_{γ ∈ Γ(N)} ‖γ g‖` by exhaustive search.
pub fn quotient_norm(level: CongruenceLevel, g: &GroupElement, search_radius: f64) -> Result<f64> {
    let needed = quotient_norm_radius(g);
    if search_radius < needed {
        return Err(LabError::WidenRadius {
            given: search_radius,
            suggested: needed * (1.0 + 1e-9),
        });
    }
    let ball = gamma_ball(level, search_radius)?;
    Ok(min_translate_norm(&ball, g))
}

/// [`quotient_norm`] with the minimal sufficient search radius.
pub fn quotient_norm_auto(level: CongruenceLevel, g: &GroupElement) -> Result<f64> {
    quotient_norm(level, g, quotient_norm_radius(g) * (1.0 + 1e-9))
}

fn min_translate_norm(ball: &LatticeBall, g: &GroupElement) -> f64 {
    ball.elements
        .iter()
        .filter_map(|gamma| gamma.to_group().ok())
        .map(|gamma| gamma.multiply_unchecked(g).group_norm())
        .fold(g.group_norm(), f64::min)
}

/// Smallest operator norm among nontrivial ball elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormReport {
    pub value: Option<f64>,
    pub witness: Option<IntElement>,
    /// Every nontrivial element of `Γ(N)` outside the result has
    /// `‖γ‖_F > certified_radius`.
    pub certified_radius: f64,
}

pub fn min_nontrivial_opnorm(level: CongruenceLevel, search_radius: f64) -> Result<MinNormReport> {
    if !(search_radius >= 2f64.sqrt()) {
        return Err(LabError::Domain(format!("search radius {search_radius} < sqrt(2)")));
    }
    let ball = gamma_ball(level, search_radius)?;
    let best = smallest_nontrivial(&ball);
    Ok(MinNormReport {
        value: best.map(|(_, v)| v),
        witness: best.map(|(g, _)| g),
        certified_radius: search_radius,
    })
}

/// Smallest norm, ties broken by lexicographic order.
fn smallest_nontrivial(ball: &LatticeBall) -> Option<(IntElement, f64)> {
    ball.elements
        .iter()
        .filter(|g| !g.is_identity())
        .map(|g| (*g, g.group_norm()))
        .fold(None, |best, cand| match best {
            Some((_, v)) if v <= cand.1 => best,
            _ => Some(cand),
        })
}

/// Outcome of testing `Γ(N) ∩ C·C⁻¹ = {1}` for `C = {‖g‖ ≤ e^{T/2}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeTriviality {
    pub trivial: bool,
    pub witness: Option<IntElement>,
    pub witness_norm: Option<f64>,
    /// `e^T`, the operator-norm bound on `C·C⁻¹`.
    pub norm_bound: f64,
    pub scan_radius: f64,
}

pub fn cc_inverse_trivial(level: CongruenceLevel, t: f64) -> Result<LatticeTriviality> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::Domain(format!("mass radius {t} must be positive")));
    }
    let bound = t.exp();
    // ‖γ‖ ≤ e^T implies ‖γ‖_F² ≤ e^{2T} + e^{-2T}
    let scan_radius = ((2.0 * t).exp() + (-2.0 * t).exp()).sqrt() * (1.0 + 1e-12);
    let ball = gamma_ball(level, scan_radius)?;
    let violator = smallest_nontrivial(&ball).filter(|&(_, v)| v <= bound);
    Ok(LatticeTriviality {
        trivial: violator.is_none(),
        witness: violator.map(|(g, _)| g),
        witness_norm: violator.map(|(_, v)| v),
        norm_bound: bound,
        scan_radius,
    })
}
