//! Non-vanishing certificates for `P_{Γ(N)}(c_k)`.
//!
//! With `C = {g : ‖g‖ ≤ e^{T/2}}` (a `K`-bi-invariant ball of Cartan radius
//! `T/2`), `C·C⁻¹` lies in `{‖g‖ ≤ e^T}`. If `C` carries more than half of
//! the `L¹` mass of `c_k` and `Γ(N)` meets `C·C⁻¹` only in the identity,
//! the series cannot vanish at the identity. The mass condition is
//! `1 − cosh(T/2)^{2−k} > ½`, i.e. `T > 2·acosh(2^{1/(k−2)})`.

use serde::{Deserialize, Serialize};

use crate::arithmetic::{cc_inverse_trivial, gamma_ball, CongruenceLevel, IntElement};
use crate::discrete_series::MatrixCoefficientParam;
use crate::error::{LabError, Result};
use crate::group::GroupElement;
use crate::poincare::PoincareSeries;
use crate::quadrature::radial_sum;

/// Inflation of `T` before the lattice check, so that boundary ties reject.
pub const MASS_RADIUS_MARGIN: f64 = 1e-9;
pub const DEFAULT_PROBE_RADIUS: f64 = 64.0;

const MASS_PANELS: usize = 16;
const MASS_ORDER: usize = 16;

pub fn mass_radius(k: i64) -> Result<f64> {
    let k = MatrixCoefficientParam::integrable(k)?.k();
    let base = 2f64.powf(1.0 / (f64::from(k) - 2.0));
    Ok(2.0 * base.acosh())
}

/// `∫_{t ≤ upper} |c_k|` over `G` (the angular factors integrate to one).
pub fn mass_inside(k: u32, upper: f64) -> f64 {
    let kf = f64::from(k);
    let profile = move |t: f64| (t / 2.0).cosh().powf(-kf);
    radial_sum(&profile, upper, MASS_PANELS, MASS_ORDER).0
}

/// `‖c_k‖₁ = 4/(k − 2)`.
pub fn mass_total(k: u32) -> f64 {
    4.0 / (f64::from(k) - 2.0)
}

/// The fixed probe set for numeric confirmation.
pub fn probe_points() -> Vec<GroupElement> {
    let x = GroupElement::unipotent(0.5).multiply_unchecked(&GroupElement::rotation(1.0 / 3.0));
    vec![GroupElement::identity(), GroupElement::radial(0.5), x]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub g: GroupElement,
    pub radius: f64,
    pub value_abs: f64,
    pub tail_bound: f64,
    /// `|value| − tail_bound`; positive means the series is provably nonzero at `g`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingCertificate {
    pub k: u32,
    #[serde(rename = "N")]
    pub level: u32,
    #[serde(rename = "T")]
    pub mass_radius: f64,
    pub mass_inside: f64,
    pub mass_total: f64,
    pub lattice_trivial: bool,
    pub witness: Option<IntElement>,
    pub verified: bool,
    pub probes: Vec<ProbeResult>,
}

impl NonvanishingCertificate {
    pub fn best_probe_margin(&self) -> Option<f64> {
        self.probes.iter().map(|p| p.margin).reduce(f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    /// Truncation radius for probes; `None` skips the probes.
    pub probe_radius: Option<f64>,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            probe_radius: Some(DEFAULT_PROBE_RADIUS),
        }
    }
}

pub fn certificate(k: i64, level: i64) -> Result<NonvanishingCertificate> {
    certificate_with(k, level, CertificateOptions::default())
}

pub fn certificate_with(k: i64, level: i64, opts: CertificateOptions) -> Result<NonvanishingCertificate> {
    let t = mass_radius(k)?;
    let lvl = CongruenceLevel::new(level)?;
    let k = k as u32;
    let inside = mass_inside(k, t + MASS_RADIUS_MARGIN);
    let total = mass_total(k);
    let lattice = cc_inverse_trivial(lvl, t + MASS_RADIUS_MARGIN)?;
    let probes = match opts.probe_radius {
        Some(r) => run_probes(k, lvl, r)?,
        None => Vec::new(),
    };
    Ok(NonvanishingCertificate {
        k,
        level: lvl.get(),
        mass_radius: t,
        mass_inside: inside,
        mass_total: total,
        lattice_trivial: lattice.trivial,
        witness: lattice.witness,
        verified: inside > total / 2.0 && lattice.trivial,
        probes,
    })
}

fn run_probes(k: u32, level: CongruenceLevel, radius: f64) -> Result<Vec<ProbeResult>> {
    let series = PoincareSeries::new(i64::from(k), level, radius)?;
    probe_points()
        .into_iter()
        .map(|g| {
            let v = series.eval(&g)?;
            let value_abs = v.value().norm();
            Ok(ProbeResult {
                g,
                radius,
                value_abs,
                tail_bound: v.tail_bound,
                margin: value_abs - v.tail_bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLevel {
    #[serde(rename = "N")]
    pub level: u32,
    pub witness: IntElement,
    pub witness_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelThreshold {
    pub k: u32,
    #[serde(rename = "T")]
    pub mass_radius: f64,
    /// Least `N` with `Γ(N) ∩ C·C⁻¹ = {1}`.
    pub threshold: u32,
    pub rejected: Vec<RejectedLevel>,
}

pub fn level_threshold(k: i64) -> Result<LevelThreshold> {
    let t = mass_radius(k)?;
    let mut rejected = Vec::new();
    // a nontrivial γ ∈ Γ(N) has an entry of size ≥ N − 1, so the loop ends
    // before N exceeds e^T + 2
    for n in 1.. {
        let lattice = cc_inverse_trivial(CongruenceLevel::new(n)?, t + MASS_RADIUS_MARGIN)?;
        match (lattice.witness, lattice.witness_norm) {
            (Some(witness), Some(witness_norm)) => rejected.push(RejectedLevel {
                level: n as u32,
                witness,
                witness_norm,
            }),
            _ => {
                return Ok(LevelThreshold {
                    k: k as u32,
                    mass_radius: t,
                    threshold: n as u32,
                    rejected,
                })
            }
        }
    }
    unreachable!()
}

/// Local data at a prime `p | N`: the support of `f_p` is `K_p(p^e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFactor {
    pub p: u64,
    pub exponent: u32,
    pub support: String,
    /// `[SL₂(ℤ_p) : K_p(p^e)] = p^{3e}(1 − p^{−2})`.
    pub index: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdelicCertificate {
    pub certificate: NonvanishingCertificate,
    pub local_factors: Vec<LocalFactor>,
    /// `Π_p index = [SL₂(ℤ) : Γ(N)]`.
    pub global_index: u128,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn local_index(p: u64, e: u32) -> u128 {
    let p = u128::from(p);
    p.pow(3 * e - 2) * (p * p - 1)
}

/// Certificate for the adelic test function `Π_p f_p × c_k` with
/// `f_p = 1_{K_p(N)}`. The lattice condition is recomputed from the
/// `SL₂(ℤ)` ball by imposing each local congruence separately and must
/// agree with the global `Γ(N)` computation.
pub fn adelic_reduce(k: i64, level: i64) -> Result<AdelicCertificate> {
    adelic_reduce_with(k, level, CertificateOptions::default())
}

pub fn adelic_reduce_with(k: i64, level: i64, opts: CertificateOptions) -> Result<AdelicCertificate> {
    let certificate = certificate_with(k, level, opts)?;
    let factors = factorize(u64::from(certificate.level));
    let t = certificate.mass_radius + MASS_RADIUS_MARGIN;
    let bound = t.exp();
    let scan = ((2.0 * t).exp() + (-2.0 * t).exp()).sqrt() * (1.0 + 1e-12);
    let full = gamma_ball(CongruenceLevel::new(1)?, scan)?;
    let locally_trivial = !full.elements.iter().any(|g| {
        !g.is_identity()
            && g.group_norm() <= bound
            && factors.iter().all(|&(p, e)| {
                let q = (p as i64).pow(e);
                (g.a - 1) % q == 0 && g.b % q == 0 && g.c % q == 0 && (g.d - 1) % q == 0
            })
    });
    if locally_trivial != certificate.lattice_trivial {
        return Err(LabError::Consistency(format!(
            "local lattice check {locally_trivial} disagrees with Γ({}) check {}",
            certificate.level, certificate.lattice_trivial
        )));
    }
    let local_factors: Vec<LocalFactor> = factors
        .iter()
        .map(|&(p, e)| LocalFactor {
            p,
            exponent: e,
            support: format!("K_{p}({})", p.pow(e)),
            index: local_index(p, e),
        })
        .collect();
    let global_index = local_factors.iter().map(|f| f.index).product();
    Ok(AdelicCertificate {
        certificate,
        local_factors,
        global_index,
    })
}
