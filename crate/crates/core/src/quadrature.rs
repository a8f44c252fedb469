//! Integration over SL₂(ℝ) in Cartan coordinates,
//!
//! ```text
//! ∫_G f(g) dg = (2π)^{-2} ∫₀^{2π} ∫₀^∞ ∫₀^{2π} f(rot(θ₁) a_t rot(θ₂)) sinh t dθ₁ dt dθ₂,
//! ```
//!
//! plus radial integrals against `sinh t` and unipotent averages.
//!
//! The radial direction uses composite Gauss–Legendre on `[0, T_max]`; the
//! mass beyond `T_max` is bounded in closed form from a caller-supplied decay
//! envelope. Angles use the periodic trapezoid rule.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::GroupElement;
use crate::sum::{compensated, compensated_complex, deterministic_sum, deterministic_sum_complex};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights of the composite rule on `[lo, hi]` with `panels`
    /// equal sub-intervals, in increasing node order.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_panel_count: usize,
    pub radial_cutoff: f64,
    pub nodes_per_panel: usize,
    pub angular_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_panel_count: 64,
            radial_cutoff: 48.0,
            nodes_per_panel: 16,
            angular_nodes: 32,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_panel_count < 8 {
            return Err(LabError::Resolution(format!(
                "radial_panel_count = {} < 8",
                self.radial_panel_count
            )));
        }
        if self.nodes_per_panel < 4 {
            return Err(LabError::Resolution(format!(
                "nodes_per_panel = {} < 4",
                self.nodes_per_panel
            )));
        }
        if self.angular_nodes < 8 {
            return Err(LabError::Resolution(format!(
                "angular_nodes = {} < 8",
                self.angular_nodes
            )));
        }
        if !(self.radial_cutoff > 0.0 && self.radial_cutoff.is_finite()) {
            return Err(LabError::Resolution(format!(
                "radial_cutoff = {} must be positive",
                self.radial_cutoff
            )));
        }
        Ok(())
    }

    /// Radial spec whose certified tail for `envelope` is at most `tol`,
    /// with panels no wider than one unit of `t`.
    pub fn for_envelope(envelope: DecayEnvelope, tol: f64) -> Result<Self> {
        envelope.check()?;
        if !(tol > 0.0) {
            return Err(LabError::Domain(format!("tolerance {tol} must be positive")));
        }
        let mut cutoff = 8.0;
        while envelope.tail_beyond(cutoff) > tol {
            cutoff *= 1.25;
            if cutoff > 700.0 {
                return Err(LabError::Resolution(format!(
                    "no cutoff below t = 700 reaches tail {tol}"
                )));
            }
        }
        Ok(Self {
            radial_panel_count: (cutoff.ceil() as usize).max(8),
            radial_cutoff: cutoff,
            ..Self::default()
        })
    }

    fn doubled(&self) -> Self {
        Self {
            radial_panel_count: 2 * self.radial_panel_count,
            ..*self
        }
    }
}

/// `|f(t)| ≤ scale · e^{-rate·t}` for `t ≥ T_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    pub scale: f64,
    pub rate: f64,
}

impl DecayEnvelope {
    pub fn new(scale: f64, rate: f64) -> Self {
        Self { scale, rate }
    }

    fn check(&self) -> Result<()> {
        if !(self.rate > 1.0) {
            return Err(LabError::Divergent(format!(
                "decay rate {} does not beat sinh t (need > 1)",
                self.rate
            )));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(LabError::UncertifiedTail(format!(
                "envelope scale {} is not finite",
                self.scale
            )));
        }
        Ok(())
    }

    /// `∫_T^∞ sinh t · scale·e^{-rate·t} dt`, exact.
    pub fn tail_beyond(&self, cutoff: f64) -> f64 {
        let l = self.rate;
        0.5 * self.scale * (((1.0 - l) * cutoff).exp() / (l - 1.0) - (-(1.0 + l) * cutoff).exp() / (l + 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult<T> {
    pub value: T,
    pub discretization_error_estimate: f64,
    pub tail_bound: f64,
}

/// Floor for refinement-based error estimates, relative to `Σ|w·f|`.
const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

/// `∫₀^{upper} sinh t · f(t) dt` by composite Gauss–Legendre, also
/// returning `Σ|w f|` for round-off scaling.
pub fn radial_sum<F>(f: &F, upper: f64, panels: usize, order: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let rule = GaussLegendre::new(order).composite(0.0, upper, panels);
    let terms: Vec<f64> = rule.par_iter().map(|&(t, w)| w * t.sinh() * f(t)).collect();
    let abs: Vec<f64> = terms.iter().map(|x| x.abs()).collect();
    (deterministic_sum(&terms), deterministic_sum(&abs))
}

/// `∫₀^∞ sinh t · f(t) dt` with a certified tail beyond the cutoff.
pub fn integrate_radial<F>(f: F, envelope: DecayEnvelope, spec: &QuadratureSpec) -> Result<IntegralResult<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    envelope.check()?;
    let (coarse, _) = radial_sum(&f, spec.radial_cutoff, spec.radial_panel_count, spec.nodes_per_panel);
    let fine_spec = spec.doubled();
    let (fine, scale) = radial_sum(
        &f,
        fine_spec.radial_cutoff,
        fine_spec.radial_panel_count,
        spec.nodes_per_panel,
    );
    Ok(IntegralResult {
        value: fine,
        discretization_error_estimate: (fine - coarse).abs().max(ROUNDOFF_FLOOR * scale),
        tail_bound: envelope.tail_beyond(spec.radial_cutoff),
    })
}

/// `‖c_k‖_p` from the radial profile `|c_k| = cosh(t/2)^{-k}`; the angular
/// factors integrate to one.
pub fn lp_norm_numeric(k: u32, p: f64, spec: &QuadratureSpec) -> Result<IntegralResult<f64>> {
    let pk = p * k as f64;
    if pk <= 2.0 {
        return Err(LabError::Divergent(format!("c_{k} is not in L^{p} (pk = {pk} <= 2)")));
    }
    // cosh(t/2)^{-pk} <= 2^{pk} e^{-pk t/2}
    let envelope = DecayEnvelope::new(2f64.powf(pk), 0.5 * pk);
    let raw = integrate_radial(|t| (0.5 * t).cosh().powf(-pk), envelope, spec)?;
    let root = |x: f64| x.powf(p.recip());
    let value = root(raw.value);
    Ok(IntegralResult {
        value,
        discretization_error_estimate: (root(raw.value + raw.discretization_error_estimate) - value).abs(),
        tail_bound: root(raw.value + raw.tail_bound) - value,
    })
}

/// `|f(g)| ≤ constant · (2/‖g‖_F)^kappa`, needed to certify the tail of a
/// group integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupEnvelope {
    pub constant: f64,
    pub kappa: f64,
}

fn group_sum<F>(f: &F, spec: &QuadratureSpec, panels: usize) -> (Complex64, Complex64, f64)
where
    F: Fn(&GroupElement) -> Complex64 + Sync,
{
    let n = spec.angular_nodes;
    let rotations: Vec<GroupElement> = (0..n)
        .map(|j| GroupElement::rotation(TAU * j as f64 / n as f64))
        .collect();
    let rule = GaussLegendre::new(spec.nodes_per_panel).composite(0.0, spec.radial_cutoff, panels);
    // per radial node: (full angular mean, half-grid angular mean, |.| scale)
    let rows: Vec<(Complex64, Complex64, f64)> = rule
        .par_iter()
        .map(|&(t, w)| {
            let a = GroupElement::radial(t);
            let mut full = Vec::with_capacity(n * n);
            let mut half = Vec::with_capacity(n * n / 4);
            for (i, k1) in rotations.iter().enumerate() {
                let k1a = k1.multiply_unchecked(&a);
                for (j, k2) in rotations.iter().enumerate() {
                    let v = f(&k1a.multiply_unchecked(k2));
                    full.push(v);
                    if i % 2 == 0 && j % 2 == 0 {
                        half.push(v);
                    }
                }
            }
            let wt = w * t.sinh();
            let mean = compensated_complex(&full) / full.len() as f64;
            let mean_half = compensated_complex(&half) / half.len() as f64;
            let mag = compensated(&full.iter().map(|z| z.norm()).collect::<Vec<_>>()) / full.len() as f64;
            (wt * mean, wt * mean_half, wt.abs() * mag)
        })
        .collect();
    let full: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
    let half: Vec<Complex64> = rows.iter().map(|r| r.1).collect();
    let scale: Vec<f64> = rows.iter().map(|r| r.2).collect();
    (
        deterministic_sum_complex(&full),
        deterministic_sum_complex(&half),
        deterministic_sum(&scale),
    )
}

/// `∫_G f(g) dg` by tensor quadrature in Cartan coordinates.
pub fn integrate_group<F>(
    f: F,
    envelope: Option<GroupEnvelope>,
    spec: &QuadratureSpec,
) -> Result<IntegralResult<Complex64>>
where
    F: Fn(&GroupElement) -> Complex64 + Sync,
{
    spec.validate()?;
    let env = envelope.ok_or_else(|| LabError::UncertifiedTail("no decay envelope supplied".into()))?;
    if !(env.kappa > 2.0) {
        return Err(LabError::Divergent(format!(
            "envelope exponent {} must exceed 2",
            env.kappa
        )));
    }
    // (2/‖g‖_F)^κ ≤ 2^κ e^{-κt/2} because ‖a_t‖_F² = 2 cosh t ≥ e^t
    let radial = DecayEnvelope::new(env.constant * 2f64.powf(env.kappa), 0.5 * env.kappa);
    let (coarse, _, _) = group_sum(&f, spec, spec.radial_panel_count);
    let (fine, fine_half, scale) = group_sum(&f, spec, 2 * spec.radial_panel_count);
    let estimate = (fine - coarse).norm() + (fine - fine_half).norm();
    Ok(IntegralResult {
        value: fine,
        discretization_error_estimate: estimate.max(ROUNDOFF_FLOOR * scale),
        tail_bound: radial.tail_beyond(spec.radial_cutoff),
    })
}

/// `(1/width) ∫₀^{width} f(n(x)·g) dx`.
///
/// `nodes` is the total node count, split into Gauss–Legendre panels of at
/// most eight nodes.
pub fn constant_term<F>(f: F, g: &GroupElement, width: f64, nodes: usize) -> Result<Complex64>
where
    F: Fn(&GroupElement) -> Complex64 + Sync,
{
    let rule = unipotent_rule(width, nodes)?;
    let terms: Vec<Complex64> = rule
        .par_iter()
        .map(|&(x, w)| w * f(&GroupElement::unipotent(x).multiply_unchecked(g)))
        .collect();
    Ok(deterministic_sum_complex(&terms) / width)
}

pub(crate) fn unipotent_rule(width: f64, nodes: usize) -> Result<Vec<(f64, f64)>> {
    if nodes < 4 {
        return Err(LabError::Resolution(format!("{nodes} nodes < 4")));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(LabError::Domain(format!("width {width} must be positive")));
    }
    let order = nodes.min(8);
    let panels = nodes.div_ceil(order);
    Ok(GaussLegendre::new(order).composite(0.0, width, panels))
}
