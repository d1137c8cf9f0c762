use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::testfn::{Dims, Domain, TestFunction, Vec3};
use crate::error::{invalid, Error, Result};

/// Node counts and tolerances for momentum/mass quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    /// Uniform panels on `[0, P_max]`.
    pub radial_panels: usize,
    /// Geometric refinement of the first radial panel towards `p = 0`.
    pub radial_octaves: usize,
    pub nodes_per_panel: usize,
    /// Polar nodes (`s = 3`) or azimuthal nodes (`s = 2`) for non-radial integrands.
    pub angular_nodes: usize,
    pub mass_panels: usize,
    pub mass_octaves: usize,
    pub mass_nodes_per_panel: usize,
    /// `|f̂|²` relative level defining the momentum cutoff.
    pub momentum_tol: f64,
    /// Relative integrand level defining the mass truncation.
    pub mass_tail_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            radial_panels: 16,
            radial_octaves: 30,
            nodes_per_panel: 12,
            angular_nodes: 16,
            mass_panels: 48,
            mass_octaves: 8,
            mass_nodes_per_panel: 8,
            momentum_tol: 1e-30,
            mass_tail_tol: 1e-12,
        }
    }
}

impl QuadratureSettings {
    /// Twice the radial, angular and mass node counts.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_panel: 2 * self.nodes_per_panel,
            angular_nodes: 2 * self.angular_nodes,
            mass_nodes_per_panel: 2 * self.mass_nodes_per_panel,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassTruncation {
    Fixed(f64),
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMeasure {
    PointMass(f64),
    /// `dρ(m) = dm` on `[0, M_max]`.
    Lebesgue(MassTruncation),
}

impl MassMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MassMeasure::PointMass(m) if !(m >= 0.0 && m.is_finite()) => {
                Err(invalid(format!("point mass must be finite and nonnegative, got {m}")))
            }
            MassMeasure::Lebesgue(MassTruncation::Fixed(m)) if !(m > 0.0 && m.is_finite()) => {
                Err(invalid(format!("mass truncation must be positive, got {m}")))
            }
            _ => Ok(()),
        }
    }
}

/// One quadrature node on the mass-shell bundle `(p, m)`; `weight` already
/// contains `(2π)^{-s}`, the Jacobian `|p|^{s-1}` and the mass weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub mass: f64,
    pub momentum: Vec3,
    pub p: f64,
    pub omega: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dims: Dims,
    p_max: f64,
    m_max: Option<f64>,
    radial_only: bool,
    nodes: Vec<Node>,
    fingerprint: u64,
}

impl PartialEq for QuadratureRule {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint && self.nodes.len() == other.nodes.len()
    }
}

/// Composite Gauss–Legendre rule on `[0, b]`: `panels` uniform panels, with the
/// first one split into `octaves` geometric sub-panels accumulating at zero.
/// Every node lies strictly inside `(0, b)`.
pub fn composite_gauss_legendre(b: f64, panels: usize, octaves: usize, npp: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(npp.try_into().expect("nodes per panel must be nonzero"));
    let reference: Vec<(f64, f64)> = gl.iter().map(|(x, w)| (*x, *w)).collect();
    let mut breaks = Vec::with_capacity(panels + octaves + 1);
    let first = b / panels as f64;
    breaks.push(0.0);
    for j in (0..octaves).rev() {
        breaks.push(first * 0.5f64.powi(j as i32 + 1));
    }
    for k in 1..=panels {
        breaks.push(first * k as f64);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for &(x, wt) in &reference {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    (nodes, weights)
}

/// Unit directions with weights summing to the sphere area.
fn directions(dims: Dims, n: usize, radial_only: bool) -> Vec<(Vec3, f64)> {
    if radial_only {
        return vec![([1.0, 0.0, 0.0], dims.sphere_area())];
    }
    match dims.spatial() {
        2 => (0..n)
            .map(|j| {
                let phi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                ([phi.cos(), phi.sin(), 0.0], 2.0 * PI / n as f64)
            })
            .collect(),
        _ => {
            let gl = GaussLegendre::new(n.try_into().expect("angular nodes must be nonzero"));
            let n_phi = 2 * n;
            let mut out = Vec::with_capacity(n * n_phi);
            for (ct, wt) in gl.iter() {
                let st = (1.0 - ct * ct).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                    out.push(([st * phi.cos(), st * phi.sin(), *ct], wt * 2.0 * PI / n_phi as f64));
                }
            }
            out
        }
    }
}

impl QuadratureRule {
    /// Rule with explicit cutoffs. `masses` are `(node, weight)` pairs of the mass measure.
    pub fn new(
        dims: Dims,
        p_max: f64,
        masses: &[(f64, f64)],
        m_max: Option<f64>,
        radial_only: bool,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(invalid(format!("momentum cutoff must be positive, got {p_max}")));
        }
        if masses.is_empty() || masses.iter().any(|(m, w)| !(*m >= 0.0) || !(*w > 0.0)) {
            return Err(invalid("mass nodes must be nonnegative with positive weights"));
        }
        let (radii, rw) = composite_gauss_legendre(
            p_max,
            settings.radial_panels,
            settings.radial_octaves,
            settings.nodes_per_panel,
        );
        let dirs = directions(dims, settings.angular_nodes, radial_only);
        let s = dims.spatial() as i32;
        let norm = (2.0 * PI).powi(-s);
        let mut nodes = Vec::with_capacity(masses.len() * dirs.len() * radii.len());
        for &(m, mw) in masses {
            for (dir, dw) in &dirs {
                for (r, w) in radii.iter().zip(&rw) {
                    nodes.push(Node {
                        mass: m,
                        momentum: [r * dir[0], r * dir[1], r * dir[2]],
                        p: *r,
                        omega: (m * m + r * r).sqrt(),
                        weight: mw * dw * w * r.powi(s - 1) * norm,
                    });
                }
            }
        }
        let mut h = DefaultHasher::new();
        dims.spatial().hash(&mut h);
        p_max.to_bits().hash(&mut h);
        radial_only.hash(&mut h);
        for (m, w) in masses {
            m.to_bits().hash(&mut h);
            w.to_bits().hash(&mut h);
        }
        (settings.radial_panels, settings.radial_octaves, settings.nodes_per_panel, settings.angular_nodes)
            .hash(&mut h);
        Ok(Self {
            dims,
            p_max,
            m_max,
            radial_only,
            nodes,
            fingerprint: h.finish(),
        })
    }

    /// Rule adapted to a set of functions: momentum cutoff from their transforms,
    /// radial reduction when all are radial, and (for `dm`) an adaptively located
    /// mass truncation that accounts for the `m^{4n}` weight of `□ⁿ`.
    pub fn for_functions(
        dims: Dims,
        functions: &[&TestFunction],
        measure: &MassMeasure,
        n_box: u32,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        measure.validate()?;
        let p_max = functions
            .iter()
            .map(|f| f.momentum_cutoff(settings.momentum_tol))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for f in functions {
            if f.dims() != dims {
                return Err(invalid("function dimension does not match the rule"));
            }
            f.check_band(p_max)?;
        }
        let radial_only = functions.iter().all(|f| f.is_radial());
        match *measure {
            MassMeasure::PointMass(m) => Self::new(dims, p_max, &[(m, 1.0)], None, radial_only, settings),
            MassMeasure::Lebesgue(trunc) => {
                let probe = Self::new(dims, p_max, &[(0.0, 1.0)], None, radial_only, settings)?;
                let m_max = locate_mass_truncation(&probe, functions, n_box, trunc, settings)?;
                let (ms, ws) = composite_gauss_legendre(
                    m_max,
                    settings.mass_panels,
                    settings.mass_octaves,
                    settings.mass_nodes_per_panel,
                );
                let masses: Vec<(f64, f64)> = ms.into_iter().zip(ws).collect();
                Self::new(dims, p_max, &masses, Some(m_max), radial_only, settings)
            }
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn m_max(&self) -> Option<f64> {
        self.m_max
    }

    pub fn is_radial(&self) -> bool {
        self.radial_only
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// `Σ w g(node)`.
    pub fn integrate(&self, g: impl Fn(&Node) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * g(n)).sum()
    }
}

/// `ln` of the mass density `m^{4n} ∫ d^s p (2π)^{-s} Σ_f |f̂(ω_m, p)|² / 2ω_m`.
fn log_mass_density(probe: &QuadratureRule, functions: &[&TestFunction], n_box: u32, m: f64) -> f64 {
    let mut acc = 0.0;
    for node in probe.nodes() {
        let omega = (m * m + node.p * node.p).sqrt();
        let amp: f64 = functions
            .iter()
            .map(|f| f.fourier_at(omega, &node.momentum).norm_sqr())
            .sum();
        acc += node.weight * amp / (2.0 * omega);
    }
    if acc <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if n_box == 0 {
        acc.ln()
    } else {
        4.0 * n_box as f64 * m.ln() + acc.ln()
    }
}

fn locate_mass_truncation(
    probe: &QuadratureRule,
    functions: &[&TestFunction],
    n_box: u32,
    trunc: MassTruncation,
    settings: &QuadratureSettings,
) -> Result<f64> {
    if functions.iter().all(|f| f.domain() != Domain::Spacetime) {
        return Err(invalid("mass integration requires spacetime test functions"));
    }
    let log_tol = settings.mass_tail_tol.ln();
    const SCAN: usize = 128;
    let mut m_hi = probe.p_max().max(1.0);
    let mut found = None;
    let mut peak = f64::NEG_INFINITY;
    for _ in 0..200 {
        let scan: Vec<f64> = (1..=SCAN)
            .map(|k| log_mass_density(probe, functions, n_box, m_hi * k as f64 / SCAN as f64))
            .collect();
        peak = scan.iter().copied().fold(peak, f64::max);
        let last = scan[SCAN - 1];
        let decreasing = last < scan[SCAN - 2];
        if peak == f64::NEG_INFINITY {
            found = Some(m_hi);
            break;
        }
        if decreasing && last - peak < log_tol {
            found = Some(m_hi);
            break;
        }
        m_hi *= 2.0;
    }
    let adaptive = found.ok_or_else(|| invalid("mass density does not decay; cannot truncate"))?;
    match trunc {
        MassTruncation::Adaptive => Ok(adaptive),
        MassTruncation::Fixed(m_max) => {
            if m_max >= adaptive {
                return Ok(m_max);
            }
            let tail = log_mass_density(probe, functions, n_box, m_max) - peak;
            if tail < log_tol {
                Ok(m_max)
            } else {
                Err(Error::MassTruncation {
                    m_max,
                    tail_ratio: tail.exp(),
                    suggested: adaptive,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_rule_integrates_polynomials_and_avoids_zero() {
        let (x, w) = composite_gauss_legendre(3.0, 4, 5, 6);
        assert!(x.iter().all(|v| *v > 0.0 && *v < 3.0));
        assert!(w.iter().all(|v| *v > 0.0));
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(5)).sum();
        assert!((int - 3f64.powi(6) / 6.0).abs() < 1e-10);
    }

    #[test]
    fn radial_and_product_rules_agree_on_radial_integrands() {
        let d = Dims::three();
        let s = QuadratureSettings::default();
        let radial = QuadratureRule::new(d, 9.0, &[(0.0, 1.0)], None, true, &s).unwrap();
        let product = QuadratureRule::new(d, 9.0, &[(0.0, 1.0)], None, false, &s).unwrap();
        let g = |n: &Node| (-n.p * n.p).exp();
        let a = radial.integrate(g);
        let b = product.integrate(g);
        // ∫ d³p (2π)^{-3} e^{-p²} = π^{3/2} / (2π)³
        let exact = PI.powf(1.5) / (2.0 * PI).powi(3);
        assert!((a - exact).abs() < 1e-13 * exact);
        assert!((b - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn weights_positive_and_nodes_off_origin() {
        let d = Dims::new(2).unwrap();
        let r = QuadratureRule::new(d, 5.0, &[(0.0, 1.0)], None, false, &QuadratureSettings::default()).unwrap();
        assert!(r.nodes().iter().all(|n| n.weight > 0.0 && n.p > 0.0 && n.omega > 0.0));
    }

    #[test]
    fn point_mass_rejects_negative() {
        assert!(MassMeasure::PointMass(-1.0).validate().is_err());
        assert!(MassMeasure::Lebesgue(MassTruncation::Fixed(0.0)).validate().is_err());
    }

    #[test]
    fn fixed_truncation_too_small_is_rejected_with_suggestion() {
        let d = Dims::three();
        let f = TestFunction::spacetime_gaussian(d, 1.0, 1.0).unwrap();
        let s = QuadratureSettings::default();
        let err = QuadratureRule::for_functions(d, &[&f], &MassMeasure::Lebesgue(MassTruncation::Fixed(1.0)), 2, &s)
            .unwrap_err();
        match err {
            Error::MassTruncation { suggested, m_max, .. } => {
                assert_eq!(m_max, 1.0);
                assert!(suggested > 5.0);
                // The suggestion itself must be accepted.
                QuadratureRule::for_functions(
                    d,
                    &[&f],
                    &MassMeasure::Lebesgue(MassTruncation::Fixed(suggested)),
                    2,
                    &s,
                )
                .unwrap();
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adaptive_truncation_grows_with_box_power() {
        let d = Dims::three();
        let f = TestFunction::spacetime_gaussian(d, 1.0, 1.0).unwrap();
        let s = QuadratureSettings::default();
        let m = |n| {
            QuadratureRule::for_functions(d, &[&f], &MassMeasure::Lebesgue(MassTruncation::Adaptive), n, &s)
                .unwrap()
                .m_max()
                .unwrap()
        };
        assert!(m(6) >= m(0));
        assert!(m(12) > m(0));
    }
}
