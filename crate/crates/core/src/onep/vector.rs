use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::QuadratureRule;
use super::testfn::{Domain, TestFunction};
use crate::error::{invalid, Error, Result};

/// Charge carried by a one-particle vector: the irrep of the gauge group and the
/// basis index inside the multiplet of that irrep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChargeLabel {
    pub irrep: String,
    pub component: usize,
}

impl ChargeLabel {
    pub fn new(irrep: impl Into<String>, component: usize) -> Self {
        Self {
            irrep: irrep.into(),
            component,
        }
    }
}

/// Amplitudes at the nodes of a quadrature rule, `u(node) = e^{log_scale} · values[node]`.
///
/// The separate scale keeps `(−m²)ⁿ` multipliers with large `n` and large masses
/// representable; whitened or normalized quantities never see it.
#[derive(Debug, Clone)]
pub struct OneParticleVector {
    values: Vec<Complex64>,
    log_scale: f64,
    rule: Arc<QuadratureRule>,
    charge: Option<ChargeLabel>,
}

/// Mean energy of a normalized vector; `zero_vector` marks the `0/0` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub value: f64,
    pub zero_vector: bool,
}

/// On-shell multiplier of `□ⁿ` at mass `m`: `(−m²)ⁿ`.
pub fn box_multiplier(m: f64, n: u32) -> f64 {
    let v = (m * m).powi(n as i32);
    if n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `(−m²)^{n} (2ω_m(p))^{−1/2} f̂(ω_m(p), p)` sampled at the nodes of `rule`.
pub fn single_particle_map(f: &TestFunction, rule: &Arc<QuadratureRule>, n_box: u32) -> Result<OneParticleVector> {
    if f.domain() != Domain::Spacetime {
        return Err(invalid(
            "single-particle map needs spacetime smearing; use the Cauchy-data forms for spatial data",
        ));
    }
    if f.dims() != rule.dims() {
        return Err(invalid("function dimension does not match the quadrature rule"));
    }
    let fourier = f.fourier(rule.p_max())?;
    let m_ref = rule
        .nodes()
        .iter()
        .map(|n| n.mass)
        .fold(0.0, f64::max);
    let (m_ref, log_scale) = if n_box > 0 && m_ref > 0.0 {
        (m_ref, 2.0 * n_box as f64 * m_ref.ln())
    } else {
        (1.0, 0.0)
    };
    let values = rule
        .nodes()
        .iter()
        .map(|node| {
            let mult = box_multiplier(node.mass / m_ref, n_box);
            fourier.eval(node.omega, &node.momentum) * (mult / (2.0 * node.omega).sqrt())
        })
        .collect();
    Ok(OneParticleVector {
        values,
        log_scale,
        rule: Arc::clone(rule),
        charge: None,
    })
}

impl OneParticleVector {
    pub fn from_values(values: Vec<Complex64>, rule: Arc<QuadratureRule>) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(invalid(format!(
                "{} amplitudes for a rule with {} nodes",
                values.len(),
                rule.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("one-particle amplitudes must be finite"));
        }
        Ok(Self {
            values,
            log_scale: 0.0,
            rule,
            charge: None,
        })
    }

    pub fn zero(rule: Arc<QuadratureRule>) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); rule.len()],
            log_scale: 0.0,
            rule,
            charge: None,
        }
    }

    /// Attaches a charge label. Labels are set once; relabelling is refused.
    pub fn with_charge(mut self, label: ChargeLabel) -> Result<Self> {
        if let Some(existing) = &self.charge {
            if *existing != label {
                return Err(Error::ChargeMismatch(format!(
                    "vector already carries {existing:?}, refusing {label:?}"
                )));
            }
        }
        self.charge = Some(label);
        Ok(self)
    }

    pub fn charge(&self) -> Option<&ChargeLabel> {
        self.charge.as_ref()
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    /// Stored amplitudes, to be multiplied by `exp(log_scale())`.
    pub fn raw_values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i] * self.log_scale.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }

    /// Pointwise multiplier `u ↦ k(node) u` (charge and scale preserved).
    pub fn map_nodes(&self, k: impl Fn(&super::quadrature::Node) -> Complex64) -> Self {
        let values = self
            .rule
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(n, v)| k(n) * v)
            .collect();
        Self {
            values,
            log_scale: self.log_scale,
            rule: Arc::clone(&self.rule),
            charge: self.charge.clone(),
        }
    }

    /// `Σ c_k u_k` over vectors sharing one rule and one charge.
    pub fn combine(terms: &[(Complex64, OneParticleVector)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| invalid("empty linear combination"))?;
        let log_scale = terms.iter().map(|(_, u)| u.log_scale).fold(f64::NEG_INFINITY, f64::max);
        let mut values = vec![Complex64::new(0.0, 0.0); first.values.len()];
        for (c, u) in terms {
            if u.rule.fingerprint() != first.rule.fingerprint() || u.values.len() != values.len() {
                return Err(Error::RuleMismatch);
            }
            if u.charge != first.charge {
                return Err(Error::ChargeMismatch("combination mixes charge labels".into()));
            }
            let rel = c * (u.log_scale - log_scale).exp();
            for (acc, v) in values.iter_mut().zip(&u.values) {
                *acc += rel * v;
            }
        }
        Ok(Self {
            values,
            log_scale,
            rule: Arc::clone(&first.rule),
            charge: first.charge.clone(),
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Weighted pairing without the `log_scale` factors: `Σ w ū v`.
    pub(crate) fn raw_inner(&self, other: &Self) -> Result<Complex64> {
        if let (Some(a), Some(b)) = (&self.charge, &other.charge) {
            if a != b {
                // Different multiplet basis vectors e_k are orthogonal.
                return Ok(Complex64::new(0.0, 0.0));
            }
        }
        if self.rule.fingerprint() != other.rule.fingerprint() || self.values.len() != other.values.len() {
            return Err(Error::RuleMismatch);
        }
        Ok(self
            .rule
            .nodes()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(n, (a, b))| n.weight * a.conj() * b)
            .sum())
    }

    /// `⟨u, v⟩ = Σ w ū v`, antilinear in the first slot.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        Ok(self.raw_inner(other)? * (self.log_scale + other.log_scale).exp())
    }

    pub fn norm_sq(&self) -> f64 {
        self.log_norm_sq().exp()
    }

    /// `ln ‖u‖²`; `-∞` for the zero vector. Finite even when `‖u‖²` overflows.
    pub fn log_norm_sq(&self) -> f64 {
        let raw: f64 = self
            .rule
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(n, v)| n.weight * v.norm_sqr())
            .sum();
        raw.ln() + 2.0 * self.log_scale
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `∫ ω_m(p) |u|² / ‖u‖²`.
    pub fn energy(&self) -> Energy {
        let (mut num, mut den) = (0.0, 0.0);
        for (n, v) in self.rule.nodes().iter().zip(&self.values) {
            let a = n.weight * v.norm_sqr();
            num += n.omega * a;
            den += a;
        }
        if den == 0.0 {
            Energy {
                value: 0.0,
                zero_vector: true,
            }
        } else {
            Energy {
                value: num / den,
                zero_vector: false,
            }
        }
    }

    /// Unit vector along `u` (with `log_scale` folded away); `None` for zero.
    pub fn normalized(&self) -> Option<Self> {
        let log_n = self.log_norm_sq();
        if !log_n.is_finite() {
            return None;
        }
        let raw_norm = (log_n - 2.0 * self.log_scale).exp().sqrt();
        let mut out = self.clone();
        for v in &mut out.values {
            *v /= raw_norm;
        }
        out.log_scale = 0.0;
        Some(out)
    }
}
