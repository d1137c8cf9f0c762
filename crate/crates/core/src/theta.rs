//! One-particle spectra of the scaled damping maps `Θ_{λβ,λO}`.
//!
//! Generators `f_i` are turned into charged one-particle vectors at scale `λ`, normalized,
//! and whitened by their Gram matrix. The damped matrix `⟨u_i, e^{−λβω} u_j⟩` in that
//! frame has its spectrum in `[0, 1]`; its ℓ_p norms are the one-particle proxy of the
//! p-nuclear norms. Nothing here is a Fock-space nuclear norm.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{charged_states, Factor};
use crate::nuclearity::lp_norm;
use crate::onep::{Dims, Gaussian, Node, OneParticleVector, QuadratureSettings, TestFunction};
use crate::sectors::CharacterTable;
use crate::states::LOCALIZATION_TOL;

/// Gram eigenvalues below this fraction of the largest are dropped before whitening.
pub const GRAM_FLOOR: f64 = 1e-12;

/// Damping must satisfy `sup |f(p) e^{βp₀}| ≤ DOMINATION_LIMIT` on the nodes.
pub const DOMINATION_LIMIT: f64 = 1e6;

pub const PROXY_LABEL: &str = "one-particle proxy";

#[derive(Debug, Clone)]
pub struct GeneratorFamily {
    factor: Factor,
    functions: Vec<TestFunction>,
    components: Vec<usize>,
}

impl GeneratorFamily {
    /// Every generator must fit in the unit region; `components[i]` names the factor
    /// component (charge) carried by generator `i`.
    pub fn new(factor: Factor, functions: Vec<TestFunction>, components: Vec<usize>) -> Result<Self> {
        if functions.is_empty() || functions.len() != components.len() {
            return Err(invalid("need one component index per generator, and at least one generator"));
        }
        for (i, f) in functions.iter().enumerate() {
            if f.dims() != factor.dims() {
                return Err(invalid(format!("generator {i} lives in the wrong dimension")));
            }
            let r = f.effective_radius(LOCALIZATION_TOL);
            if r > 1.0 {
                return Err(invalid(format!("generator {i} has effective radius {r:.4} > 1")));
            }
        }
        for &k in &components {
            factor.label(k)?;
        }
        Ok(Self {
            factor,
            functions,
            components,
        })
    }

    /// All generators in component 0.
    pub fn neutral(factor: Factor, functions: Vec<TestFunction>) -> Result<Self> {
        let n = functions.len();
        Self::new(factor, functions, vec![0; n])
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Normalized charged states at scale `λ`, in generator order. Generators sharing a
    /// component share one quadrature rule.
    pub fn states(&self, lambda: f64, settings: &QuadratureSettings) -> Result<Vec<OneParticleVector>> {
        let mut out: Vec<Option<OneParticleVector>> = vec![None; self.len()];
        let mut comps = self.components.clone();
        comps.sort_unstable();
        comps.dedup();
        for k in comps {
            let idx: Vec<usize> = (0..self.len()).filter(|&i| self.components[i] == k).collect();
            let fs: Vec<TestFunction> = idx.iter().map(|&i| self.functions[i].clone()).collect();
            let states = charged_states(&self.factor, k, &fs, lambda, settings)?;
            for (i, u) in idx.into_iter().zip(states) {
                out[i] = Some(u.normalized().ok_or_else(|| invalid(format!("generator {i} maps to zero")))?);
            }
        }
        Ok(out.into_iter().map(|u| u.expect("every generator assigned")).collect())
    }
}

/// Four radial spacetime Gaussians of different shapes, all inside the unit region.
pub fn reference_generators(dims: Dims) -> Result<Vec<TestFunction>> {
    let shapes = [(0.2, 0.2, 0.0), (0.2, 0.05, 0.0), (0.15, 0.1, 0.2), (0.1, 0.1, -0.3)];
    shapes
        .iter()
        .map(|&(w, tau, t0)| {
            TestFunction::gaussian(
                dims,
                crate::onep::Domain::Spacetime,
                Gaussian::new(w).time_width(tau).time_center(t0),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PNorm {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearitySpectrum {
    pub lambda: f64,
    pub beta: f64,
    /// Non-increasing, in `[0, 1]`.
    pub values: Vec<f64>,
    pub p_norms: Vec<PNorm>,
    pub floored: usize,
    pub total: usize,
    /// Generators removed by gauge averaging before whitening.
    pub annihilated: usize,
    pub n_box: u32,
    pub label: String,
    pub settings: QuadratureSettings,
}

impl NuclearitySpectrum {
    pub fn top(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn p_norm(&self, p: f64) -> f64 {
        self.p_norms
            .iter()
            .find(|n| n.p == p)
            .map(|n| n.value)
            .unwrap_or_else(|| lp_norm(&self.values, p))
    }
}

fn hermitian_matrix(states: &[OneParticleVector], f: impl Fn(usize, usize) -> Result<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = states.len();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let v = f(i, j)?;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    Ok(m)
}

/// Spectrum of `W^* M W` with `W = V Λ^{−1/2}` on the unfloored Gram eigenvectors.
/// `scales` multiplies the columns of `M` (gauge factors); the result is then the list of
/// singular values of the whitened matrix.
fn whitened_spectrum(
    states: &[OneParticleVector],
    multiplier: &(dyn Fn(&Node) -> f64 + Sync),
    scales: &[Complex64],
    lambda: f64,
) -> Result<(Vec<f64>, usize)> {
    let gram = hermitian_matrix(states, |i, j| states[i].inner(&states[j]))?;
    let damped_states: Vec<OneParticleVector> = states
        .iter()
        .map(|u| u.map_nodes(|n| Complex64::new(multiplier(n), 0.0)))
        .collect();
    let damped = hermitian_matrix(states, |i, j| states[i].inner(&damped_states[j]))?;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > GRAM_FLOOR * top)
        .collect();
    let total = states.len();
    let floored = total - keep.len();
    if 2 * floored > total {
        return Err(Error::DegenerateFamily { lambda, floored, total });
    }
    let mut w = DMatrix::from_element(total, keep.len(), Complex64::new(0.0, 0.0));
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..total {
            w[(r, c)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    let scaled = DMatrix::from_fn(total, total, |i, j| damped[(i, j)] * scales[j]);
    let core = w.adjoint() * scaled * &w;
    let mut values: Vec<f64> = core.singular_values().iter().map(|&v| if v > 1.0 && v < 1.0 + 1e-9 { 1.0 } else { v }).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok((values, floored))
}

fn check_scale(lambda: f64, beta: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(invalid("λ and β must be positive and finite"));
    }
    Ok(())
}

fn finish(
    lambda: f64,
    beta: f64,
    values: Vec<f64>,
    floored: usize,
    total: usize,
    annihilated: usize,
    n_box: u32,
    ps: &[f64],
    settings: &QuadratureSettings,
) -> NuclearitySpectrum {
    NuclearitySpectrum {
        lambda,
        beta,
        p_norms: ps.iter().map(|&p| PNorm { p, value: lp_norm(&values, p) }).collect(),
        values,
        floored,
        total,
        annihilated,
        n_box,
        label: PROXY_LABEL.to_string(),
        settings: settings.clone(),
    }
}

pub fn theta_spectrum(
    gen: &GeneratorFamily,
    lambda: f64,
    beta: f64,
    ps: &[f64],
    settings: &QuadratureSettings,
) -> Result<NuclearitySpectrum> {
    check_scale(lambda, beta)?;
    let states = gen.states(lambda, settings)?;
    let ones = vec![Complex64::new(1.0, 0.0); states.len()];
    let damping = MomentumDamping::Exponential { beta };
    let (values, floored) = whitened_spectrum(&states, &|n: &Node| damping.eval(lambda * n.omega), &ones, lambda)?;
    Ok(finish(
        lambda,
        beta,
        values,
        floored,
        states.len(),
        0,
        gen.factor.n_box(lambda),
        ps,
        settings,
    ))
}

/// Spectra over a λ list, computed in parallel and returned in input order.
pub fn theta_trend(
    gen: &GeneratorFamily,
    lambdas: &[f64],
    beta: f64,
    ps: &[f64],
    settings: &QuadratureSettings,
) -> Vec<Result<NuclearitySpectrum>> {
    lambdas
        .par_iter()
        .map(|&l| theta_spectrum(gen, l, beta, ps, settings))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutzDecayReport {
    pub lambdas: Vec<f64>,
    pub top_values: Vec<f64>,
    pub lambda0_top: f64,
    pub probe_lambda: f64,
    pub probe_top: f64,
    /// `probe_top / lambda0_top`.
    pub ratio: f64,
    pub decays: bool,
    /// Top value decreasing along the decade points below `λ₀` present in the list.
    pub decreasing_over_decades: bool,
    pub label: String,
}

/// Top singular values below `λ₀` for a Lutz factor, compared against `λ₀` itself.
pub fn lutz_spectrum_decay(
    gen: &GeneratorFamily,
    lambdas: &[f64],
    beta: f64,
    probe_lambda: f64,
    settings: &QuadratureSettings,
) -> Result<LutzDecayReport> {
    let lambda0 = match gen.factor() {
        Factor::Lutz(l) => l.schedule().lambda0(),
        Factor::Free(_) => return Err(invalid("the decay report needs a Lutz factor")),
    };
    let mut all: Vec<f64> = lambdas.to_vec();
    for extra in [lambda0, probe_lambda] {
        if !all.iter().any(|&l| (l / extra - 1.0).abs() < 1e-12) {
            all.push(extra);
        }
    }
    all.sort_by(|a, b| b.total_cmp(a));
    let spectra = theta_trend(gen, &all, beta, &[], settings)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let top_values: Vec<f64> = spectra.iter().map(|s| s.top()).collect();
    let at = |l: f64| {
        all.iter()
            .position(|&x| (x / l - 1.0).abs() < 1e-12)
            .map(|i| top_values[i])
            .expect("inserted above")
    };
    let lambda0_top = at(lambda0);
    let probe_top = at(probe_lambda);
    let ratio = if lambda0_top > 0.0 { probe_top / lambda0_top } else { f64::NAN };
    let decades: Vec<f64> = all
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= lambda0 * (1.0 + 1e-12) && ((lambda0 / l).log10() - (lambda0 / l).log10().round()).abs() < 1e-9)
        .map(|(i, _)| top_values[i])
        .collect();
    let decreasing_over_decades = decades.len() >= 2 && decades.windows(2).all(|w| w[1] < w[0]);
    Ok(LutzDecayReport {
        lambdas: all,
        top_values,
        lambda0_top,
        probe_lambda,
        probe_top,
        ratio,
        decays: ratio < 0.1,
        decreasing_over_decades,
        label: PROXY_LABEL.to_string(),
    })
}

/// Momentum multipliers `f`, evaluated on the scaled momentum `λp` at each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentumDamping {
    /// `e^{−βp₀}`.
    Exponential { beta: f64 },
    /// `e^{−βp₀ − γp₀²}`.
    Gaussian { beta: f64, gamma: f64 },
    /// `(1 + p₀)^{−k}`, checked against `e^{βp₀}` domination.
    Power { k: f64, beta: f64 },
}

impl MomentumDamping {
    pub fn beta(&self) -> f64 {
        match *self {
            MomentumDamping::Exponential { beta }
            | MomentumDamping::Gaussian { beta, .. }
            | MomentumDamping::Power { beta, .. } => beta,
        }
    }

    pub fn eval(&self, p0: f64) -> f64 {
        match *self {
            MomentumDamping::Exponential { beta } => (-beta * p0).exp(),
            MomentumDamping::Gaussian { beta, gamma } => (-beta * p0 - gamma * p0 * p0).exp(),
            MomentumDamping::Power { k, .. } => (1.0 + p0).powf(-k),
        }
    }

    /// `ln |f(p₀) e^{βp₀}|`, computed without overflow.
    fn log_domination(&self, p0: f64) -> f64 {
        match *self {
            MomentumDamping::Exponential { .. } => 0.0,
            MomentumDamping::Gaussian { gamma, .. } => -gamma * p0 * p0,
            MomentumDamping::Power { k, beta } => beta * p0 - k * (1.0 + p0).ln(),
        }
    }
}

/// Gauge weight `ψ` on the model's finite gauge data. Generator `i` with charge `v` is
/// multiplied by `Σ_g ψ(g) χ_v(g) / dim v`, which is the action of `V̂(ψ)` when `ψ` is a
/// class function.
#[derive(Debug, Clone)]
pub enum GaugeWeight {
    Identity,
    Finite {
        table: Arc<CharacterTable>,
        weights: Vec<Complex64>,
    },
    /// Finitely supported weight on `U(1)`: `(angle, weight)` pairs; charges are parsed from
    /// labels `chi_k`.
    Circle(Vec<(f64, Complex64)>),
}

impl GaugeWeight {
    pub fn uniform(table: Arc<CharacterTable>, order: usize) -> Self {
        GaugeWeight::Finite {
            table,
            weights: vec![Complex64::new(1.0 / order as f64, 0.0); order],
        }
    }

    /// `(dim v/|G|) χ̄_v`: the isotypic projection onto `v`.
    pub fn projector(table: Arc<CharacterTable>, order: usize, irrep: usize) -> Self {
        let d = table.irreps[irrep].dim as f64;
        let weights = (0..order).map(|g| table.character(irrep, g).conj() * (d / order as f64)).collect();
        GaugeWeight::Finite { table, weights }
    }

    pub fn factor(&self, irrep_name: &str) -> Result<Complex64> {
        match self {
            GaugeWeight::Identity => Ok(Complex64::new(1.0, 0.0)),
            GaugeWeight::Finite { table, weights } => {
                let v = table.index_of(irrep_name)?;
                if weights.len() != table.class_of.len() {
                    return Err(invalid("gauge weight length differs from the group order"));
                }
                let s: Complex64 = weights.iter().enumerate().map(|(g, w)| w * table.character(v, g)).sum();
                Ok(s / table.irreps[v].dim as f64)
            }
            GaugeWeight::Circle(points) => {
                let k: i64 = irrep_name
                    .strip_prefix("chi_")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| invalid(format!("cannot read a U(1) charge from {irrep_name}")))?;
                Ok(points
                    .iter()
                    .map(|&(theta, w)| w * Complex64::from_polar(1.0, k as f64 * theta))
                    .sum())
            }
        }
    }
}

/// `f(λP) V̂(ψ)` in place of the plain damping.
pub fn generalized_theta(
    gen: &GeneratorFamily,
    lambda: f64,
    damping: &MomentumDamping,
    gauge: &GaugeWeight,
    ps: &[f64],
    settings: &QuadratureSettings,
) -> Result<NuclearitySpectrum> {
    let beta = damping.beta();
    check_scale(lambda, beta)?;
    let factors: Vec<Complex64> = gen
        .components
        .iter()
        .map(|&k| gauge.factor(&gen.factor.label(k)?.irrep))
        .collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..gen.len()).filter(|&i| factors[i].norm() > 1e-12).collect();
    let annihilated = gen.len() - keep.len();
    let all_states = gen.states(lambda, settings)?;
    let worst = all_states
        .iter()
        .flat_map(|u| u.rule().nodes().iter())
        .map(|n| damping.log_domination(lambda * n.omega))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > DOMINATION_LIMIT.ln() {
        return Err(invalid(format!(
            "damping is not dominated by e^(-βp₀) on the nodes: sup ln|f e^(βp₀)| = {worst:.3}"
        )));
    }
    let n_box = gen.factor.n_box(lambda);
    if keep.is_empty() {
        return Ok(finish(lambda, beta, Vec::new(), 0, 0, annihilated, n_box, ps, settings));
    }
    let states: Vec<OneParticleVector> = keep.iter().map(|&i| all_states[i].clone()).collect();
    let scales: Vec<Complex64> = keep.iter().map(|&i| factors[i]).collect();
    let (values, floored) = whitened_spectrum(&states, &|n: &Node| damping.eval(lambda * n.omega), &scales, lambda)?;
    Ok(finish(lambda, beta, values, floored, states.len(), annihilated, n_box, ps, settings))
}

/// `(Σ_{k>N} s_k^q)^{1/q}`.
pub fn truncation_tail(spectrum: &NuclearitySpectrum, n: usize, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(invalid("q must be positive"));
    }
    Ok(lp_norm(spectrum.values.get(n..).unwrap_or(&[]), q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub eps: f64,
    pub n: usize,
    pub tail: f64,
}

/// Smallest `N` with tail below each `ε`.
pub fn truncation_table(spectrum: &NuclearitySpectrum, q: f64, eps: &[f64]) -> Result<Vec<TruncationRow>> {
    eps.iter()
        .map(|&e| {
            for n in 0..=spectrum.values.len() {
                let tail = truncation_tail(spectrum, n, q)?;
                if tail < e {
                    return Ok(TruncationRow { eps: e, n, tail });
                }
            }
            unreachable!("the empty tail is zero")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_free_factor, neutral_lutz_factor, MassAssignment, NSchedule};
    use crate::onep::MassTruncation;
    use crate::sectors::FinitePair;

    fn free(mass: f64) -> Factor {
        Factor::Free(
            build_free_factor(
                Dims::three(),
                &[MassAssignment {
                    irrep: "trivial".into(),
                    conjugate: "trivial".into(),
                    dim: 1,
                    mass,
                }],
            )
            .unwrap(),
        )
    }

    fn settings() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    #[test]
    fn single_generator_value() {
        let f = reference_generators(Dims::three()).unwrap().remove(0);
        let gen = GeneratorFamily::neutral(free(1.0), vec![f.clone()]).unwrap();
        let s = theta_spectrum(&gen, 0.5, 1.0, &[1.0], &settings()).unwrap();
        let u = gen.states(0.5, &settings()).unwrap().remove(0);
        let d = u.map_nodes(|n| Complex64::new((-0.5 * n.omega).exp(), 0.0));
        let expect = u.inner(&d).unwrap().re / u.norm_sq();
        assert_eq!(s.values.len(), 1);
        assert!((s.values[0] - expect).abs() < 1e-12);
        assert!(s.values[0] > 0.0 && s.values[0] < 1.0);
    }

    #[test]
    fn small_beta_gives_ones_and_beta_monotone() {
        let gen = GeneratorFamily::neutral(free(1.0), reference_generators(Dims::three()).unwrap()).unwrap();
        let s = theta_spectrum(&gen, 1.0, 1e-9, &[], &settings()).unwrap();
        assert_eq!(s.values.len() + s.floored, 4);
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
        let s1 = theta_spectrum(&gen, 0.3, 1.0, &[0.5, 1.0], &settings()).unwrap();
        let s2 = theta_spectrum(&gen, 0.3, 2.0, &[0.5, 1.0], &settings()).unwrap();
        for (a, b) in s1.values.iter().zip(&s2.values) {
            assert!(b < a);
        }
        assert!(s1.p_norm(0.5) >= s1.p_norm(1.0));
        for w in s1.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn generalized_reduces_to_plain() {
        let gen = GeneratorFamily::neutral(free(0.5), reference_generators(Dims::three()).unwrap()).unwrap();
        let a = theta_spectrum(&gen, 0.1, 1.0, &[1.0], &settings()).unwrap();
        let b = generalized_theta(
            &gen,
            0.1,
            &MomentumDamping::Exponential { beta: 1.0 },
            &GaugeWeight::Identity,
            &[1.0],
            &settings(),
        )
        .unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn power_damping_fails_domination() {
        let gen = GeneratorFamily::neutral(free(0.5), reference_generators(Dims::three()).unwrap()).unwrap();
        let r = generalized_theta(
            &gen,
            1.0,
            &MomentumDamping::Power { k: 2.0, beta: 1.0 },
            &GaugeWeight::Identity,
            &[],
            &settings(),
        );
        assert!(r.is_err());
        assert!(generalized_theta(
            &gen,
            1.0,
            &MomentumDamping::Gaussian { beta: 1.0, gamma: 0.1 },
            &GaugeWeight::Identity,
            &[],
            &settings(),
        )
        .is_ok());
    }

    fn z4_family() -> (GeneratorFamily, Arc<CharacterTable>) {
        let pair = FinitePair::named("Z4", &["0"]).unwrap();
        let table = Arc::new(pair.table.clone());
        let masses: Vec<MassAssignment> = (0..4)
            .map(|k| MassAssignment {
                irrep: format!("chi_{k}"),
                conjugate: format!("chi_{}", (4 - k) % 4),
                dim: 1,
                mass: 1.0,
            })
            .collect();
        let factor = Factor::Free(build_free_factor(Dims::three(), &masses).unwrap());
        let f = reference_generators(Dims::three()).unwrap().remove(0);
        let gen = GeneratorFamily::new(factor, vec![f.clone(), f.clone(), f.clone(), f], vec![0, 1, 2, 3]).unwrap();
        (gen, table)
    }

    #[test]
    fn gauge_averaging_selects_charges() {
        let (gen, table) = z4_family();
        let damp = MomentumDamping::Exponential { beta: 1.0 };
        let uni = generalized_theta(&gen, 0.5, &damp, &GaugeWeight::uniform(table.clone(), 4), &[], &settings()).unwrap();
        assert_eq!(uni.annihilated, 3);
        assert_eq!(uni.values.len(), 1);
        let one = table.index_of("chi_1").unwrap();
        let w = GaugeWeight::projector(table.clone(), 4, one);
        assert!((w.factor("chi_1").unwrap() - 1.0).norm() < 1e-12);
        for k in [0, 2, 3] {
            assert!(w.factor(&format!("chi_{k}")).unwrap().norm() < 1e-12);
        }
        let s = generalized_theta(&gen, 0.5, &damp, &w, &[], &settings()).unwrap();
        assert_eq!(s.annihilated, 3);
        // Both surviving spectra come from the same generator with the same mass.
        assert!((s.values[0] - uni.values[0]).abs() < 1e-12);
    }

    #[test]
    fn circle_weight_on_z3_points() {
        let w = GaugeWeight::Circle(
            (0..3)
                .map(|j| (2.0 * std::f64::consts::PI * j as f64 / 3.0, Complex64::new(1.0 / 3.0, 0.0)))
                .collect(),
        );
        assert!((w.factor("chi_3").unwrap() - 1.0).norm() < 1e-12);
        assert!(w.factor("chi_1").unwrap().norm() < 1e-12);
        assert!(w.factor("oops").is_err());
    }

    #[test]
    fn tails() {
        let s = finish(1.0, 1.0, vec![0.5, 0.25, 0.125], 0, 3, 0, 0, &[], &settings());
        assert_eq!(truncation_tail(&s, 3, 0.5).unwrap(), 0.0);
        assert_eq!(truncation_tail(&s, 5, 0.5).unwrap(), 0.0);
        assert!((truncation_tail(&s, 0, 1.0).unwrap() - 0.875).abs() < 1e-15);
        let t = truncation_table(&s, 1.0, &[1.0, 0.3, 0.2, 1e-3]).unwrap();
        assert_eq!(t.iter().map(|r| r.n).collect::<Vec<_>>(), vec![0, 2, 2, 3]);
    }

    #[test]
    fn lutz_boundary_matches_generalized_free_field() {
        let lutz = Factor::Lutz(neutral_lutz_factor(
            Dims::three(),
            NSchedule::default(),
            MassTruncation::Adaptive,
        ));
        let f = reference_generators(Dims::three()).unwrap();
        let gen = GeneratorFamily::neutral(lutz, f).unwrap();
        let s = theta_spectrum(&gen, 1.0, 1.0, &[], &settings()).unwrap();
        assert_eq!(s.n_box, 0);
        assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
