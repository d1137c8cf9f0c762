use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::onep::{
    dilate_spacetime, single_particle_map, ChargeLabel, Dims, Gaussian, MassMeasure, MassTruncation,
    OneParticleVector, QuadratureRule, QuadratureSettings, TestFunction,
};
use crate::sectors::ConjugationStructure;
use crate::states::{LambdaGrid, ScaledGenerator, ScalingFamily, VacuumModel};

/// `n(λ) = ⌈log_base(λ₀/λ)⌉` below `λ₀`, and `0` from `λ₀` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleSpec", into = "ScheduleSpec")]
pub struct NSchedule {
    lambda0: f64,
    base: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ScheduleSpec {
    lambda0: f64,
    #[serde(default = "default_base")]
    base: f64,
}

fn default_base() -> f64 {
    2.0
}

impl TryFrom<ScheduleSpec> for NSchedule {
    type Error = Error;
    fn try_from(s: ScheduleSpec) -> Result<Self> {
        NSchedule::new(s.lambda0, s.base)
    }
}

impl From<NSchedule> for ScheduleSpec {
    fn from(s: NSchedule) -> Self {
        ScheduleSpec {
            lambda0: s.lambda0,
            base: s.base,
        }
    }
}

impl Default for NSchedule {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            base: 2.0,
        }
    }
}

impl NSchedule {
    pub fn new(lambda0: f64, base: f64) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(invalid(format!("schedule threshold must be positive, got {lambda0}")));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(invalid(format!("schedule base must exceed 1, got {base}")));
        }
        Ok(Self { lambda0, base })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn n(&self, lambda: f64) -> u32 {
        if lambda >= self.lambda0 {
            return 0;
        }
        // The small offset keeps exact powers of the base on the lower step.
        let x = (self.lambda0 / lambda).ln() / self.base.ln();
        (x - 1e-12).ceil().max(0.0) as u32
    }
}

/// Irrep entry of a free multiplet: name, dimension, name of the conjugate, mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassAssignment {
    pub irrep: String,
    pub conjugate: String,
    pub dim: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeMultipletFactor {
    dims: Dims,
    masses: Vec<f64>,
    labels: Vec<ChargeLabel>,
}

impl FreeMultipletFactor {
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn labels(&self) -> &[ChargeLabel] {
        &self.labels
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
}

/// Repeats each mass `dim v` times; requires `μ(v) = μ(v̄)` across `Δ₂`.
pub fn build_free_factor(dims: Dims, delta2: &[MassAssignment]) -> Result<FreeMultipletFactor> {
    if delta2.is_empty() {
        return Err(invalid("free factor needs at least one irrep"));
    }
    let mut masses = Vec::new();
    let mut labels = Vec::new();
    for v in delta2 {
        if !(v.mass >= 0.0 && v.mass.is_finite()) {
            return Err(invalid(format!("mass of {} must be finite and nonnegative", v.irrep)));
        }
        if v.dim == 0 {
            return Err(invalid(format!("irrep {} has dimension 0", v.irrep)));
        }
        let conj = delta2
            .iter()
            .find(|w| w.irrep == v.conjugate)
            .ok_or_else(|| Error::Conjugation(format!("{} has no conjugate {} in the list", v.irrep, v.conjugate)))?;
        if conj.mass != v.mass {
            return Err(Error::Conjugation(format!(
                "mass function breaks conjugation symmetry: mu({}) = {} but mu({}) = {}",
                v.irrep, v.mass, conj.irrep, conj.mass
            )));
        }
        for c in 0..v.dim {
            masses.push(v.mass);
            labels.push(ChargeLabel::new(v.irrep.clone(), c));
        }
    }
    Ok(FreeMultipletFactor { dims, masses, labels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutzFactor {
    dims: Dims,
    schedule: NSchedule,
    truncation: MassTruncation,
    components: Vec<ChargeLabel>,
    conjugate_pairs: usize,
    real_components: usize,
}

impl LutzFactor {
    pub fn schedule(&self) -> &NSchedule {
        &self.schedule
    }

    pub fn truncation(&self) -> MassTruncation {
        self.truncation
    }

    pub fn components(&self) -> &[ChargeLabel] {
        &self.components
    }

    /// `(m₁, p₁)` with `n₁ = 2m₁ + p₁`.
    pub fn involution_counts(&self) -> (usize, usize) {
        (self.conjugate_pairs, self.real_components)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
}

pub fn build_lutz_factor(
    dims: Dims,
    schedule: NSchedule,
    truncation: MassTruncation,
    delta1: &ConjugationStructure,
) -> Result<LutzFactor> {
    let n = delta1.components.len();
    if n != 2 * delta1.m + delta1.p {
        return Err(Error::Conjugation(format!(
            "{} components do not match 2m + p = {}",
            n,
            2 * delta1.m + delta1.p
        )));
    }
    if n == 0 {
        return Err(invalid("Lutz factor needs at least one component"));
    }
    Ok(LutzFactor {
        dims,
        schedule,
        truncation,
        components: delta1.components.clone(),
        conjugate_pairs: delta1.m,
        real_components: delta1.p,
    })
}

/// A single neutral component, for experiments that do not track charges.
pub fn neutral_lutz_factor(dims: Dims, schedule: NSchedule, truncation: MassTruncation) -> LutzFactor {
    LutzFactor {
        dims,
        schedule,
        truncation,
        components: vec![ChargeLabel::new("trivial", 0)],
        conjugate_pairs: 0,
        real_components: 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    Free(FreeMultipletFactor),
    Lutz(LutzFactor),
}

impl Factor {
    pub fn component_count(&self) -> usize {
        match self {
            Factor::Free(f) => f.masses.len(),
            Factor::Lutz(l) => l.components.len(),
        }
    }

    pub fn label(&self, k: usize) -> Result<&ChargeLabel> {
        let labels = match self {
            Factor::Free(f) => &f.labels,
            Factor::Lutz(l) => &l.components,
        };
        labels
            .get(k)
            .ok_or_else(|| invalid(format!("component {k} out of range (factor has {})", labels.len())))
    }

    pub fn dims(&self) -> Dims {
        match self {
            Factor::Free(f) => f.dims,
            Factor::Lutz(l) => l.dims,
        }
    }

    /// Box power applied to the factor's own generators at scale `λ`.
    pub fn n_box(&self, lambda: f64) -> u32 {
        match self {
            Factor::Free(_) => 0,
            Factor::Lutz(l) => l.schedule.n(lambda),
        }
    }

    pub fn measure(&self, k: usize) -> Result<MassMeasure> {
        self.label(k)?;
        Ok(match self {
            Factor::Free(f) => MassMeasure::PointMass(f.masses[k]),
            Factor::Lutz(l) => MassMeasure::Lebesgue(l.truncation),
        })
    }

    pub fn vacuum_model(&self, k: usize) -> Result<VacuumModel> {
        self.label(k)?;
        Ok(match self {
            Factor::Free(f) => VacuumModel::Free { mass: f.masses[k] },
            Factor::Lutz(l) => VacuumModel::Generalized {
                truncation: l.truncation,
            },
        })
    }
}

/// Ordered tensor product of factors; the vacuum is the product state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductModel {
    pub factors: Vec<Factor>,
}

impl ProductModel {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        let d = factors.first().ok_or_else(|| invalid("product of zero factors"))?.dims();
        if factors.iter().any(|f| f.dims() != d) {
            return Err(invalid("factors live in different dimensions"));
        }
        Ok(Self { factors })
    }

    /// `Π_i ω_i(W(F_i,λ))` for one family per factor (component 0 of each factor).
    pub fn weyl_value(&self, families: &[ScalingFamily], lambda: f64, settings: &QuadratureSettings) -> Result<f64> {
        if families.len() != self.factors.len() {
            return Err(invalid("need exactly one family per factor"));
        }
        let mut v = 1.0;
        for (f, fam) in self.factors.iter().zip(families) {
            v *= crate::states::weyl_at_scale(fam, lambda, &f.vacuum_model(0)?, settings)?;
        }
        Ok(v)
    }
}

/// Charged one-particle states of several generators at scale `λ`, all on one rule:
/// `T_{μ_k}(δ_λ f)` for a free factor, `T(□^{n(λ)} δ_λ f)` with `dρ = dm` for a Lutz factor.
pub fn charged_states(
    factor: &Factor,
    k: usize,
    fs: &[TestFunction],
    lambda: f64,
    settings: &QuadratureSettings,
) -> Result<Vec<OneParticleVector>> {
    let label = factor.label(k)?.clone();
    let scaled: Vec<TestFunction> = fs.iter().map(|f| dilate_spacetime(f, lambda)).collect::<Result<_>>()?;
    let n_box = factor.n_box(lambda);
    let refs: Vec<&TestFunction> = scaled.iter().collect();
    let rule = Arc::new(QuadratureRule::for_functions(
        factor.dims(),
        &refs,
        &factor.measure(k)?,
        n_box,
        settings,
    )?);
    scaled
        .iter()
        .map(|f| single_particle_map(f, &rule, n_box)?.with_charge(label.clone()))
        .collect()
}

pub fn charged_one_particle_state(
    factor: &Factor,
    k: usize,
    f: &TestFunction,
    lambda: f64,
    settings: &QuadratureSettings,
) -> Result<OneParticleVector> {
    Ok(charged_states(factor, k, std::slice::from_ref(f), lambda, settings)?.remove(0))
}

/// Spacetime reference generator: Gaussian of spatial width 0.2 and temporal width 0.01.
///
/// The short time width keeps the mass support broad, which is what makes the growth of
/// `λ⟨H⟩` under the box schedule visible within two decades.
pub fn reference_generator(dims: Dims) -> Result<TestFunction> {
    TestFunction::gaussian(dims, crate::onep::Domain::Spacetime, Gaussian::new(0.2).time_width(0.01))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub lambda: f64,
    pub n_box: u32,
    pub energy: f64,
    pub lambda_energy: f64,
    /// `ln ‖u_λ‖²` of the unnormalized charged state.
    pub log_norm_sq: f64,
}

/// Mean energy of the normalized charged state across the grid.
pub fn charge_energy_diagnostic(
    factor: &Factor,
    k: usize,
    f: &TestFunction,
    grid: &LambdaGrid,
    settings: &QuadratureSettings,
) -> Result<Vec<EnergyRow>> {
    grid.validate()?;
    let threshold = match factor {
        Factor::Free(_) => grid.lambda_max,
        Factor::Lutz(l) => l.schedule.lambda0.min(grid.lambda_max),
    };
    if (threshold / grid.lambda_min).log10() < 2.0 - 1e-9 {
        return Err(invalid("energy diagnostic needs a grid reaching two decades below the threshold"));
    }
    grid.points()
        .par_iter()
        .map(|&lambda| {
            let u = charged_one_particle_state(factor, k, f, lambda, settings)?;
            let e = u.energy();
            if e.zero_vector {
                return Err(invalid(format!("charged state vanishes at lambda = {lambda:.6e}")));
            }
            Ok(EnergyRow {
                lambda,
                n_box: factor.n_box(lambda),
                energy: e.value,
                lambda_energy: lambda * e.value,
                log_norm_sq: u.log_norm_sq(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub lambdas: Vec<f64>,
    pub distances: Vec<f64>,
    /// Largest distance over the last four grid points.
    pub limsup_estimate: f64,
    pub proxy: bool,
}

/// `‖û_λ − v̂_λ‖` between the normalized charged state and the normalized state of the
/// candidate family (a zero candidate counts as the zero vector, distance 1).
pub fn preservation_proxy(
    factor: &Factor,
    k: usize,
    f: &TestFunction,
    candidate: &ScalingFamily,
    settings: &QuadratureSettings,
) -> Result<PreservationReport> {
    let label = factor.label(k)?.clone();
    if !candidate.is_identity() {
        if let Some(c) = candidate.charge() {
            if *c != label {
                return Err(Error::ChargeMismatch(format!(
                    "candidate carries {c:?}, charged state carries {label:?}"
                )));
            }
        }
        if !candidate.is_spacetime() {
            return Err(invalid("preservation candidates are spacetime families"));
        }
    }
    if f.effective_radius(crate::states::LOCALIZATION_TOL) > candidate.localization_radius() * (1.0 + 1e-9) {
        return Err(invalid("candidate region does not contain the generator's region"));
    }
    let lambdas = candidate.grid().points();
    let distances = lambdas
        .par_iter()
        .map(|&lambda| distance_at(factor, k, &label, f, candidate, lambda, settings))
        .collect::<Result<Vec<_>>>()?;
    let n = distances.len();
    let limsup_estimate = distances[n.saturating_sub(4)..].iter().copied().fold(0.0, f64::max);
    Ok(PreservationReport {
        lambdas,
        distances,
        limsup_estimate,
        proxy: true,
    })
}

fn distance_at(
    factor: &Factor,
    k: usize,
    label: &ChargeLabel,
    f: &TestFunction,
    candidate: &ScalingFamily,
    lambda: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let fl = dilate_spacetime(f, lambda)?;
    let n_u = factor.n_box(lambda);
    let (terms, n_v) = match candidate.at(lambda)? {
        ScaledGenerator::Spacetime { terms, n_box } => (terms, n_box),
        ScaledGenerator::Cauchy(_) => (Vec::new(), 0),
    };
    let mut fns: Vec<&TestFunction> = vec![&fl];
    fns.extend(terms.iter().map(|(_, g)| g));
    let rule = Arc::new(QuadratureRule::for_functions(
        factor.dims(),
        &fns,
        &factor.measure(k)?,
        n_u.max(n_v),
        settings,
    )?);
    let u = single_particle_map(&fl, &rule, n_u)?
        .with_charge(label.clone())?
        .normalized()
        .ok_or_else(|| invalid("charged state vanishes"))?;
    let v = if terms.is_empty() {
        None
    } else {
        let parts = terms
            .iter()
            .map(|(c, g)| Ok((*c, single_particle_map(g, &rule, n_v)?.with_charge(label.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        OneParticleVector::combine(&parts)?.normalized()
    };
    Ok(match v {
        None => 1.0,
        Some(v) => {
            let one = Complex64::new(1.0, 0.0);
            OneParticleVector::combine(&[(one, u), (-one, v)])?.norm()
        }
    })
}

/// Checks that cross-component correlators vanish: `⟨u_j, u_k⟩ = 0` for `j ≠ k`.
pub fn component_overlap(
    factor: &Factor,
    j: usize,
    k: usize,
    f: &TestFunction,
    lambda: f64,
    settings: &QuadratureSettings,
) -> Result<Complex64> {
    let a = charged_one_particle_state(factor, j, f, lambda, settings)?;
    let b = charged_one_particle_state(factor, k, f, lambda, settings)?;
    if a.charge() != b.charge() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if a.rule().fingerprint() != b.rule().fingerprint() {
        // Same label but different masses cannot occur inside one factor.
        return Err(Error::RuleMismatch);
    }
    a.inner(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> Dims {
        Dims::three()
    }

    fn u1_pair(m: f64) -> Vec<MassAssignment> {
        vec![
            MassAssignment {
                irrep: "chi_1".into(),
                conjugate: "chi_-1".into(),
                dim: 1,
                mass: m,
            },
            MassAssignment {
                irrep: "chi_-1".into(),
                conjugate: "chi_1".into(),
                dim: 1,
                mass: m,
            },
        ]
    }

    #[test]
    fn schedule_values() {
        let s = NSchedule::default();
        assert_eq!(s.n(1.0), 0);
        assert_eq!(s.n(2.0), 0);
        assert_eq!(s.n(0.5), 1);
        assert_eq!(s.n(0.1), 4);
        assert_eq!(s.n(0.01), 7);
        assert_eq!(s.n(1e-3), 10);
        let mut prev = 0;
        for k in 0..60 {
            let n = s.n(10f64.powf(-k as f64 / 10.0));
            assert!(n >= prev);
            prev = n;
        }
        assert!(NSchedule::new(0.0, 2.0).is_err());
        assert!(NSchedule::new(1.0, 1.0).is_err());
    }

    #[test]
    fn free_factor_bookkeeping() {
        let trivial = vec![MassAssignment {
            irrep: "trivial".into(),
            conjugate: "trivial".into(),
            dim: 1,
            mass: 1.0,
        }];
        assert_eq!(build_free_factor(d3(), &trivial).unwrap().masses(), &[1.0]);
        let f = build_free_factor(d3(), &u1_pair(0.7)).unwrap();
        assert_eq!(f.masses(), &[0.7, 0.7]);
        assert_eq!(f.labels()[0].irrep, "chi_1");
        assert_eq!(f.labels()[1].irrep, "chi_-1");
        let mut bad = u1_pair(0.7);
        bad[1].mass = 0.9;
        match build_free_factor(d3(), &bad) {
            Err(Error::Conjugation(msg)) => assert!(msg.contains("chi_1") && msg.contains("chi_-1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn massless_free_energy_is_scale_invariant() {
        let f = reference_generator(d3()).unwrap();
        let fac = Factor::Free(build_free_factor(d3(), &u1_pair(0.0)).unwrap());
        let grid = LambdaGrid::new(1e-3, 1.0, 1).unwrap();
        let rows = charge_energy_diagnostic(&fac, 0, &f, &grid, &QuadratureSettings::default()).unwrap();
        let first = rows[0].lambda_energy;
        for r in &rows {
            assert!((r.lambda_energy - first).abs() < 1e-10 * first);
        }
    }

    #[test]
    fn lutz_state_at_threshold_is_undamped() {
        let f = reference_generator(d3()).unwrap();
        let s = QuadratureSettings::default();
        let lutz = Factor::Lutz(neutral_lutz_factor(d3(), NSchedule::default(), MassTruncation::Adaptive));
        let u = charged_one_particle_state(&lutz, 0, &f, 1.0, &s).unwrap();
        let rule = Arc::new(
            QuadratureRule::for_functions(d3(), &[&f], &MassMeasure::Lebesgue(MassTruncation::Adaptive), 0, &s)
                .unwrap(),
        );
        let plain = single_particle_map(&f, &rule, 0).unwrap();
        assert!((u.norm_sq() - plain.norm_sq()).abs() < 1e-14 * plain.norm_sq());
    }

    #[test]
    fn preservation_proxy_trivial_cases() {
        let s = QuadratureSettings::default();
        let f = reference_generator(d3()).unwrap();
        let fac = Factor::Free(build_free_factor(d3(), &u1_pair(1.0)).unwrap());
        let grid = LambdaGrid::new(1e-2, 1.0, 2).unwrap();
        let same = ScalingFamily::spacetime_orbit(f.clone(), None, 1.0, grid.clone()).unwrap();
        let r = preservation_proxy(&fac, 0, &f, &same, &s).unwrap();
        assert!(r.distances.iter().all(|d| *d < 1e-10));
        let zero = ScalingFamily::identity(d3(), grid.clone()).unwrap();
        let r = preservation_proxy(&fac, 0, &f, &zero, &s).unwrap();
        assert!(r.distances.iter().all(|d| *d == 1.0));
        let wrong = same.clone().with_charge(ChargeLabel::new("chi_-1", 0));
        assert!(matches!(preservation_proxy(&fac, 0, &f, &wrong, &s), Err(Error::ChargeMismatch(_))));
    }

    #[test]
    fn components_are_orthogonal() {
        let s = QuadratureSettings::default();
        let f = reference_generator(d3()).unwrap();
        let fac = Factor::Free(build_free_factor(d3(), &u1_pair(1.0)).unwrap());
        assert_eq!(component_overlap(&fac, 0, 1, &f, 0.5, &s).unwrap(), Complex64::new(0.0, 0.0));
        assert!(component_overlap(&fac, 0, 0, &f, 0.5, &s).unwrap().re > 0.0);
        assert!(charged_one_particle_state(&fac, 2, &f, 0.5, &s).is_err());
    }
}
