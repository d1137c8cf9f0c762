//! Quasi-free vacuum states at the Gaussian level.
//!
//! A Cauchy pair `(g, h)` stands for `W(g, h) = exp(i(φ(g) + π(h)))` at time zero;
//! the vacuum of mass `m` assigns it `exp(−q_m(g,h)/4)`. Spacetime smearings are
//! routed through the single-particle map, with `q = 2‖Tf‖²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::NSchedule;
use crate::onep::{
    dilate_cauchy, dilate_spacetime, single_particle_map, ChargeLabel, Dims, Domain, MassMeasure, MassTruncation,
    OneParticleVector, QuadratureRule, QuadratureSettings, TestFunction,
};

/// Localization tolerance used for effective support radii.
pub const LOCALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyDatum {
    g: TestFunction,
    h: TestFunction,
}

impl CauchyDatum {
    pub fn new(g: TestFunction, h: TestFunction) -> Result<Self> {
        if g.domain() != Domain::Spatial || h.domain() != Domain::Spatial {
            return Err(invalid("Cauchy data are spatial functions"));
        }
        if g.dims() != h.dims() {
            return Err(invalid("Cauchy pair mixes dimensions"));
        }
        if !g.is_real() || !h.is_real() {
            return Err(invalid("Cauchy data must be real; split complex data into (Re, Im)"));
        }
        Ok(Self { g, h })
    }

    pub fn zero(dims: Dims) -> Self {
        Self {
            g: TestFunction::zero(dims, Domain::Spatial),
            h: TestFunction::zero(dims, Domain::Spatial),
        }
    }

    pub fn field(g: TestFunction) -> Result<Self> {
        let dims = g.dims();
        Self::new(g, TestFunction::zero(dims, Domain::Spatial))
    }

    pub fn momentum(h: TestFunction) -> Result<Self> {
        let dims = h.dims();
        Self::new(TestFunction::zero(dims, Domain::Spatial), h)
    }

    pub fn g(&self) -> &TestFunction {
        &self.g
    }

    pub fn h(&self) -> &TestFunction {
        &self.h
    }

    pub fn dims(&self) -> Dims {
        self.g.dims()
    }

    pub fn is_zero(&self) -> bool {
        self.g.is_zero() && self.h.is_zero()
    }

    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        let (g, h) = dilate_cauchy(&self.g, &self.h, lambda)?;
        Ok(Self { g, h })
    }

    /// `c·(g + ih)` written again as a real pair.
    pub fn rotate(&self, c: Complex64) -> Result<Self> {
        if c.im == 0.0 {
            let r = Complex64::new(c.re, 0.0);
            return Ok(Self {
                g: self.g.scaled(r),
                h: self.h.scaled(r),
            });
        }
        let re = |x: f64| Complex64::new(x, 0.0);
        let g = TestFunction::combination(vec![(re(c.re), self.g.clone()), (re(-c.im), self.h.clone())])?;
        let h = TestFunction::combination(vec![(re(c.im), self.g.clone()), (re(c.re), self.h.clone())])?;
        Ok(Self { g, h })
    }

    pub fn effective_radius(&self, tol: f64) -> f64 {
        self.g.effective_radius(tol).max(self.h.effective_radius(tol))
    }
}

/// Value of the vacuum quadratic form with its quadrature metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianForm {
    pub q: f64,
    pub mass: MassContext,
    pub nodes: usize,
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassContext {
    Point(f64),
    Lebesgue { m_max: f64 },
}

impl GaussianForm {
    pub fn weyl_value(&self) -> f64 {
        (-self.q / 4.0).exp()
    }
}

fn rule_for_data(data: &[&CauchyDatum], mass: f64, settings: &QuadratureSettings) -> Result<Arc<QuadratureRule>> {
    let dims = data
        .first()
        .map(|d| d.dims())
        .ok_or_else(|| invalid("no Cauchy data supplied"))?;
    let fns: Vec<&TestFunction> = data.iter().flat_map(|d| [&d.g, &d.h]).collect();
    Ok(Arc::new(QuadratureRule::for_functions(
        dims,
        &fns,
        &MassMeasure::PointMass(mass),
        0,
        settings,
    )?))
}

/// `B_m(F₁, F₂) = ∫ d^s p (2π)^{−s} [conj ĝ₁ ĝ₂ / ω + ω conj ĥ₁ ĥ₂]` on a given rule.
fn bilinear_on(rule: &QuadratureRule, a: &CauchyDatum, b: &CauchyDatum) -> Complex64 {
    rule.nodes()
        .iter()
        .map(|n| {
            let ga = a.g.fourier_at(0.0, &n.momentum);
            let gb = b.g.fourier_at(0.0, &n.momentum);
            let ha = a.h.fourier_at(0.0, &n.momentum);
            let hb = b.h.fourier_at(0.0, &n.momentum);
            (ga.conj() * gb / n.omega + n.omega * ha.conj() * hb) * n.weight
        })
        .sum()
}

/// Vacuum form `q_m(g, h)` at mass `m`.
pub fn vacuum_form(datum: &CauchyDatum, m: f64, settings: &QuadratureSettings) -> Result<GaussianForm> {
    if datum.is_zero() {
        return Ok(GaussianForm {
            q: 0.0,
            mass: MassContext::Point(m),
            nodes: 0,
            p_max: 0.0,
        });
    }
    let rule = rule_for_data(&[datum], m, settings)?;
    let q = bilinear_on(&rule, datum, datum).re.max(0.0);
    Ok(GaussianForm {
        q,
        mass: MassContext::Point(m),
        nodes: rule.len(),
        p_max: rule.p_max(),
    })
}

/// Real part of the polarised form, `q_m(F₁+F₂) = q(F₁) + q(F₂) + 2 Re B(F₁,F₂)`.
pub fn bilinear_form(a: &CauchyDatum, b: &CauchyDatum, m: f64, settings: &QuadratureSettings) -> Result<f64> {
    let rule = rule_for_data(&[a, b], m, settings)?;
    Ok(bilinear_on(&rule, a, b).re)
}

/// `σ(F₁, F₂) = ∫ (g₁h₂ − h₁g₂) dx`, evaluated in momentum space.
pub fn symplectic_form(a: &CauchyDatum, b: &CauchyDatum, settings: &QuadratureSettings) -> Result<f64> {
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    let rule = rule_for_data(&[a, b], 0.0, settings)?;
    Ok(rule
        .nodes()
        .iter()
        .map(|n| {
            let p = &n.momentum;
            let v = a.g.fourier_at(0.0, p).conj() * b.h.fourier_at(0.0, p)
                - a.h.fourier_at(0.0, p).conj() * b.g.fourier_at(0.0, p);
            n.weight * v.re
        })
        .sum())
}

/// `ω(W(F₁)⋯W(F_n)) = exp(−(i/2) Σ_{j<k} σ(F_j,F_k)) · exp(−q(ΣF)/4)`.
pub fn weyl_product_expectation(data: &[CauchyDatum], m: f64, settings: &QuadratureSettings) -> Result<Complex64> {
    let live: Vec<&CauchyDatum> = data.iter().filter(|d| !d.is_zero()).collect();
    if live.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let rule = rule_for_data(&live, m, settings)?;
    let mut q = 0.0;
    let mut phase = 0.0;
    for (j, a) in live.iter().enumerate() {
        for (k, b) in live.iter().enumerate() {
            q += bilinear_on(&rule, a, b).re;
            if j < k {
                phase += rule
                    .nodes()
                    .iter()
                    .map(|n| {
                        let p = &n.momentum;
                        let v = a.g.fourier_at(0.0, p).conj() * b.h.fourier_at(0.0, p)
                            - a.h.fourier_at(0.0, p).conj() * b.g.fourier_at(0.0, p);
                        n.weight * v.re
                    })
                    .sum::<f64>();
            }
        }
    }
    Ok(Complex64::from_polar((-q.max(0.0) / 4.0).exp(), -phase / 2.0))
}

/// Geometric grid `λ_k = λ_max · 10^{−k/ppd}`, listed from `λ_max` downwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points_per_decade: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            lambda_min: 1e-3,
            lambda_max: 1.0,
            points_per_decade: 4,
        }
    }
}

impl LambdaGrid {
    pub fn new(lambda_min: f64, lambda_max: f64, points_per_decade: usize) -> Result<Self> {
        let g = Self {
            lambda_min,
            lambda_max,
            points_per_decade,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_min.is_finite()) {
            return Err(invalid(format!("lambda_min must be positive, got {}", self.lambda_min)));
        }
        if !(self.lambda_max <= 1.0 && self.lambda_max > self.lambda_min) {
            return Err(invalid(format!(
                "need lambda_min < lambda_max <= 1, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.points_per_decade == 0 {
            return Err(invalid("points_per_decade must be at least 1"));
        }
        Ok(())
    }

    pub fn decades(&self) -> f64 {
        (self.lambda_max / self.lambda_min).log10()
    }

    pub fn points(&self) -> Vec<f64> {
        let ppd = self.points_per_decade as f64;
        let count = (self.decades() * ppd + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| self.lambda_max * 10f64.powf(-(k as f64) / ppd))
            .collect()
    }

    /// Indices of the grid points one decade apart, starting at `λ_max`.
    pub fn decade_indices(&self) -> Vec<usize> {
        (0..self.points().len())
            .filter(|k| k % self.points_per_decade == 0)
            .collect()
    }

    /// Index of the grid point closest to `lambda` in log scale.
    pub fn index_of(&self, lambda: f64) -> Option<usize> {
        let pts = self.points();
        let (i, best) = pts
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (l.ln() - lambda.ln()).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (best < 1e-9).then_some(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyTerm {
    Cauchy { coef: Complex64, datum: CauchyDatum },
    Spacetime { coef: Complex64, f: TestFunction },
}

/// Generator data at one scale.
#[derive(Debug, Clone)]
pub enum ScaledGenerator {
    Cauchy(Vec<CauchyDatum>),
    Spacetime { terms: Vec<(Complex64, TestFunction)>, n_box: u32 },
}

/// `λ ↦ Σ_k c_k δ_λ(F_k)`, with `□^{n(λ)}` applied to spacetime terms when a
/// schedule is attached. An empty term list is the identity family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFamily {
    dims: Dims,
    terms: Vec<FamilyTerm>,
    schedule: Option<NSchedule>,
    localization_radius: f64,
    grid: LambdaGrid,
    charge: Option<ChargeLabel>,
}

impl ScalingFamily {
    pub fn new(
        dims: Dims,
        terms: Vec<FamilyTerm>,
        schedule: Option<NSchedule>,
        localization_radius: f64,
        grid: LambdaGrid,
    ) -> Result<Self> {
        grid.validate()?;
        if !(localization_radius > 0.0) {
            return Err(invalid("localization radius must be positive"));
        }
        let cauchy = terms.iter().filter(|t| matches!(t, FamilyTerm::Cauchy { .. })).count();
        if cauchy != 0 && cauchy != terms.len() {
            return Err(invalid("a scaling family mixes Cauchy data and spacetime smearings"));
        }
        if cauchy != 0 && schedule.is_some() {
            return Err(invalid("box schedules apply to spacetime smearings only"));
        }
        for t in &terms {
            let d = match t {
                FamilyTerm::Cauchy { datum, .. } => datum.dims(),
                FamilyTerm::Spacetime { f, .. } => {
                    if f.domain() != Domain::Spacetime {
                        return Err(invalid("spacetime term with a spatial function"));
                    }
                    f.dims()
                }
            };
            if d != dims {
                return Err(invalid("family term dimension mismatch"));
            }
        }
        let fam = Self {
            dims,
            terms,
            schedule,
            localization_radius,
            grid,
            charge: None,
        };
        fam.check_localization()?;
        Ok(fam)
    }

    /// Orbit `λ ↦ δ_λ(F)` of one Cauchy pair.
    pub fn dilation_orbit(datum: CauchyDatum, localization_radius: f64, grid: LambdaGrid) -> Result<Self> {
        let dims = datum.dims();
        let coef = Complex64::new(1.0, 0.0);
        Self::new(dims, vec![FamilyTerm::Cauchy { coef, datum }], None, localization_radius, grid)
    }

    pub fn spacetime_orbit(
        f: TestFunction,
        schedule: Option<NSchedule>,
        localization_radius: f64,
        grid: LambdaGrid,
    ) -> Result<Self> {
        let dims = f.dims();
        let coef = Complex64::new(1.0, 0.0);
        Self::new(dims, vec![FamilyTerm::Spacetime { coef, f }], schedule, localization_radius, grid)
    }

    pub fn identity(dims: Dims, grid: LambdaGrid) -> Result<Self> {
        Self::new(dims, Vec::new(), None, 1.0, grid)
    }

    pub fn with_charge(mut self, label: ChargeLabel) -> Self {
        self.charge = Some(label);
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn terms(&self) -> &[FamilyTerm] {
        &self.terms
    }

    pub fn schedule(&self) -> Option<&NSchedule> {
        self.schedule.as_ref()
    }

    pub fn grid(&self) -> &LambdaGrid {
        &self.grid
    }

    pub fn charge(&self) -> Option<&ChargeLabel> {
        self.charge.as_ref()
    }

    pub fn localization_radius(&self) -> f64 {
        self.localization_radius
    }

    pub fn is_identity(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_spacetime(&self) -> bool {
        matches!(self.terms.first(), Some(FamilyTerm::Spacetime { .. }))
    }

    pub fn backends(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = self
            .terms
            .iter()
            .flat_map(|t| match t {
                FamilyTerm::Cauchy { datum, .. } => vec![datum.g().backend(), datum.h().backend()],
                FamilyTerm::Spacetime { f, .. } => vec![f.backend()],
            })
            .filter(|b| *b != "zero")
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn n_box(&self, lambda: f64) -> u32 {
        self.schedule.as_ref().map_or(0, |s| s.n(lambda))
    }

    pub fn at(&self, lambda: f64) -> Result<ScaledGenerator> {
        if self.is_spacetime() {
            let terms = self
                .terms
                .iter()
                .map(|t| match t {
                    FamilyTerm::Spacetime { coef, f } => Ok((*coef, dilate_spacetime(f, lambda)?)),
                    FamilyTerm::Cauchy { .. } => unreachable!("homogeneity checked on construction"),
                })
                .collect::<Result<_>>()?;
            Ok(ScaledGenerator::Spacetime {
                terms,
                n_box: self.n_box(lambda),
            })
        } else {
            let data = self
                .terms
                .iter()
                .map(|t| match t {
                    FamilyTerm::Cauchy { coef, datum } => datum.rotate(*coef)?.dilate(lambda),
                    FamilyTerm::Spacetime { .. } => unreachable!("homogeneity checked on construction"),
                })
                .collect::<Result<_>>()?;
            Ok(ScaledGenerator::Cauchy(data))
        }
    }

    fn radius_at(&self, lambda: f64) -> Result<f64> {
        Ok(match self.at(lambda)? {
            ScaledGenerator::Cauchy(d) => d
                .iter()
                .map(|d| d.effective_radius(LOCALIZATION_TOL))
                .fold(0.0, f64::max),
            ScaledGenerator::Spacetime { terms, .. } => terms
                .iter()
                .map(|(_, f)| f.effective_radius(LOCALIZATION_TOL))
                .fold(0.0, f64::max),
        })
    }

    /// `r_eff(λ) ≤ λ·r` at every grid point.
    pub fn check_localization(&self) -> Result<()> {
        for lambda in self.grid.points() {
            let r = self.radius_at(lambda)?;
            let bound = lambda * self.localization_radius;
            if r > bound * (1.0 + 1e-9) {
                return Err(invalid(format!(
                    "family leaves its region at lambda = {lambda:.6e}: r_eff = {r:.6e} > {bound:.6e}"
                )));
            }
        }
        Ok(())
    }
}

/// Vacuum context in which a family is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VacuumModel {
    /// Free field of one mass; accepts Cauchy data and spacetime smearings.
    Free { mass: f64 },
    /// Generalized free field with `dρ(m) = dm`; spacetime smearings only.
    Generalized { truncation: MassTruncation },
}

impl VacuumModel {
    fn measure(&self) -> MassMeasure {
        match *self {
            VacuumModel::Free { mass } => MassMeasure::PointMass(mass),
            VacuumModel::Generalized { truncation } => MassMeasure::Lebesgue(truncation),
        }
    }
}

/// One-particle vector `Σ c_k T(□ⁿ f_k)` on a rule adapted to all terms.
pub fn spacetime_vector(
    terms: &[(Complex64, TestFunction)],
    n_box: u32,
    measure: &MassMeasure,
    settings: &QuadratureSettings,
) -> Result<OneParticleVector> {
    let (_, first) = terms.first().ok_or_else(|| invalid("no spacetime terms"))?;
    let fns: Vec<&TestFunction> = terms.iter().map(|(_, f)| f).collect();
    let rule = Arc::new(QuadratureRule::for_functions(first.dims(), &fns, measure, n_box, settings)?);
    let parts = terms
        .iter()
        .map(|(c, f)| Ok((*c, single_particle_map(f, &rule, n_box)?)))
        .collect::<Result<Vec<_>>>()?;
    OneParticleVector::combine(&parts)
}

/// Vacuum form of the scale-`λ` generator `W(Σ_k F_k)`. For spacetime data the form
/// is `2‖u‖²` and is returned on a log scale as well, since it may overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleForm {
    pub lambda: f64,
    pub q: f64,
    pub log_q: f64,
    pub n_box: u32,
}

impl ScaleForm {
    pub fn weyl_value(&self) -> f64 {
        (-self.q / 4.0).exp()
    }
}

pub fn form_at_scale(
    family: &ScalingFamily,
    lambda: f64,
    model: &VacuumModel,
    settings: &QuadratureSettings,
) -> Result<ScaleForm> {
    let n_box = family.n_box(lambda);
    if family.is_identity() {
        return Ok(ScaleForm {
            lambda,
            q: 0.0,
            log_q: f64::NEG_INFINITY,
            n_box,
        });
    }
    match family.at(lambda)? {
        ScaledGenerator::Cauchy(data) => {
            let mass = match *model {
                VacuumModel::Free { mass } => mass,
                VacuumModel::Generalized { .. } => {
                    return Err(invalid("Cauchy data need a fixed-mass vacuum"));
                }
            };
            let live: Vec<&CauchyDatum> = data.iter().filter(|d| !d.is_zero()).collect();
            if live.is_empty() {
                return Ok(ScaleForm {
                    lambda,
                    q: 0.0,
                    log_q: f64::NEG_INFINITY,
                    n_box,
                });
            }
            let rule = rule_for_data(&live, mass, settings)?;
            let mut q = 0.0;
            for a in &live {
                for b in &live {
                    q += bilinear_on(&rule, a, b).re;
                }
            }
            let q = q.max(0.0);
            Ok(ScaleForm {
                lambda,
                q,
                log_q: q.ln(),
                n_box,
            })
        }
        ScaledGenerator::Spacetime { terms, n_box } => {
            let u = spacetime_vector(&terms, n_box, &model.measure(), settings)?;
            let log_q = std::f64::consts::LN_2 + u.log_norm_sq();
            Ok(ScaleForm {
                lambda,
                q: log_q.exp(),
                log_q,
                n_box,
            })
        }
    }
}

/// `ω(W(F_λ)) = exp(−q(F_λ)/4) ∈ (0, 1]`.
pub fn weyl_at_scale(
    family: &ScalingFamily,
    lambda: f64,
    model: &VacuumModel,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(form_at_scale(family, lambda, model, settings)?.weyl_value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLimitReport {
    pub lambdas: Vec<f64>,
    pub forms: Vec<f64>,
    pub log_forms: Vec<f64>,
    pub values: Vec<f64>,
    /// Last grid value; no extrapolation is attempted.
    pub limit_candidate: f64,
    /// Largest successive difference over the last four grid points.
    pub cauchy_defect: f64,
    /// The form grows strictly over every decade and by at least a factor 100 overall.
    pub diverging: bool,
    /// Successive differences change sign more than once beyond tolerance.
    pub oscillating: bool,
}

const OSCILLATION_TOL: f64 = 1e-9;

pub fn scaling_limit_estimate(
    family: &ScalingFamily,
    model: &VacuumModel,
    settings: &QuadratureSettings,
) -> Result<ScalingLimitReport> {
    let grid = family.grid();
    let lambdas = grid.points();
    if lambdas.len() < 8 || grid.decades() < 3.0 - 1e-9 {
        return Err(invalid(format!(
            "scaling-limit estimate needs >= 8 points over >= 3 decades, got {} points over {:.3}",
            lambdas.len(),
            grid.decades()
        )));
    }
    let forms: Vec<ScaleForm> = lambdas
        .par_iter()
        .map(|&l| form_at_scale(family, l, model, settings))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = forms.iter().map(|f| f.weyl_value()).collect();
    let n = values.len();
    let cauchy_defect = values[n - 4..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let decades = grid.decade_indices();
    let log_q: Vec<f64> = forms.iter().map(|f| f.log_q).collect();
    let diverging = decades.windows(2).all(|w| log_q[w[1]] > log_q[w[0]])
        && log_q[n - 1] - log_q[0] > 100f64.ln();
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| d.abs() > OSCILLATION_TOL).collect();
    let sign_changes = diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    Ok(ScalingLimitReport {
        limit_candidate: values[n - 1],
        cauchy_defect,
        diverging,
        oscillating: sign_changes > 1,
        forms: forms.iter().map(|f| f.q).collect(),
        log_forms: log_q,
        values,
        lambdas,
    })
}

/// Probe-restricted proxy for the local distance of two vacua:
/// `sup_F |ω^{(m₁)}(W(δ_λ F)) − ω^{(m₂)}(W(δ_λ F))|` over the probe family.
pub fn local_state_distance(
    m1: f64,
    m2: f64,
    lambda: f64,
    probes: &[CauchyDatum],
    settings: &QuadratureSettings,
) -> Result<f64> {
    if probes.is_empty() {
        return Err(invalid("empty probe family"));
    }
    if m1 == m2 {
        return Ok(0.0);
    }
    let mut sup = 0.0f64;
    for p in probes {
        let d = p.dilate(lambda)?;
        let a = vacuum_form(&d, m1, settings)?.weyl_value();
        let b = vacuum_form(&d, m2, settings)?.weyl_value();
        sup = sup.max((a - b).abs());
    }
    Ok(sup)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationCheck {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// Product vacuum on `W(F_A ⊕ F_B)` against the product of the factor values.
///
/// The one-particle space of the product is the orthogonal direct sum, so the product
/// form is `q_A + q_B` (cross terms vanish between factors); the factor values are
/// evaluated separately in their own models.
pub fn product_factorization(
    model_a: &VacuumModel,
    model_b: &VacuumModel,
    fa: &ScalingFamily,
    fb: &ScalingFamily,
    lambda: f64,
    settings: &QuadratureSettings,
) -> Result<FactorizationCheck> {
    let qa = form_at_scale(fa, lambda, model_a, settings)?;
    let qb = form_at_scale(fb, lambda, model_b, settings)?;
    let lhs = (-(qa.q + qb.q) / 4.0).exp();
    let rhs = qa.weyl_value() * qb.weyl_value();
    Ok(FactorizationCheck {
        lambda,
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    })
}

/// Centred Gaussian probe `A e^{−|x|²/2w²}`, with `A = (2π w²)^{−s/2}` so that `ĝ(0) = 1`.
pub fn unit_gaussian(dims: Dims, width: f64) -> Result<TestFunction> {
    let amp = (2.0 * PI * width * width).powf(-(dims.spatial() as f64) / 2.0);
    TestFunction::gaussian(dims, Domain::Spatial, crate::onep::Gaussian::new(width).real_amplitude(amp))
}

/// Default Cauchy probe set: field-only, momentum-only and a mixed off-centre pair.
pub fn reference_probes(dims: Dims) -> Result<Vec<CauchyDatum>> {
    let g = unit_gaussian(dims, 1.0)?;
    let shifted = TestFunction::gaussian(
        dims,
        Domain::Spatial,
        crate::onep::Gaussian::new(0.8)
            .center([0.3, -0.2, 0.0])
            .real_amplitude((2.0 * PI * 0.64f64).powf(-(dims.spatial() as f64) / 2.0)),
    )?;
    Ok(vec![
        CauchyDatum::field(g.clone())?,
        CauchyDatum::momentum(g.clone())?,
        CauchyDatum::new(g, shifted)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn d3() -> Dims {
        Dims::three()
    }

    fn settings() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    #[test]
    fn zero_datum_has_unit_weyl_value() {
        let f = vacuum_form(&CauchyDatum::zero(d3()), 1.0, &settings()).unwrap();
        assert_eq!(f.q, 0.0);
        assert_eq!(f.weyl_value(), 1.0);
    }

    #[test]
    fn massless_gaussian_form_closed_value() {
        // ĝ(p) = e^{−p²/2}: q₀ = (2π)^{−3}·4π·∫ p e^{−p²} dp = 1/(4π²).
        let g = unit_gaussian(d3(), 1.0).unwrap();
        let f = vacuum_form(&CauchyDatum::field(g).unwrap(), 0.0, &settings()).unwrap();
        let exact = 1.0 / (4.0 * PI * PI);
        assert!((f.q - exact).abs() < 1e-13 * exact, "{} vs {exact}", f.q);
        assert!((f.weyl_value() - (-1.0 / (16.0 * PI * PI)).exp()).abs() < 1e-14);
    }

    #[test]
    fn form_monotone_in_mass() {
        let g = unit_gaussian(d3(), 1.0).unwrap();
        let field = CauchyDatum::field(g.clone()).unwrap();
        let mom = CauchyDatum::momentum(g).unwrap();
        let qf: Vec<f64> = [0.0, 1.0, 2.0].iter().map(|&m| vacuum_form(&field, m, &settings()).unwrap().q).collect();
        let qm: Vec<f64> = [0.0, 1.0, 2.0].iter().map(|&m| vacuum_form(&mom, m, &settings()).unwrap().q).collect();
        assert!(qf[0] > qf[1] && qf[1] > qf[2]);
        assert!(qm[0] < qm[1] && qm[1] < qm[2]);
    }

    #[test]
    fn cross_term_vanishes_for_real_pairs() {
        // q(g, h) = q(g, 0) + q(0, h) for real data.
        for d in reference_probes(d3()).unwrap() {
            let q = vacuum_form(&d, 0.7, &settings()).unwrap().q;
            let qg = vacuum_form(&CauchyDatum::field(d.g().clone()).unwrap(), 0.7, &settings()).unwrap().q;
            let qh = vacuum_form(&CauchyDatum::momentum(d.h().clone()).unwrap(), 0.7, &settings()).unwrap().q;
            assert!((q - qg - qh).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn mass_scaling_covariance_and_symplectic_invariance() {
        let probes = reference_probes(d3()).unwrap();
        for lam in [0.1, 0.5, 2.0] {
            for p in &probes {
                let dl = p.dilate(lam).unwrap();
                for m in [0.0, 1.0] {
                    let a = vacuum_form(&dl, m, &settings()).unwrap().q;
                    let b = vacuum_form(p, lam * m, &settings()).unwrap().q;
                    assert!((a - b).abs() < 1e-10 * b, "lam={lam} m={m}: {a} vs {b}");
                }
            }
            let s0 = symplectic_form(&probes[0], &probes[1], &settings()).unwrap();
            let s1 = symplectic_form(&probes[0].dilate(lam).unwrap(), &probes[1].dilate(lam).unwrap(), &settings())
                .unwrap();
            assert!((s0 - s1).abs() < 1e-10 * s0.abs());
        }
    }

    #[test]
    fn symplectic_form_matches_position_space_overlap() {
        // g = unit Gaussian width 1, h = unit Gaussian width 1: ∫ g h dx = (4π)^{−3/2}.
        let g = unit_gaussian(d3(), 1.0).unwrap();
        let a = CauchyDatum::field(g.clone()).unwrap();
        let b = CauchyDatum::momentum(g).unwrap();
        let s = symplectic_form(&a, &b, &settings()).unwrap();
        let exact = (4.0 * PI).powf(-1.5);
        assert!((s - exact).abs() < 1e-12 * exact);
        assert!((symplectic_form(&b, &a, &settings()).unwrap() + exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn weyl_product_carries_symplectic_phase() {
        let probes = reference_probes(d3()).unwrap();
        let (a, b) = (probes[0].clone(), probes[1].clone());
        let w = weyl_product_expectation(&[a.clone(), b.clone()], 1.0, &settings()).unwrap();
        let sigma = symplectic_form(&a, &b, &settings()).unwrap();
        let q_sum = vacuum_form(&a, 1.0, &settings()).unwrap().q
            + vacuum_form(&b, 1.0, &settings()).unwrap().q
            + 2.0 * bilinear_form(&a, &b, 1.0, &settings()).unwrap();
        let expected = Complex64::from_polar((-q_sum / 4.0).exp(), -sigma / 2.0);
        assert!((w - expected).norm() < 1e-13);
    }

    #[test]
    fn rotation_by_i_swaps_roles() {
        // i(g + i·0) = 0 + i g: a field datum becomes a momentum datum.
        let g = unit_gaussian(d3(), 1.0).unwrap();
        let d = CauchyDatum::field(g.clone()).unwrap();
        let r = d.rotate(Complex64::new(0.0, 1.0)).unwrap();
        let q = vacuum_form(&r, 1.0, &settings()).unwrap().q;
        let expected = vacuum_form(&CauchyDatum::momentum(g).unwrap(), 1.0, &settings()).unwrap().q;
        assert!((q - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn grid_points_and_decades() {
        let g = LambdaGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 13);
        assert!(pts.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(g.decade_indices(), vec![0, 4, 8, 12]);
        assert!((pts[12] - 1e-3).abs() < 1e-15);
        assert_eq!(g.index_of(0.01), Some(8));
        assert!(LambdaGrid::new(0.0, 1.0, 4).is_err());
        assert!(LambdaGrid::new(0.5, 0.1, 4).is_err());
    }

    #[test]
    fn identity_family_is_one_everywhere() {
        let fam = ScalingFamily::identity(d3(), LambdaGrid::default()).unwrap();
        let r = scaling_limit_estimate(&fam, &VacuumModel::Free { mass: 1.0 }, &settings()).unwrap();
        assert!(r.values.iter().all(|v| *v == 1.0));
        assert_eq!(r.cauchy_defect, 0.0);
    }

    #[test]
    fn localization_is_checked() {
        let wide = unit_gaussian(d3(), 1.0).unwrap();
        let d = CauchyDatum::field(wide).unwrap();
        assert!(ScalingFamily::dilation_orbit(d.clone(), 1.0, LambdaGrid::default()).is_err());
        assert!(ScalingFamily::dilation_orbit(d, 7.0, LambdaGrid::default()).is_ok());
    }

    #[test]
    fn massive_orbit_converges_to_massless_value() {
        let d = reference_probes(d3()).unwrap().remove(0);
        let fam = ScalingFamily::dilation_orbit(d.clone(), 7.0, LambdaGrid::default()).unwrap();
        let target = vacuum_form(&d, 0.0, &settings()).unwrap().weyl_value();
        let at1 = weyl_at_scale(&fam, 1.0, &VacuumModel::Free { mass: 1.0 }, &settings()).unwrap();
        assert!((at1 - vacuum_form(&d, 1.0, &settings()).unwrap().weyl_value()).abs() < 1e-15);
        let r = scaling_limit_estimate(&fam, &VacuumModel::Free { mass: 1.0 }, &settings()).unwrap();
        assert!((r.limit_candidate - target).abs() < 1e-4);
        assert!(r.cauchy_defect < 1e-4);
        assert!(!r.oscillating && !r.diverging);
    }

    #[test]
    fn state_distance_properties() {
        let probes = reference_probes(d3()).unwrap();
        assert_eq!(local_state_distance(1.0, 1.0, 0.3, &probes, &settings()).unwrap(), 0.0);
        let a = local_state_distance(1.0, 0.0, 0.3, &probes, &settings()).unwrap();
        let b = local_state_distance(0.0, 1.0, 0.3, &probes, &settings()).unwrap();
        assert_eq!(a, b);
        let far = local_state_distance(1.0, 0.0, 1.0, &probes, &settings()).unwrap();
        let near = local_state_distance(1.0, 0.0, 1e-3, &probes, &settings()).unwrap();
        assert!(near < 1e-2 * far);
        assert!(local_state_distance(1.0, 0.0, 1.0, &[], &settings()).is_err());
    }

    // Finite-mode Fock oracle. One oscillator of frequency ω with
    // φ = (a + a†)/√(2ω), π = −i√(ω/2)(a − a†), truncated to `dim` levels;
    // e^{iX} for Hermitian X is formed from its eigendecomposition.
    fn weyl_matrix(alpha: f64, beta: f64, omega: f64, dim: usize) -> DMatrix<Complex64> {
        let mut x = DMatrix::<Complex64>::zeros(dim, dim);
        for n in 0..dim - 1 {
            let s = ((n + 1) as f64).sqrt();
            // ⟨n|a|n+1⟩ = √(n+1)
            let phi = s / (2.0 * omega).sqrt();
            let pi_up = Complex64::new(0.0, (omega / 2.0).sqrt() * s); // ⟨n+1|π|n⟩ = i√(ω/2)√(n+1)
            x[(n, n + 1)] += Complex64::new(alpha * phi, 0.0) + beta * pi_up.conj();
            x[(n + 1, n)] += Complex64::new(alpha * phi, 0.0) + beta * pi_up;
        }
        let eig = x.symmetric_eigen();
        let phases = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, *l)));
        &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
    }

    #[test]
    fn fock_oracle_reproduces_gaussian_form_and_weyl_relation() {
        let dim = 60;
        let modes = [(0.7, 0.4, 1.0), (0.2, -0.5, 2.5), (1.1, 0.3, 0.6), (-0.4, 0.8, 1.7), (0.5, 0.5, 0.3), (0.9, -0.2, 4.0)];
        let mut log_product = 0.0;
        let mut q = 0.0;
        for &(a, b, w) in &modes {
            let m = weyl_matrix(a, b, w, dim);
            let vac = m[(0, 0)];
            assert!(vac.im.abs() < 1e-12);
            let formula = (-(a * a / w + b * b * w) / 4.0).exp();
            assert!((vac.re - formula).abs() < 1e-12, "mode ω={w}: {} vs {formula}", vac.re);
            log_product += vac.re.ln();
            q += a * a / w + b * b * w;
        }
        // Independent modes: the multi-mode vacuum value is the product, e^{−q/4}.
        assert!((log_product + q / 4.0).abs() < 1e-10);

        // W(F₁)W(F₂) = e^{−iσ/2} W(F₁+F₂) with σ = a₁b₂ − b₁a₂ from [φ, π] = i.
        let (a1, b1, a2, b2, w) = (0.3, 0.2, -0.25, 0.4, 1.3);
        let lhs = (weyl_matrix(a1, b1, w, dim) * weyl_matrix(a2, b2, w, dim))[(0, 0)];
        let sigma = a1 * b2 - b1 * a2;
        let rhs = Complex64::from_polar(1.0, -sigma / 2.0) * weyl_matrix(a1 + a2, b1 + b2, w, dim)[(0, 0)];
        assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
    }
}
