use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{invalid, Error, Result};

/// Spatial dimension `s` of Minkowski space `R^{1+s}`; only `s = 2, 3` are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dims {
    s: usize,
}

impl Dims {
    pub fn new(s: usize) -> Result<Self> {
        match s {
            2 | 3 => Ok(Self { s }),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    pub fn three() -> Self {
        Self { s: 3 }
    }

    pub fn spatial(&self) -> usize {
        self.s
    }

    pub fn spacetime(&self) -> usize {
        self.s + 1
    }

    /// Surface measure of the unit `(s-1)`-sphere.
    pub fn sphere_area(&self) -> f64 {
        match self.s {
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }
}

impl TryFrom<usize> for Dims {
    type Error = Error;
    fn try_from(s: usize) -> Result<Self> {
        Dims::new(s)
    }
}

impl From<Dims> for usize {
    fn from(d: Dims) -> usize {
        d.s
    }
}

/// Momentum or position 3-vector; the third entry is unused (zero) when `s = 2`.
pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spatial,
    Spacetime,
}

/// `A exp(-|x-c|²/2w²) e^{ik·x}` on space, or
/// `A exp(-(t-t₀)²/2τ² - |x-c|²/2w²) e^{i(k₀t - k·x)}` on spacetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub amplitude: Complex64,
    pub width: f64,
    #[serde(default)]
    pub center: Vec3,
    #[serde(default)]
    pub modulation: Vec3,
    /// Only read for spacetime functions; defaults to `width`.
    #[serde(default)]
    pub time_width: Option<f64>,
    #[serde(default)]
    pub time_center: f64,
    #[serde(default)]
    pub time_modulation: f64,
}

impl Gaussian {
    pub fn new(width: f64) -> Self {
        Self {
            amplitude: Complex64::new(1.0, 0.0),
            width,
            center: [0.0; 3],
            modulation: [0.0; 3],
            time_width: None,
            time_center: 0.0,
            time_modulation: 0.0,
        }
    }

    pub fn amplitude(mut self, a: Complex64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn real_amplitude(self, a: f64) -> Self {
        self.amplitude(Complex64::new(a, 0.0))
    }

    pub fn center(mut self, c: Vec3) -> Self {
        self.center = c;
        self
    }

    pub fn modulation(mut self, k: Vec3) -> Self {
        self.modulation = k;
        self
    }

    pub fn time_width(mut self, tau: f64) -> Self {
        self.time_width = Some(tau);
        self
    }

    pub fn time_center(mut self, t0: f64) -> Self {
        self.time_center = t0;
        self
    }

    fn tau(&self) -> f64 {
        self.time_width.unwrap_or(self.width)
    }
}

/// Real samples on a uniform cubic grid centred at the origin,
/// `x_j = (j - (n-1)/2) h` along every axis. The outermost layer must vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBump {
    pub points: usize,
    pub spacing: f64,
    pub samples: Vec<f64>,
}

impl GridBump {
    pub fn sample(dims: Dims, points: usize, spacing: f64, f: impl Fn(&Vec3) -> f64) -> Self {
        let s = dims.spatial();
        let total = points.pow(s as u32);
        let mut samples = Vec::with_capacity(total);
        for idx in 0..total {
            samples.push(f(&grid_point(idx, points, spacing, s)));
        }
        Self {
            points,
            spacing,
            samples,
        }
    }

    /// Usable momentum band: half the Nyquist frequency. Inside it the nearest
    /// periodic image of the sampled transform sits at distance at least `3π/2h`,
    /// so the error is bounded by the tail of the exact transform beyond that radius.
    pub fn band_limit(&self) -> f64 {
        PI / (2.0 * self.spacing)
    }

    fn fourier(&self, p: &Vec3, s: usize) -> Complex64 {
        let n = self.points;
        let h = self.spacing;
        let offset = (n as f64 - 1.0) / 2.0;
        let phases: Vec<Vec<Complex64>> = (0..s)
            .map(|a| {
                (0..n)
                    .map(|j| Complex64::from_polar(1.0, p[a] * (j as f64 - offset) * h))
                    .collect()
            })
            .collect();
        // Contract the innermost axis first: samples are stored row-major.
        let mut acc = Complex64::new(0.0, 0.0);
        match s {
            2 => {
                for j0 in 0..n {
                    let mut row = Complex64::new(0.0, 0.0);
                    for j1 in 0..n {
                        row += phases[1][j1] * self.samples[j0 * n + j1];
                    }
                    acc += phases[0][j0] * row;
                }
            }
            _ => {
                for j0 in 0..n {
                    let mut plane = Complex64::new(0.0, 0.0);
                    for j1 in 0..n {
                        let base = (j0 * n + j1) * n;
                        let mut row = Complex64::new(0.0, 0.0);
                        for j2 in 0..n {
                            row += phases[2][j2] * self.samples[base + j2];
                        }
                        plane += phases[1][j1] * row;
                    }
                    acc += phases[0][j0] * plane;
                }
            }
        }
        acc * h.powi(s as i32)
    }
}

fn grid_point(idx: usize, n: usize, h: f64, s: usize) -> Vec3 {
    let offset = (n as f64 - 1.0) / 2.0;
    let mut x = [0.0; 3];
    let mut rem = idx;
    for a in (0..s).rev() {
        x[a] = ((rem % n) as f64 - offset) * h;
        rem /= n;
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Zero,
    Gaussian(Gaussian),
    GridBump(GridBump),
    Combination(Vec<(Complex64, TestFunction)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    kind: Kind,
    dims: Dims,
    domain: Domain,
}

impl TestFunction {
    pub fn zero(dims: Dims, domain: Domain) -> Self {
        Self {
            kind: Kind::Zero,
            dims,
            domain,
        }
    }

    pub fn gaussian(dims: Dims, domain: Domain, g: Gaussian) -> Result<Self> {
        if !(g.width > 0.0) || !g.width.is_finite() {
            return Err(invalid(format!("gaussian width must be positive, got {}", g.width)));
        }
        if domain == Domain::Spacetime && !(g.tau() > 0.0 && g.tau().is_finite()) {
            return Err(invalid(format!("time width must be positive, got {}", g.tau())));
        }
        if dims.spatial() == 2 && (g.center[2] != 0.0 || g.modulation[2] != 0.0) {
            return Err(invalid("third coordinate must vanish for s = 2"));
        }
        Ok(Self {
            kind: Kind::Gaussian(g),
            dims,
            domain,
        })
    }

    /// Centred real spatial Gaussian of unit amplitude.
    pub fn spatial_gaussian(dims: Dims, width: f64) -> Result<Self> {
        Self::gaussian(dims, Domain::Spatial, Gaussian::new(width))
    }

    /// Centred real spacetime Gaussian with separate time and space widths.
    pub fn spacetime_gaussian(dims: Dims, width: f64, time_width: f64) -> Result<Self> {
        Self::gaussian(dims, Domain::Spacetime, Gaussian::new(width).time_width(time_width))
    }

    pub fn grid_bump(dims: Dims, bump: GridBump) -> Result<Self> {
        let s = dims.spatial();
        if bump.points < 3 {
            return Err(invalid("grid bump needs at least 3 points per axis"));
        }
        if !(bump.spacing > 0.0) {
            return Err(invalid("grid spacing must be positive"));
        }
        if bump.samples.len() != bump.points.pow(s as u32) {
            return Err(invalid(format!(
                "grid bump has {} samples, expected {}",
                bump.samples.len(),
                bump.points.pow(s as u32)
            )));
        }
        if bump.samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid bump samples must be finite"));
        }
        let peak = bump.samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let n = bump.points;
        for idx in 0..bump.samples.len() {
            let mut rem = idx;
            let mut boundary = false;
            for _ in 0..s {
                let j = rem % n;
                boundary |= j == 0 || j == n - 1;
                rem /= n;
            }
            if boundary && bump.samples[idx].abs() > 1e-14 * peak.max(f64::MIN_POSITIVE) {
                return Err(invalid("grid bump is not compactly supported on its grid (boundary layer nonzero)"));
            }
        }
        Ok(Self {
            kind: Kind::GridBump(bump),
            dims,
            domain: Domain::Spatial,
        })
    }

    pub fn combination(terms: Vec<(Complex64, TestFunction)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("empty combination; use TestFunction::zero"))?;
        let (dims, domain) = (first.1.dims, first.1.domain);
        if terms.iter().any(|(_, f)| f.dims != dims || f.domain != domain) {
            return Err(invalid("combination terms must share dimension and domain"));
        }
        Ok(Self {
            kind: Kind::Combination(terms),
            dims,
            domain,
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Zero => true,
            Kind::Gaussian(g) => g.amplitude == Complex64::new(0.0, 0.0),
            Kind::GridBump(b) => b.samples.iter().all(|v| *v == 0.0),
            Kind::Combination(t) => t.iter().all(|(c, f)| c.norm() == 0.0 || f.is_zero()),
        }
    }

    /// Name of the backend, recorded by localization-sensitive experiments.
    pub fn backend(&self) -> &'static str {
        match &self.kind {
            Kind::Zero => "zero",
            Kind::Gaussian(_) => "analytic-gaussian",
            Kind::GridBump(_) => "grid-bump",
            Kind::Combination(t) => {
                if t.iter().any(|(_, f)| f.backend() == "grid-bump") {
                    "grid-bump"
                } else {
                    "analytic-gaussian"
                }
            }
        }
    }

    /// True when `|f̂(p0, p)|` and the phase depend on `p` only through `|p|`.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            Kind::Zero => true,
            Kind::Gaussian(g) => norm(&g.center) == 0.0 && norm(&g.modulation) == 0.0,
            Kind::GridBump(_) => false,
            Kind::Combination(t) => t.iter().all(|(_, f)| f.is_radial()),
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            Kind::Zero | Kind::GridBump(_) => true,
            Kind::Gaussian(g) => {
                g.amplitude.im == 0.0 && norm(&g.modulation) == 0.0 && g.time_modulation == 0.0
            }
            Kind::Combination(t) => t.iter().all(|(c, f)| c.im == 0.0 && f.is_real()),
        }
    }

    /// Fourier transform with the `e^{+ipx}` convention; `px` is Euclidean on space
    /// and Minkowskian (`p0 t - p·x`) on spacetime. `p0` is ignored for spatial functions.
    pub fn fourier_at(&self, p0: f64, p: &Vec3) -> Complex64 {
        let s = self.dims.spatial();
        match &self.kind {
            Kind::Zero => Complex64::new(0.0, 0.0),
            Kind::Gaussian(g) => {
                let q = [p[0] + g.modulation[0], p[1] + g.modulation[1], p[2] + g.modulation[2]];
                let w2 = g.width * g.width;
                let spatial_norm = (2.0 * PI * w2).powf(s as f64 / 2.0);
                match self.domain {
                    Domain::Spatial => {
                        let envelope = (-0.5 * w2 * dot(&q, &q)).exp();
                        let phase = Complex64::from_polar(1.0, dot(&q, &g.center));
                        g.amplitude * spatial_norm * envelope * phase
                    }
                    Domain::Spacetime => {
                        let tau = g.tau();
                        let q0 = p0 + g.time_modulation;
                        let envelope = (-0.5 * (tau * tau * q0 * q0 + w2 * dot(&q, &q))).exp();
                        let norm_t = (2.0 * PI * tau * tau).sqrt();
                        let phase = Complex64::from_polar(1.0, q0 * g.time_center - dot(&q, &g.center));
                        g.amplitude * spatial_norm * norm_t * envelope * phase
                    }
                }
            }
            Kind::GridBump(b) => b.fourier(p, s),
            Kind::Combination(t) => t.iter().map(|(c, f)| c * f.fourier_at(p0, p)).sum(),
        }
    }

    /// Validated momentum-space evaluator; rejects cutoffs beyond a grid backend's band.
    pub fn fourier(&self, p_max: f64) -> Result<Fourier<'_>> {
        self.check_band(p_max)?;
        Ok(Fourier { f: self })
    }

    pub(crate) fn check_band(&self, p_max: f64) -> Result<()> {
        match &self.kind {
            Kind::GridBump(b) => {
                let limit = b.band_limit();
                if p_max > limit * (1.0 + 1e-12) {
                    return Err(Error::Aliasing {
                        requested: p_max,
                        limit,
                        spacing: b.spacing,
                    });
                }
                Ok(())
            }
            Kind::Combination(t) => t.iter().try_for_each(|(_, f)| f.check_band(p_max)),
            _ => Ok(()),
        }
    }

    /// Radius beyond which `|f̂|²` (on shell, at any fixed mass) stays below `tol`
    /// times its peak. Grid backends report their usable band instead.
    pub fn momentum_cutoff(&self, tol: f64) -> f64 {
        let decades = (1.0 / tol).ln();
        match &self.kind {
            Kind::Zero => 1.0,
            Kind::Gaussian(g) => {
                let rate = match self.domain {
                    Domain::Spatial => g.width * g.width,
                    Domain::Spacetime => g.width * g.width + g.tau() * g.tau(),
                };
                (decades / rate).sqrt() + norm(&g.modulation) + g.time_modulation.abs()
            }
            Kind::GridBump(b) => b.band_limit(),
            Kind::Combination(t) => t
                .iter()
                .map(|(_, f)| f.momentum_cutoff(tol))
                .fold(0.0, f64::max),
        }
    }

    /// Dilation `f ↦ λ^exponent f(·/λ)` (space and time alike).
    pub fn dilate_with_prefactor(&self, lambda: f64, exponent: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("dilation scale must be positive, got {lambda}")));
        }
        let pref = lambda.powf(exponent);
        let kind = match &self.kind {
            Kind::Zero => Kind::Zero,
            Kind::Gaussian(g) => {
                let mut d = g.clone();
                d.amplitude *= pref;
                d.width *= lambda;
                d.time_width = g.time_width.map(|t| t * lambda);
                d.center = g.center.map(|c| c * lambda);
                d.modulation = g.modulation.map(|k| k / lambda);
                d.time_center *= lambda;
                d.time_modulation /= lambda;
                Kind::Gaussian(d)
            }
            Kind::GridBump(b) => Kind::GridBump(GridBump {
                points: b.points,
                spacing: b.spacing * lambda,
                samples: b.samples.iter().map(|v| v * pref).collect(),
            }),
            Kind::Combination(t) => Kind::Combination(
                t.iter()
                    .map(|(c, f)| Ok((*c, f.dilate_with_prefactor(lambda, exponent)?)))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self {
            kind,
            dims: self.dims,
            domain: self.domain,
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let kind = match &self.kind {
            Kind::Zero => Kind::Zero,
            Kind::Gaussian(g) => {
                let mut d = g.clone();
                d.amplitude *= c;
                Kind::Gaussian(d)
            }
            _ => Kind::Combination(vec![(c, self.clone())]),
        };
        Self {
            kind,
            dims: self.dims,
            domain: self.domain,
        }
    }

    /// `‖f‖²_{L²}` over space (or spacetime); `None` for combinations.
    pub fn l2_norm_sq(&self) -> Option<f64> {
        let s = self.dims.spatial() as f64;
        let v = match &self.kind {
            Kind::Zero => 0.0,
            Kind::Gaussian(g) => {
                let space = (PI * g.width * g.width).powf(s / 2.0);
                let time = match self.domain {
                    Domain::Spatial => 1.0,
                    Domain::Spacetime => (PI * g.tau() * g.tau()).sqrt(),
                };
                g.amplitude.norm_sqr() * space * time
            }
            Kind::GridBump(b) => b.samples.iter().map(|v| v * v).sum::<f64>() * b.spacing.powf(s),
            Kind::Combination(_) => return None,
        };
        Some(v)
    }

    /// Smallest radius `r` (about the origin) with L² mass fraction outside `r` below `tol`.
    pub fn effective_radius(&self, tol: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Gaussian(g) => {
                let (dim, w, shift) = match self.domain {
                    Domain::Spatial => (self.dims.spatial(), g.width, norm(&g.center)),
                    Domain::Spacetime => (
                        self.dims.spacetime(),
                        g.width.max(g.tau()),
                        (dot(&g.center, &g.center) + g.time_center * g.time_center).sqrt(),
                    ),
                };
                shift + w * gaussian_tail_radius(dim, tol)
            }
            Kind::GridBump(b) => {
                let s = self.dims.spatial();
                let mut pts: Vec<(f64, f64)> = b
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (norm(&grid_point(i, b.points, b.spacing, s)), v * v))
                    .collect();
                let total: f64 = pts.iter().map(|p| p.1).sum();
                if total == 0.0 {
                    return 0.0;
                }
                pts.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut outside = 0.0;
                for (r, m) in pts {
                    if (outside + m) / total >= tol {
                        return r;
                    }
                    outside += m;
                }
                0.0
            }
            Kind::Combination(t) => t
                .iter()
                .map(|(_, f)| f.effective_radius(tol))
                .fold(0.0, f64::max),
        }
    }
}

/// Solve `Q(D/2, r²) = tol` for the radius `r` in units of the width, where `Q`
/// is the regularized upper incomplete gamma function (the tail of `e^{-|y|²}` in `D` dims).
fn gaussian_tail_radius(dim: usize, tol: f64) -> f64 {
    let a = dim as f64 / 2.0;
    let tail = |r: f64| gamma_ur(a, r * r);
    let (mut lo, mut hi) = (0.0, 1.0);
    while tail(hi) > tol {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Borrowed, validated momentum-space view of a test function.
pub struct Fourier<'a> {
    f: &'a TestFunction,
}

impl Fourier<'_> {
    pub fn eval(&self, p0: f64, p: &Vec3) -> Complex64 {
        self.f.fourier_at(p0, p)
    }

    /// Spatial functions only.
    pub fn eval_spatial(&self, p: &Vec3) -> Complex64 {
        self.f.fourier_at(0.0, p)
    }
}
