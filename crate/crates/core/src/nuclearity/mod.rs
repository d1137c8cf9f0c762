//! Finite-rank maps `T = Σ fₙ(·) yₙ` from a finite-dimensional normed space into a
//! Hilbert space, their p-nuclear (quasi-)norms, tensor products and exponent windows.

mod content;
mod orthonormalize;
mod windows;

pub use content::{
    content_to_norm_report, eps_content, eps_content_profile, forward_content_check, ContentMethod,
    ContentToNormReport, EpsContent, ForwardCheck, ForwardRow,
};
pub use orthonormalize::{orthonormalize, Orthonormalized, INDEPENDENCE_TOL};
pub use windows::{exponent_windows, ExponentWindow, WindowBound};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Underlying normed space of the domain. Elements are stored as flat coordinate
/// vectors; matrices are flattened column-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NormedDomain {
    Hilbert { dim: usize },
    /// `rows × cols` real matrices with the operator norm; functionals `X ↦ tr(AᵀX)`
    /// carry the trace norm of `A`.
    OperatorNormMatrices { rows: usize, cols: usize },
}

impl NormedDomain {
    pub fn dim(&self) -> usize {
        match *self {
            NormedDomain::Hilbert { dim } => dim,
            NormedDomain::OperatorNormMatrices { rows, cols } => rows * cols,
        }
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(self, NormedDomain::Hilbert { .. })
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        match *self {
            NormedDomain::Hilbert { .. } => x.norm(),
            NormedDomain::OperatorNormMatrices { rows, cols } => {
                let m = DMatrix::from_column_slice(rows, cols, x.as_slice());
                singular_values(&m).first().copied().unwrap_or(0.0)
            }
        }
    }

    pub fn dual_norm(&self, f: &DVector<f64>) -> f64 {
        match *self {
            NormedDomain::Hilbert { .. } => f.norm(),
            NormedDomain::OperatorNormMatrices { rows, cols } => {
                let m = DMatrix::from_column_slice(rows, cols, f.as_slice());
                singular_values(&m).iter().sum()
            }
        }
    }

    /// Random point of the closed unit ball (not uniformly distributed).
    pub fn sample_ball<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.dim();
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = self.norm(&g);
        if n == 0.0 {
            return g;
        }
        let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
        g * (r / n)
    }

    fn tensor(&self, other: &NormedDomain) -> Result<NormedDomain> {
        match (*self, *other) {
            (NormedDomain::Hilbert { dim: a }, NormedDomain::Hilbert { dim: b }) => Ok(NormedDomain::Hilbert { dim: a * b }),
            (
                NormedDomain::OperatorNormMatrices { rows: r1, cols: c1 },
                NormedDomain::OperatorNormMatrices { rows: r2, cols: c2 },
            ) => Ok(NormedDomain::OperatorNormMatrices {
                rows: r1 * r2,
                cols: c1 * c2,
            }),
            _ => Err(invalid("tensor product needs domains of the same kind")),
        }
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD `m = U diag(s) Vᵀ` with `s` non-increasing.
///
/// Singular vectors come from faer: nalgebra 0.35 returns inconsistent `U`/`V` for
/// a small fraction of rank-deficient inputs, while its singular values stay correct.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok(ThinSvd { u: DMatrix::zeros(m.nrows(), 0), s: Vec::new(), v: DMatrix::zeros(m.ncols(), 0) });
    }
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f.thin_svd().map_err(|e| invalid(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(m.ncols(), k, |i, j| v[(i, j)]),
    })
}

/// Relative numerical-rank tolerance: singular values at or below `RANK_TOL·s₁` count as zero.
/// Rounding in sums of many terms sits well above `ε·s₁`, and for small `p` even that
/// floor would dominate `‖·‖_p`.
pub const RANK_TOL: f64 = 1e-13;

/// Singular values above the [`RANK_TOL`] cut.
pub fn numerical_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    let cut = RANK_TOL * top;
    s.into_iter().filter(|&v| v > cut).collect()
}

/// ℓ_p quasi-norm `(Σ sᵢ^p)^{1/p}`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    if sum == 0.0 {
        0.0
    } else {
        sum.powf(1.0 / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub functional: DVector<f64>,
    pub dual_norm: f64,
    pub vector: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankMap {
    domain: NormedDomain,
    target_dim: usize,
    terms: Vec<Term>,
}

/// `bound` comes from the stored decomposition; `schatten` is the exact value, available
/// only for Hilbert domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearNorm {
    pub p: f64,
    pub bound: f64,
    pub schatten: Option<f64>,
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("p = {p} must lie in (0, 1]")));
    }
    Ok(())
}

impl FiniteRankMap {
    pub fn new(domain: NormedDomain, target_dim: usize, terms: Vec<(DVector<f64>, DVector<f64>)>) -> Result<Self> {
        let d = domain.dim();
        if d == 0 || target_dim == 0 {
            return Err(invalid("empty domain or target"));
        }
        let terms = terms
            .into_iter()
            .map(|(f, y)| {
                if f.len() != d || y.len() != target_dim {
                    return Err(invalid("term dimensions do not match the map"));
                }
                if f.iter().chain(y.iter()).any(|v| !v.is_finite()) {
                    return Err(invalid("non-finite term"));
                }
                Ok(Term {
                    dual_norm: domain.dual_norm(&f),
                    functional: f,
                    vector: y,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            target_dim,
            terms,
        })
    }

    /// Column decomposition `T = Σⱼ eⱼ*(·) T eⱼ` of a matrix acting on a Hilbert space.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let terms = (0..m.ncols())
            .map(|j| {
                let mut e = DVector::zeros(m.ncols());
                e[j] = 1.0;
                (e, m.column(j).into_owned())
            })
            .collect();
        Self::new(NormedDomain::Hilbert { dim: m.ncols() }, m.nrows(), terms)
    }

    /// SVD decomposition: terms `vᵢ*(·) σᵢuᵢ`, optimal for every p. Singular values
    /// under the [`RANK_TOL`] cut are dropped.
    pub fn from_svd(m: &DMatrix<f64>) -> Result<Self> {
        let svd = thin_svd(m)?;
        let cut = RANK_TOL * svd.s.first().copied().unwrap_or(0.0);
        let terms = (0..svd.s.len())
            .filter(|&i| svd.s[i] > cut)
            .map(|i| (svd.v.column(i).into_owned(), svd.u.column(i) * svd.s[i]))
            .collect();
        Self::new(NormedDomain::Hilbert { dim: m.ncols() }, m.nrows(), terms)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_matrix(&DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn domain(&self) -> NormedDomain {
        self.domain
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.target_dim);
        for t in &self.terms {
            out.axpy(t.functional.dot(x), &t.vector, 1.0);
        }
        out
    }

    /// Matrix `target × domain` of the map in flat coordinates.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.target_dim, self.domain.dim());
        for t in &self.terms {
            m += &t.vector * t.functional.transpose();
        }
        m
    }

    pub fn p_nuclear_norm(&self, p: f64) -> Result<NuclearNorm> {
        check_p(p)?;
        let bound = lp_norm(
            &self.terms.iter().map(|t| t.dual_norm * t.vector.norm()).collect::<Vec<_>>(),
            p,
        );
        let schatten = self.domain.is_hilbert().then(|| lp_norm(&numerical_spectrum(&self.matrix()), p));
        Ok(NuclearNorm { p, bound, schatten })
    }

    /// Best available p-norm value: exact where known, otherwise the decomposition bound.
    pub fn p_norm_value(&self, p: f64) -> Result<f64> {
        let n = self.p_nuclear_norm(p)?;
        Ok(n.schatten.unwrap_or(n.bound))
    }

    /// Operator norm; exact only for Hilbert domains.
    pub fn operator_norm(&self) -> Option<f64> {
        self.domain
            .is_hilbert()
            .then(|| singular_values(&self.matrix()).first().copied().unwrap_or(0.0))
    }

    /// Seeded random decomposition of the same map: `T = Z·G` with `Z` random of full
    /// row rank and `G = Z⁺T`.
    pub fn random_decomposition<R: Rng>(&self, extra: usize, rng: &mut R) -> Result<Self> {
        let m = self.matrix();
        let k = self.target_dim + extra;
        let z = DMatrix::from_fn(self.target_dim, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let zp = z.clone().pseudo_inverse(1e-13).map_err(|e| invalid(e.to_string()))?;
        let g = zp * m;
        let terms = (0..k).map(|i| (g.row(i).transpose(), z.column(i).into_owned())).collect();
        Self::new(self.domain, self.target_dim, terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorProduct {
    pub map: FiniteRankMap,
    pub p: f64,
    pub bound: f64,
    pub factor_bounds: (f64, f64),
}

impl TensorProduct {
    /// The decomposition bound never exceeds the product of the factor bounds.
    pub fn certified(&self) -> bool {
        self.bound <= self.factor_bounds.0 * self.factor_bounds.1 * (1.0 + 1e-12) + 1e-300
    }
}

/// Pairwise products of terms; the domain carries the minimal cross-norm.
pub fn tensor_product(a: &FiniteRankMap, b: &FiniteRankMap, p: f64) -> Result<TensorProduct> {
    check_p(p)?;
    let domain = a.domain.tensor(&b.domain)?;
    let kron_functional = |f: &DVector<f64>, g: &DVector<f64>| -> DVector<f64> {
        match (a.domain, b.domain) {
            (
                NormedDomain::OperatorNormMatrices { rows: r1, cols: c1 },
                NormedDomain::OperatorNormMatrices { rows: r2, cols: c2 },
            ) => {
                let fa = DMatrix::from_column_slice(r1, c1, f.as_slice());
                let gb = DMatrix::from_column_slice(r2, c2, g.as_slice());
                DVector::from_column_slice(fa.kronecker(&gb).as_slice())
            }
            _ => f.kronecker(g),
        }
    };
    let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
    for s in &a.terms {
        for t in &b.terms {
            terms.push((kron_functional(&s.functional, &t.functional), s.vector.kronecker(&t.vector)));
        }
    }
    let map = FiniteRankMap::new(domain, a.target_dim * b.target_dim, terms)?;
    Ok(TensorProduct {
        bound: map.p_nuclear_norm(p)?.bound,
        factor_bounds: (a.p_nuclear_norm(p)?.bound, b.p_nuclear_norm(p)?.bound),
        map,
        p,
    })
}

/// Kronecker product of domain elements compatible with [`tensor_product`].
pub fn tensor_element(da: NormedDomain, x: &DVector<f64>, db: NormedDomain, y: &DVector<f64>) -> DVector<f64> {
    match (da, db) {
        (
            NormedDomain::OperatorNormMatrices { rows: r1, cols: c1 },
            NormedDomain::OperatorNormMatrices { rows: r2, cols: c2 },
        ) => {
            let xa = DMatrix::from_column_slice(r1, c1, x.as_slice());
            let yb = DMatrix::from_column_slice(r2, c2, y.as_slice());
            DVector::from_column_slice(xa.kronecker(&yb).as_slice())
        }
        _ => x.kronecker(y),
    }
}

/// Random `rows × cols` map on a Hilbert space of the given rank.
pub fn random_map<R: Rng>(rows: usize, cols: usize, rank: usize, rng: &mut R) -> Result<FiniteRankMap> {
    let terms = (0..rank)
        .map(|_| {
            (
                DVector::from_fn(cols, |_, _| rng.sample::<f64, _>(StandardNormal)),
                DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal)),
            )
        })
        .collect();
    FiniteRankMap::new(NormedDomain::Hilbert { dim: cols }, rows, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_schatten() {
        let t = FiniteRankMap::diagonal(&[1.0, 0.5]).unwrap();
        let n = t.p_nuclear_norm(1.0).unwrap();
        assert_relative_eq!(n.schatten.unwrap(), 1.5, epsilon = 1e-14);
        assert_relative_eq!(n.bound, 1.5, epsilon = 1e-14);
        assert!(t.p_nuclear_norm(0.0).is_err());
        assert!(t.p_nuclear_norm(1.2).is_err());
    }

    #[test]
    fn thin_svd_recomposes_rank_deficient_sums() {
        // Redundant decompositions of low-rank maps tripped nalgebra's U/V computation.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3000 {
            let r = rng.random_range(2..=8);
            let c = rng.random_range(2..=8);
            let k = rng.random_range(1..=r.min(c));
            let m = random_map(r, c, k, &mut rng).unwrap().random_decomposition(2, &mut rng).unwrap().matrix();
            let svd = thin_svd(&m).unwrap();
            let rec = &svd.u * DMatrix::from_diagonal(&DVector::from_column_slice(&svd.s)) * svd.v.transpose();
            assert!((rec - &m).norm() <= 1e-12 * m.norm());
            assert!(svd.s.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn svd_decomposition_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_map(5, 4, 3, &mut rng).unwrap().matrix();
            let t = FiniteRankMap::from_svd(&m).unwrap();
            for p in [0.5, 1.0] {
                let n = t.p_nuclear_norm(p).unwrap();
                assert!((n.bound - n.schatten.unwrap()).abs() < 1e-12 * n.bound.max(1.0));
            }
        }
    }

    #[test]
    fn random_decompositions_bound_the_schatten_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_map(4, 5, 3, &mut rng).unwrap();
        for _ in 0..100 {
            let d = t.random_decomposition(3, &mut rng).unwrap();
            assert!((d.matrix() - t.matrix()).norm() < 1e-10);
            for p in [0.3, 0.7, 1.0] {
                let n = d.p_nuclear_norm(p).unwrap();
                assert!(n.bound >= n.schatten.unwrap() * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn tensor_of_diagonals() {
        let a = FiniteRankMap::diagonal(&[1.0, 0.5]).unwrap();
        let b = FiniteRankMap::diagonal(&[1.0, 1.0 / 3.0]).unwrap();
        let t = tensor_product(&a, &b, 1.0).unwrap();
        let mut s = singular_values(&t.map.matrix());
        s.retain(|v| *v > 1e-14);
        let expect = [1.0, 0.5, 1.0 / 3.0, 1.0 / 6.0];
        for (x, y) in s.iter().zip(expect) {
            assert_relative_eq!(*x, y, epsilon = 1e-14);
        }
        assert_relative_eq!(t.map.p_nuclear_norm(1.0).unwrap().schatten.unwrap(), 2.0, epsilon = 1e-13);
        assert!(t.certified());
    }

    #[test]
    fn identity_tensor_scales_by_identity_norm() {
        let id = FiniteRankMap::from_matrix(&DMatrix::identity(3, 3)).unwrap();
        let b = FiniteRankMap::diagonal(&[0.7, 0.2]).unwrap();
        for p in [0.5, 1.0] {
            let t = tensor_product(&id, &b, p).unwrap();
            let expect = 3f64.powf(1.0 / p) * b.p_norm_value(p).unwrap();
            assert_relative_eq!(t.map.p_norm_value(p).unwrap(), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn operator_domain_tensor_acts_on_elementary_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let da = NormedDomain::OperatorNormMatrices { rows: 2, cols: 2 };
        let db = NormedDomain::OperatorNormMatrices { rows: 1, cols: 3 };
        let mk = |d: NormedDomain, rng: &mut ChaCha8Rng| {
            let terms = (0..2)
                .map(|_| {
                    (
                        DVector::from_fn(d.dim(), |_, _| rng.sample::<f64, _>(StandardNormal)),
                        DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal)),
                    )
                })
                .collect();
            FiniteRankMap::new(d, 2, terms).unwrap()
        };
        let a = mk(da, &mut rng);
        let b = mk(db, &mut rng);
        let t = tensor_product(&a, &b, 0.5).unwrap();
        assert!(t.certified());
        let x = da.sample_ball(&mut rng);
        let y = db.sample_ball(&mut rng);
        let lhs = t.map.apply(&tensor_element(da, &x, db, &y));
        let rhs = a.apply(&x).kronecker(&b.apply(&y));
        assert!((lhs - rhs).norm() < 1e-12);
        // Trace-norm duals multiply under Kronecker products.
        let f = &t.map.terms()[0];
        assert_relative_eq!(f.dual_norm, a.terms()[0].dual_norm * b.terms()[0].dual_norm, max_relative = 1e-12);
    }

    #[test]
    fn operator_norm_below_nuclear_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let t = random_map(4, 4, 4, &mut rng).unwrap();
            let op = t.operator_norm().unwrap();
            for q in [0.2, 0.5, 0.9, 1.0] {
                assert!(op <= t.p_nuclear_norm(q).unwrap().bound * (1.0 + 1e-12));
            }
        }
    }
}
