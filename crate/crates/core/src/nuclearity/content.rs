use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{singular_values, thin_svd, FiniteRankMap};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ContentMethod {
    /// Grid of the unit ball with the given pitch; Hilbert domains of dimension ≤ 3.
    ExhaustiveGrid { pitch: f64 },
    /// Greedy packing of seeded random ball samples.
    GreedyPacking { samples: usize, seed: u64 },
}

/// A certified lower bound on the ε-content, with the packing that certifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsContent {
    pub eps: f64,
    pub value: usize,
    pub exact: bool,
    pub witness: Vec<DVector<f64>>,
}

impl EpsContent {
    /// Every witness lies in the unit ball and all image distances exceed ε.
    pub fn verify(&self, map: &FiniteRankMap) -> bool {
        let d = map.domain();
        if self.witness.len() != self.value {
            return false;
        }
        if self.witness.iter().any(|x| d.norm(x) > 1.0 + 1e-12) {
            return false;
        }
        let images: Vec<DVector<f64>> = self.witness.iter().map(|x| map.apply(x)).collect();
        for i in 0..images.len() {
            for j in 0..i {
                if (&images[i] - &images[j]).norm() <= self.eps {
                    return false;
                }
            }
        }
        true
    }
}

/// Coordinates in which `‖T(x − y)‖` is the Euclidean distance: `c = Σ Vᵀ x`.
struct ImageFrame {
    sv: DMatrix<f64>,
    rank: usize,
}

impl ImageFrame {
    fn new(map: &FiniteRankMap) -> Result<Self> {
        let svd = thin_svd(&map.matrix())?;
        let top = svd.s.first().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..svd.s.len())
            .filter(|&i| svd.s[i] > 1e-14 * top.max(f64::MIN_POSITIVE))
            .collect();
        let mut sv = DMatrix::zeros(keep.len(), svd.v.nrows());
        for (r, &i) in keep.iter().enumerate() {
            sv.set_row(r, &(svd.v.column(i).transpose() * svd.s[i]));
        }
        Ok(Self { rank: keep.len(), sv })
    }

    fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.sv * x
    }
}

/// Greedy packing in image coordinates. Candidates are visited by decreasing image norm;
/// a hash grid on the first (up to three) coordinates prunes the distance checks.
fn greedy_pack(frame: &ImageFrame, candidates: &[DVector<f64>], eps: f64) -> Vec<usize> {
    let coords: Vec<DVector<f64>> = candidates.iter().map(|x| frame.coords(x)).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| coords[b].norm_squared().total_cmp(&coords[a].norm_squared()).then(a.cmp(&b)));
    let hd = frame.rank.min(3);
    let cell = |c: &DVector<f64>| -> [i64; 3] {
        let mut k = [0i64; 3];
        for a in 0..hd {
            k[a] = (c[a] / eps).floor() as i64;
        }
        k
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut chosen = Vec::new();
    let span = |a: usize| if a < hd { -1..=1 } else { 0..=0 };
    'next: for &i in &order {
        let k = cell(&coords[i]);
        for dx in span(0) {
            for dy in span(1) {
                for dz in span(2) {
                    if let Some(list) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if list.iter().any(|&j| (&coords[i] - &coords[j]).norm() <= eps) {
                            continue 'next;
                        }
                    }
                }
            }
        }
        grid.entry(k).or_default().push(i);
        chosen.push(i);
    }
    chosen
}

fn ball_grid(dim: usize, pitch: f64) -> Vec<DVector<f64>> {
    let n = (1.0 / pitch).floor() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-n; dim];
    loop {
        let x = DVector::from_iterator(dim, idx.iter().map(|&k| k as f64 * pitch));
        if x.norm() <= 1.0 {
            out.push(x);
        }
        let mut a = 0;
        loop {
            if a == dim {
                return out;
            }
            idx[a] += 1;
            if idx[a] <= n {
                break;
            }
            idx[a] = -n;
            a += 1;
        }
    }
}

pub fn eps_content(map: &FiniteRankMap, eps: f64, method: ContentMethod) -> Result<EpsContent> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("ε must be positive"));
    }
    let frame = ImageFrame::new(map)?;
    let domain = map.domain();
    if let ContentMethod::ExhaustiveGrid { pitch } = method {
        if !domain.is_hilbert() || domain.dim() > 3 {
            return Err(invalid("the exhaustive grid is limited to Hilbert domains of dimension ≤ 3"));
        }
        if !(pitch > 0.0) || pitch > eps / 4.0 {
            return Err(invalid(format!("grid pitch {pitch} is coarser than ε/4 = {}", eps / 4.0)));
        }
    }
    if frame.rank == 0 {
        return Ok(EpsContent {
            eps,
            value: 1,
            exact: true,
            witness: vec![DVector::zeros(domain.dim())],
        });
    }
    // Exact for Hilbert domains: the image of the ball is a segment of length 2‖T‖.
    if frame.rank == 1 && domain.is_hilbert() {
        let row = frame.sv.row(0).transpose();
        let s = row.norm();
        let unit = row / s;
        let mut n = 1usize;
        while (n as f64) * eps < 2.0 * s {
            n += 1;
        }
        let witness = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
                &unit * t
            })
            .collect();
        return Ok(EpsContent {
            eps,
            value: n,
            exact: true,
            witness,
        });
    }
    let op = singular_values(&map.matrix())[0];
    let candidates = match method {
        ContentMethod::ExhaustiveGrid { pitch } => ball_grid(domain.dim(), pitch),
        ContentMethod::GreedyPacking { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples.max(1)).map(|_| domain.sample_ball(&mut rng)).collect()
        }
    };
    let chosen = greedy_pack(&frame, &candidates, eps);
    let witness: Vec<DVector<f64>> = chosen.into_iter().map(|i| candidates[i].clone()).collect();
    Ok(EpsContent {
        eps,
        value: witness.len(),
        // Only the diameter bound is exact (and then the packing is a single point).
        exact: domain.is_hilbert() && eps >= 2.0 * op,
        witness,
    })
}

/// Contents over an ε grid. A packing at a larger ε is also one at every smaller ε, so the
/// certified values are propagated downwards and the profile is non-increasing in ε.
pub fn eps_content_profile(map: &FiniteRankMap, eps_grid: &[f64], method: ContentMethod) -> Result<Vec<EpsContent>> {
    let mut order: Vec<usize> = (0..eps_grid.len()).collect();
    order.sort_by(|&a, &b| eps_grid[b].total_cmp(&eps_grid[a]));
    let mut out: Vec<Option<EpsContent>> = vec![None; eps_grid.len()];
    let mut best: Option<EpsContent> = None;
    for i in order {
        let m = match method {
            ContentMethod::ExhaustiveGrid { pitch } => ContentMethod::ExhaustiveGrid {
                pitch: pitch.min(eps_grid[i] / 4.0),
            },
            other => other,
        };
        let mut c = eps_content(map, eps_grid[i], m)?;
        if let Some(b) = &best {
            if b.value > c.value {
                c = EpsContent {
                    eps: c.eps,
                    value: b.value,
                    exact: false,
                    witness: b.witness.clone(),
                };
            }
        }
        best = Some(c.clone());
        out[i] = Some(c);
    }
    Ok(out.into_iter().map(|c| c.expect("filled")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardRow {
    pub eps: f64,
    pub content: usize,
    /// `εᵠ · log N(ε) / ‖T‖_p^q`.
    pub fitted_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardCheck {
    pub p: f64,
    pub q: f64,
    pub p_norm: f64,
    pub rows: Vec<ForwardRow>,
    pub sup_constant: f64,
    pub threshold: f64,
    pub bounded: bool,
}

/// Fits the smallest constant `c` with `N(ε) ≤ exp(c‖T‖_p^q/εᵠ)` on the grid.
pub fn forward_content_check(
    map: &FiniteRankMap,
    p: f64,
    q: f64,
    eps_grid: &[f64],
    method: ContentMethod,
    threshold: f64,
) -> Result<ForwardCheck> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("the forward bound needs 0 < p < 1"));
    }
    if !(q > p / (1.0 - p)) {
        return Err(invalid(format!("q = {q} must exceed p/(1−p) = {}", p / (1.0 - p))));
    }
    let p_norm = map.p_norm_value(p)?;
    let contents = eps_content_profile(map, eps_grid, method)?;
    let rows: Vec<ForwardRow> = contents
        .iter()
        .map(|c| ForwardRow {
            eps: c.eps,
            content: c.value,
            fitted_constant: if c.value <= 1 {
                0.0
            } else {
                c.eps.powf(q) * (c.value as f64).ln() / p_norm.powf(q)
            },
        })
        .collect();
    let sup_constant = rows.iter().map(|r| r.fitted_constant).fold(0.0, f64::max);
    Ok(ForwardCheck {
        p,
        q,
        p_norm,
        bounded: sup_constant.is_finite() && sup_constant <= threshold,
        rows,
        sup_constant,
        threshold,
    })
}

/// Diagnostic for the converse direction: partial sums of `(m^{1/2} εₘ N(εₘ)^{1/m})^p`
/// and the ratio `‖T‖_p / S^{1/p}`, a lower estimate on the unspecified constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentToNormReport {
    pub p: f64,
    pub partial_sums: Vec<f64>,
    pub series_value: f64,
    pub p_norm: f64,
    pub implied_constant: f64,
}

pub fn content_to_norm_report(
    map: &FiniteRankMap,
    p: f64,
    eps_sequence: &[f64],
    method: ContentMethod,
) -> Result<ContentToNormReport> {
    let p_norm = map.p_norm_value(p)?;
    let contents = eps_content_profile(map, eps_sequence, method)?;
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = contents
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let m = (i + 1) as f64;
            acc += (m.sqrt() * c.eps * (c.value as f64).powf(1.0 / m)).powf(p);
            acc
        })
        .collect();
    let series_value = acc.powf(1.0 / p);
    Ok(ContentToNormReport {
        p,
        partial_sums,
        series_value,
        p_norm,
        implied_constant: if series_value > 0.0 { p_norm / series_value } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuclearity::NormedDomain;

    fn rank_one() -> FiniteRankMap {
        let f = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0]);
        FiniteRankMap::new(NormedDomain::Hilbert { dim: 3 }, 2, vec![(f, y)]).unwrap()
    }

    #[test]
    fn rank_one_packing_is_exact() {
        let t = rank_one();
        let c = eps_content(&t, 0.4, ContentMethod::GreedyPacking { samples: 10, seed: 0 }).unwrap();
        assert_eq!(c.value, 5);
        assert!(c.exact && c.verify(&t));
        let c = eps_content(&t, 0.5, ContentMethod::GreedyPacking { samples: 10, seed: 0 }).unwrap();
        assert_eq!(c.value, 4);
    }

    #[test]
    fn large_eps_gives_one() {
        let t = FiniteRankMap::diagonal(&[1.0, 0.5, 0.25]).unwrap();
        let c = eps_content(&t, 2.0, ContentMethod::ExhaustiveGrid { pitch: 0.25 }).unwrap();
        assert_eq!(c.value, 1);
        assert!(c.exact);
        let z = FiniteRankMap::diagonal(&[0.0, 0.0]).unwrap();
        assert_eq!(eps_content(&z, 0.01, ContentMethod::GreedyPacking { samples: 5, seed: 1 }).unwrap().value, 1);
    }

    #[test]
    fn coarse_pitch_rejected() {
        let t = FiniteRankMap::diagonal(&[1.0, 0.5]).unwrap();
        assert!(eps_content(&t, 0.4, ContentMethod::ExhaustiveGrid { pitch: 0.2 }).is_err());
        let big = FiniteRankMap::diagonal(&[1.0, 0.5, 0.2, 0.1]).unwrap();
        assert!(eps_content(&big, 0.4, ContentMethod::ExhaustiveGrid { pitch: 0.05 }).is_err());
    }

    #[test]
    fn profile_certified_and_monotone() {
        let t = FiniteRankMap::diagonal(&[1.0, 0.5]).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| 0.15 + 0.21 * i as f64).collect();
        let prof = eps_content_profile(&t, &grid, ContentMethod::ExhaustiveGrid { pitch: 0.03 }).unwrap();
        for w in prof.windows(2) {
            assert!(w[0].value >= w[1].value);
        }
        for c in &prof {
            assert!(c.verify(&t));
        }
        assert_eq!(prof.last().unwrap().value, 1);
    }

    #[test]
    fn forward_check_on_reference_maps() {
        let grid: Vec<f64> = (0..8).map(|i| 0.1 * 2f64.powf(i as f64 * 0.5)).collect();
        let r1 = rank_one();
        let f = forward_content_check(&r1, 0.5, 1.2, &grid, ContentMethod::GreedyPacking { samples: 1, seed: 0 }, 10.0)
            .unwrap();
        assert!(f.bounded);
        let z = FiniteRankMap::diagonal(&[0.0]).unwrap();
        let f = forward_content_check(&z, 0.5, 1.2, &grid, ContentMethod::GreedyPacking { samples: 1, seed: 0 }, 10.0);
        // ‖0‖_p = 0; every content is one and the fitted constant is zero.
        let f = f.unwrap();
        assert_eq!(f.sup_constant, 0.0);
        assert!(forward_content_check(&r1, 0.5, 0.9, &grid, ContentMethod::GreedyPacking { samples: 1, seed: 0 }, 10.0).is_err());
    }
}
