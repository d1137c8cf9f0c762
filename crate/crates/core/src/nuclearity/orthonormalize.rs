use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{thin_svd, windows::exponent_windows, FiniteRankMap, RANK_TOL};
use crate::error::{invalid, Result};

/// A vector whose residual after projection is below this fraction of its norm is
/// treated as dependent on the vectors already selected.
pub const INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthonormalized {
    /// New decomposition with orthonormal targets `ξₙ` and functionals `fₙ`.
    pub map: FiniteRankMap,
    /// Positions (after sorting) of the terms kept as independent.
    pub selected: Vec<usize>,
    /// Sorting permutation: sorted position → original term index.
    pub order: Vec<usize>,
    pub q: f64,
    /// `Σ ‖fₙ‖^q`.
    pub reported: f64,
    /// `Σ_k k^{1−q/2} ‖ζ_k‖^q ‖g_k‖^q`.
    pub majorant: f64,
    /// `q` lies in the window `4p/(p+2) < q ≤ 1`.
    pub window_ok: bool,
    /// Smallest accepted relative residual; close to the tolerance means a marginal rank call.
    pub min_accepted_residual: f64,
    /// Largest rejected relative residual among skipped vectors that were not exact duplicates.
    pub max_rejected_residual: f64,
}

impl Orthonormalized {
    pub fn within_majorant(&self) -> bool {
        self.reported <= self.majorant * (1.0 + 1e-10) + 1e-300
    }

    /// Rank decision is marginal when an accepted or rejected residual sits within a
    /// factor 100 of the tolerance.
    pub fn tolerance_breach(&self) -> bool {
        self.min_accepted_residual < 100.0 * INDEPENDENCE_TOL
            || (self.max_rejected_residual > INDEPENDENCE_TOL / 100.0 && self.max_rejected_residual < INDEPENDENCE_TOL)
    }
}

/// Rebuilds `T = Σ g_k(·) ζ_k` as `Σ fₙ(·) ξₙ` with orthonormal `ξₙ` in the range of `T`:
/// sort by `a_k = ‖g_k‖‖ζ_k‖`, project onto the range, select the independent
/// subsequence, run Gram–Schmidt and set `fₙ = Σ_k α_{kn} g_k` with `α_{kn} = ⟨ξₙ, ζ_k⟩`.
pub fn orthonormalize(map: &FiniteRankMap, p: f64, q: f64) -> Result<Orthonormalized> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid(format!("q = {q} must lie in (0, 1]")));
    }
    let win = exponent_windows(p)?.orthonormal_targets;
    let window_ok = win.admits(q);

    let terms = map.terms();
    let mut order: Vec<usize> = (0..terms.len()).collect();
    let a = |i: usize| terms[i].dual_norm * terms[i].vector.norm();
    order.sort_by(|&x, &y| a(y).total_cmp(&a(x)).then(x.cmp(&y)));

    // Orthogonal projection onto ran T.
    let m = map.matrix();
    let svd = thin_svd(&m)?;
    let top = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd.s.iter().take_while(|&&v| v > RANK_TOL * top).count();
    let basis = svd.u.columns(0, rank).into_owned();
    let project = |v: &DVector<f64>| -> DVector<f64> { &basis * (basis.transpose() * v) };

    let zetas: Vec<DVector<f64>> = order.iter().map(|&i| project(&terms[i].vector)).collect();
    let gs: Vec<&DVector<f64>> = order.iter().map(|&i| &terms[i].functional).collect();

    let mut xi: Vec<DVector<f64>> = Vec::new();
    let mut selected = Vec::new();
    let mut min_acc = f64::INFINITY;
    let mut max_rej: f64 = 0.0;
    for (k, z) in zetas.iter().enumerate() {
        let zn = z.norm();
        if zn == 0.0 {
            continue;
        }
        let mut r = z.clone();
        // Two passes of classical Gram–Schmidt keep the basis orthonormal to rounding.
        for _ in 0..2 {
            for e in &xi {
                let c = e.dot(&r);
                r.axpy(-c, e, 1.0);
            }
        }
        let rel = r.norm() / zn;
        if rel < INDEPENDENCE_TOL {
            if rel > 1e-15 {
                max_rej = max_rej.max(rel);
            }
            continue;
        }
        min_acc = min_acc.min(rel);
        xi.push(r.normalize());
        selected.push(k);
    }

    let mut new_terms = Vec::with_capacity(xi.len());
    for e in &xi {
        let mut f = DVector::zeros(map.domain().dim());
        for (z, g) in zetas.iter().zip(&gs) {
            f.axpy(e.dot(z), g, 1.0);
        }
        new_terms.push((f, e.clone()));
    }
    let out = FiniteRankMap::new(map.domain(), map.target_dim(), new_terms)?;
    let reported = out.terms().iter().map(|t| t.dual_norm.powf(q)).sum();
    let majorant = order
        .iter()
        .enumerate()
        .map(|(k, &i)| ((k + 1) as f64).powf(1.0 - q / 2.0) * (terms[i].vector.norm() * terms[i].dual_norm).powf(q))
        .sum();
    Ok(Orthonormalized {
        map: out,
        selected,
        order,
        q,
        reported,
        majorant,
        window_ok,
        min_accepted_residual: min_acc,
        max_rejected_residual: max_rej,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuclearity::{random_map, NormedDomain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gram_defect(m: &FiniteRankMap) -> f64 {
        let t = m.terms();
        let mut worst: f64 = 0.0;
        for i in 0..t.len() {
            for j in 0..t.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((t[i].vector.dot(&t[j].vector) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn orthonormal_input_is_fixed() {
        let terms = (0..3)
            .map(|i| {
                let mut y = DVector::zeros(4);
                y[i] = 1.0;
                let f = DVector::from_fn(3, |j, _| if j == i { 1.0 / (i + 1) as f64 } else { 0.1 });
                (f, y)
            })
            .collect();
        let t = FiniteRankMap::new(NormedDomain::Hilbert { dim: 3 }, 4, terms).unwrap();
        let o = orthonormalize(&t, 0.1, 0.5).unwrap();
        assert_eq!(o.selected, vec![0, 1, 2]);
        for (a, b) in o.map.terms().iter().zip(t.terms()) {
            assert!((&a.vector - &b.vector).norm() < 1e-12);
            assert!((&a.functional - &b.functional).norm() < 1e-12);
        }
    }

    #[test]
    fn random_rank_four_in_dim_six() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = random_map(6, 6, 4, &mut rng).unwrap();
        let o = orthonormalize(&t, 0.2, 0.9).unwrap();
        assert!(o.window_ok);
        assert_eq!(o.map.terms().len(), 4);
        assert!(gram_defect(&o.map) < 1e-10);
        for _ in 0..20 {
            let x = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
            assert!((o.map.apply(&x) - t.apply(&x)).norm() < 1e-10 * (1.0 + t.apply(&x).norm()));
        }
        assert!(o.within_majorant());
    }

    #[test]
    fn duplicate_vectors_are_skipped() {
        let y = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let z = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let f1 = DVector::from_vec(vec![2.0, 0.0]);
        let f2 = DVector::from_vec(vec![0.0, 1.0]);
        let f3 = DVector::from_vec(vec![0.5, 0.5]);
        let terms = vec![(f1, y.clone()), (f2, y.clone()), (f3, z)];
        let t = FiniteRankMap::new(NormedDomain::Hilbert { dim: 2 }, 3, terms).unwrap();
        let o = orthonormalize(&t, 0.1, 0.5).unwrap();
        // Sorted order by ‖g‖‖ζ‖: term 0, term 1 (duplicate target), term 2.
        assert_eq!(o.order, vec![0, 1, 2]);
        assert_eq!(o.selected, vec![0, 2]);
        assert!((o.map.matrix() - t.matrix()).norm() < 1e-12);
    }

    #[test]
    fn out_of_window_is_flagged_not_fatal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_map(3, 3, 2, &mut rng).unwrap();
        let o = orthonormalize(&t, 0.5, 0.6).unwrap();
        assert!(!o.window_ok);
        assert!(orthonormalize(&t, 0.5, 1.5).is_err());
    }
}
