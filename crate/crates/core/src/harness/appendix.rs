use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{cell_seed, CellOutput, Claim, ExperimentConfig, Sink, Table, VerdictKind};
use crate::error::invalid;
use crate::nuclearity::{
    content_to_norm_report, eps_content, exponent_windows, forward_content_check, orthonormalize, random_map,
    tensor_product, ContentMethod, FiniteRankMap, NormedDomain,
};
use crate::row;

pub(crate) const RECONSTRUCTION: Claim = Claim {
    id: "orthonormal_reconstruction",
    claim: "orthonormalized decomposition reproduces T to 1e-9 with targets orthonormal to 1e-10",
    anchor: "p-nuclear maps admit decompositions with orthonormal targets",
    kind: VerdictKind::Identity,
};

const MAJORANT: Claim = Claim {
    id: "orthonormal_majorant",
    claim: "Σ‖f_n‖^q stays below Σ k^{1−q/2}(‖ζ_k‖‖g_k‖)^q",
    anchor: "p-nuclear maps admit decompositions with orthonormal targets",
    kind: VerdictKind::Property,
};

pub(crate) const TENSOR: Claim = Claim {
    id: "tensor_multiplicativity",
    claim: "Hilbert case: ‖A⊗B‖_p = ‖A‖_p‖B‖_p to relative 1e-10, decomposition bound certified",
    anchor: "p-nuclearity is stable under tensor products",
    kind: VerdictKind::Identity,
};

pub(crate) const CONTENT: Claim = Claim {
    id: "eps_content_rank_one",
    claim: "rank-one map with ‖T‖ = 1 has ε-content exactly 5 at ε = 0.4",
    anchor: "ε-content of a compact map",
    kind: VerdictKind::Identity,
};

pub(crate) const WINDOWS: Claim = Claim {
    id: "exponent_windows",
    claim: "the four exponent thresholds reproduce 2p/(1−p), 2p/(2−3p), 2p/(1−4p), 4p/(p+2) to machine precision",
    anchor: "admissible exponent windows",
    kind: VerdictKind::Identity,
};

const FORWARD: Claim = Claim {
    id: "content_forward_bound",
    claim: "diag(1, 1/2, 1/4): fitted constant in N(ε) ≤ exp(c‖T‖_p^q/ε^q) at most 10",
    anchor: "p-nuclear maps have controlled ε-content",
    kind: VerdictKind::Property,
};

const DECOMPOSITION: Claim = Claim {
    id: "decomposition_bound",
    claim: "every random decomposition bound is at least the Schatten value",
    anchor: "the nuclear norm is an infimum over decompositions",
    kind: VerdictKind::Property,
};

const CONVERSE: Claim = Claim {
    id: "content_converse",
    claim: "partial sums of the content series and the implied constant",
    anchor: "controlled ε-content implies p-nuclearity",
    kind: VerdictKind::Diagnostic,
};

fn random_dims(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> (usize, usize, usize) {
    let rows = rng.random_range(lo..=hi);
    let cols = rng.random_range(lo..=hi);
    let rank = rng.random_range(1..=rows.min(cols));
    (rows, cols, rank)
}

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

pub(crate) fn run(config: &ExperimentConfig, sink: &mut Sink) {
    let a = &config.appendix;
    let seed = config.seed;

    sink.cell("orthonormalize", format!("maps={}, p={}, q={}", a.reconstruction_maps, a.p, config.q), &[RECONSTRUCTION, MAJORANT], || {
        if config.q > 1.0 {
            return Err(invalid("the orthonormal-target experiment needs q ≤ 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, "orthonormalize"));
        let mut t = Table::new(
            "orthonormalize",
            &["map", "rows", "cols", "rank", "terms", "selected", "recon_error", "ortho_defect", "reported", "majorant", "window_ok"],
        );
        let (mut recon, mut ortho): (f64, f64) = (0.0, 0.0);
        let mut majorant_ok = true;
        for i in 0..a.reconstruction_maps {
            let (rows, cols, rank) = random_dims(&mut rng, a.min_dim, a.max_dim);
            let mut map = random_map(rows, cols, rank, &mut rng)?;
            if i % 2 == 1 {
                map = map.random_decomposition(2, &mut rng)?;
            }
            let o = orthonormalize(&map, a.p, config.q)?;
            let m = map.matrix();
            let err = (o.map.matrix() - &m).norm() / m.norm().max(f64::MIN_POSITIVE);
            let od = gram_defect(&o.map);
            recon = recon.max(err);
            ortho = ortho.max(od);
            majorant_ok &= o.within_majorant();
            t.push(row![i, rows, cols, rank, map.terms().len(), o.selected.len(), err, od, o.reported, o.majorant, o.window_ok]);
        }
        Ok(CellOutput::default()
            .verdict(RECONSTRUCTION.verdict(
                recon < 1e-9 && ortho < 1e-10,
                recon,
                1e-9,
                format!("largest relative reconstruction error; largest Gram defect {ortho:.3e}"),
            ))
            .verdict(MAJORANT.verdict(majorant_ok, f64::NAN, f64::NAN, "all maps"))
            .table(t))
    });

    sink.cell("tensor", format!("pairs={}", a.tensor_pairs), &[TENSOR], || {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, "tensor"));
        let mut t = Table::new("tensor", &["pair", "p", "norm_product", "norm_factors", "rel_defect", "certified"]);
        let mut worst: f64 = 0.0;
        let mut certified = true;
        let hi = a.max_dim.min(4).max(a.min_dim);
        for i in 0..a.tensor_pairs {
            let (r1, c1, k1) = random_dims(&mut rng, a.min_dim, hi);
            let (r2, c2, k2) = random_dims(&mut rng, a.min_dim, hi);
            let x = random_map(r1, c1, k1, &mut rng)?;
            let y = random_map(r2, c2, k2, &mut rng)?;
            for &p in &config.p_values {
                let tp = tensor_product(&x, &y, p)?;
                let lhs = tp.map.p_norm_value(p)?;
                let rhs = x.p_norm_value(p)? * y.p_norm_value(p)?;
                let rel = (lhs - rhs).abs() / rhs;
                worst = worst.max(rel);
                certified &= tp.certified();
                t.push(row![i, p, lhs, rhs, rel, tp.certified()]);
            }
        }
        Ok(CellOutput::default()
            .verdict(TENSOR.verdict(worst < 1e-10 && certified, worst, 1e-10, "largest relative defect"))
            .table(t))
    });

    sink.cell("eps_content", "rank one, ε = 0.4", &[CONTENT], || {
        let f = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0]);
        let map = FiniteRankMap::new(NormedDomain::Hilbert { dim: 3 }, 2, vec![(f, y)])?;
        let c = eps_content(&map, 0.4, ContentMethod::GreedyPacking { samples: 64, seed: cell_seed(seed, "content") })?;
        let ok = c.value == 5 && c.exact && c.verify(&map);
        Ok(CellOutput::default().verdict(CONTENT.verdict(ok, c.value as f64, 5.0, format!("exact = {}", c.exact))))
    });

    sink.cell("windows", format!("p={}", a.p), &[WINDOWS], || {
        let p = a.p;
        let w = exponent_windows(p)?;
        let expected = [
            ("2p/(1-p)", &w.truncation, 2.0 * p / (1.0 - p)),
            ("2p/(2-3p)", &w.classical_limit, 2.0 * p / (2.0 - 3.0 * p)),
            ("2p/(1-4p)", &w.truncated_convergence, 2.0 * p / (1.0 - 4.0 * p)),
            ("4p/(p+2)", &w.orthonormal_targets, 4.0 * p / (p + 2.0)),
        ];
        let mut t = Table::new("windows", &["formula", "p", "threshold", "expected", "p_admissible", "nonempty"]);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (name, b, e) in expected {
            ok &= b.formula == name;
            let th = b.threshold.unwrap_or(f64::NAN);
            if th.is_finite() {
                worst = worst.max((th - e).abs());
            } else {
                ok &= !(e.is_finite() && e > 0.0);
            }
            t.push(row![name, p, th, e, b.p_admissible, b.nonempty()]);
        }
        let tol = 4.0 * f64::EPSILON;
        Ok(CellOutput::default()
            .verdict(WINDOWS.verdict(ok && worst <= tol, worst, tol, "largest absolute deviation"))
            .table(t))
    });

    sink.cell("content_forward", "diag(1, 1/2, 1/4), p = 0.5, q = 1.2", &[FORWARD, CONVERSE], || {
        let map = FiniteRankMap::diagonal(&[1.0, 0.5, 0.25])?;
        let grid: Vec<f64> = (0..8).map(|i| 0.1 * 2f64.powf(i as f64 * 0.5)).collect();
        let method = ContentMethod::GreedyPacking {
            samples: 4000,
            seed: cell_seed(seed, "forward"),
        };
        let f = forward_content_check(&map, 0.5, 1.2, &grid, method, 10.0)?;
        let mut t = Table::new("content_forward", &["eps", "content", "fitted_constant"]);
        for r in &f.rows {
            t.push(row![r.eps, r.content, r.fitted_constant]);
        }
        let seq: Vec<f64> = (1..=6).map(|m| 2f64.powf(-(m as f64) / 2.0)).collect();
        let c = content_to_norm_report(&map, 0.5, &seq, method)?;
        Ok(CellOutput::default()
            .verdict(FORWARD.verdict(f.bounded, f.sup_constant, 10.0, "sup of fitted constants"))
            .verdict(CONVERSE.verdict(true, c.implied_constant, f64::NAN, format!("series value {:.6e}", c.series_value)))
            .table(t))
    });

    sink.cell("decompositions", format!("count={}", a.random_decompositions), &[DECOMPOSITION], || {
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, "decompositions"));
        let mut t = Table::new("decompositions", &["index", "p", "bound", "schatten", "ratio"]);
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for i in 0..a.random_decompositions {
            let (rows, cols, rank) = random_dims(&mut rng, a.min_dim, a.max_dim);
            let extra = rng.random_range(0..3);
            let map = random_map(rows, cols, rank, &mut rng)?.random_decomposition(extra, &mut rng)?;
            for &p in &config.p_values {
                let n = map.p_nuclear_norm(p)?;
                let s = n.schatten.expect("Hilbert domain");
                let ratio = n.bound / s;
                worst = worst.min(ratio);
                ok &= n.bound >= s * (1.0 - 1e-12);
                t.push(row![i, p, n.bound, s, ratio]);
            }
        }
        Ok(CellOutput::default()
            .verdict(DECOMPOSITION.verdict(ok, worst, 1.0, "smallest bound / Schatten ratio"))
            .table(t))
    });
}
