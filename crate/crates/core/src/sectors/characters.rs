use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::group::FiniteGroup;
use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

/// Irreducible character of a finite group, stored per conjugacy class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    pub class_values: Vec<Complex64>,
    /// Frobenius–Schur indicator: 1 real, 0 complex, −1 quaternionic.
    pub indicator: i8,
    /// Index of the conjugate character in the table.
    pub conjugate: usize,
}

#[derive(Debug, Clone)]
pub struct CharacterTable {
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    pub irreps: Vec<Irrep>,
}

impl CharacterTable {
    pub fn compute(g: &FiniteGroup) -> Result<Self> {
        let classes = g.conjugacy_classes();
        let mut class_of = vec![0; g.order()];
        for (c, members) in classes.iter().enumerate() {
            for &x in members {
                class_of[x] = c;
            }
        }
        let raw = match g.cyclic_orders() {
            Some(orders) => abelian_product_characters(orders, &class_of, classes.len()),
            None => burnside_dixon(g, &classes, &class_of)?,
        };
        let mut table = Self {
            classes,
            class_of,
            irreps: Vec::new(),
        };
        table.irreps = table.finish(g, raw)?;
        table.check_orthogonality()?;
        Ok(table)
    }

    pub fn character(&self, irrep: usize, element: usize) -> Complex64 {
        self.irreps[irrep].class_values[self.class_of[element]]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.irreps
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown irrep {name:?}")))
    }

    /// `ker χ = {g : χ(g) = χ(1)}`.
    pub fn kernel(&self, irrep: usize) -> Vec<usize> {
        let v = &self.irreps[irrep];
        let d = v.dim as f64;
        (0..self.class_of.len())
            .filter(|&x| (v.class_values[self.class_of[x]] - d).norm() < TOL)
            .collect()
    }

    fn finish(&self, g: &FiniteGroup, raw: Vec<(Option<String>, Vec<Complex64>)>) -> Result<Vec<Irrep>> {
        let order = g.order() as f64;
        let mut rows: Vec<(Option<String>, usize, Vec<Complex64>)> = raw
            .into_iter()
            .map(|(n, vals)| {
                let dim = vals[0].re.round() as usize;
                (n, dim, vals)
            })
            .collect();
        if rows.len() != self.classes.len() {
            return Err(Error::NotAGroup(format!(
                "found {} characters for {} classes",
                rows.len(),
                self.classes.len()
            )));
        }
        // Computed tables get a deterministic order: trivial first, then by dimension and values.
        let key = |vals: &[Complex64]| -> Vec<(i64, i64)> {
            vals.iter().map(|z| ((z.re * 1e6).round() as i64, (-z.im * 1e6).round() as i64)).collect()
        };
        if rows.iter().any(|r| r.0.is_none()) {
            rows.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| key(&b.2).cmp(&key(&a.2))));
        }
        let mut counters = std::collections::BTreeMap::new();
        let mut irreps = Vec::with_capacity(rows.len());
        for (name, dim, vals) in &rows {
            let trivial = vals.iter().all(|v| (v - 1.0).norm() < TOL);
            let name = match name {
                Some(n) => n.clone(),
                None if trivial => "trivial".to_string(),
                None => {
                    let c = counters.entry(*dim).or_insert(0usize);
                    *c += 1;
                    format!("d{dim}_{c}")
                }
            };
            let nu: Complex64 = (0..g.order())
                .map(|x| vals[self.class_of[g.mul(x, x)]])
                .sum::<Complex64>()
                / order;
            let indicator = nu.re.round();
            if (nu - indicator).norm() > 1e-6 || indicator.abs() > 1.0 {
                return Err(Error::NotAGroup(format!("indicator of {name} is not -1, 0 or 1: {nu}")));
            }
            irreps.push(Irrep {
                name,
                dim: *dim,
                class_values: vals.clone(),
                indicator: indicator as i8,
                conjugate: usize::MAX,
            });
        }
        for i in 0..irreps.len() {
            let conj: Vec<Complex64> = irreps[i].class_values.iter().map(|z| z.conj()).collect();
            let j = irreps
                .iter()
                .position(|w| w.class_values.iter().zip(&conj).all(|(a, b)| (a - b).norm() < 1e-7))
                .ok_or_else(|| Error::NotAGroup("conjugate character missing from table".into()))?;
            irreps[i].conjugate = j;
        }
        Ok(irreps)
    }

    fn check_orthogonality(&self) -> Result<()> {
        let order: usize = self.classes.iter().map(Vec::len).sum();
        for (i, a) in self.irreps.iter().enumerate() {
            for (j, b) in self.irreps.iter().enumerate() {
                let ip: Complex64 = self
                    .classes
                    .iter()
                    .enumerate()
                    .map(|(c, m)| a.class_values[c].conj() * b.class_values[c] * m.len() as f64)
                    .sum::<Complex64>()
                    / order as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                if (ip - target).norm() > 1e-10 {
                    return Err(Error::NotAGroup(format!(
                        "character orthogonality violated for ({}, {}): {ip}",
                        a.name, b.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Maximal deviation of `⟨χᵢ, χⱼ⟩` from `δᵢⱼ`.
    pub fn orthogonality_defect(&self) -> f64 {
        let order: usize = self.classes.iter().map(Vec::len).sum();
        let mut worst = 0.0f64;
        for (i, a) in self.irreps.iter().enumerate() {
            for (j, b) in self.irreps.iter().enumerate() {
                let ip: Complex64 = self
                    .classes
                    .iter()
                    .enumerate()
                    .map(|(c, m)| a.class_values[c].conj() * b.class_values[c] * m.len() as f64)
                    .sum::<Complex64>()
                    / order as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }
}

/// `χ_k(g) = Π_a exp(2πi k_a g_a / n_a)` on `Z_{n₁} × ⋯`, named `chi_k` for one
/// factor and `chi_(k₁,k₂,…)` otherwise.
fn abelian_product_characters(
    orders: &[usize],
    class_of: &[usize],
    n_classes: usize,
) -> Vec<(Option<String>, Vec<Complex64>)> {
    let digits = |mut x: usize| -> Vec<usize> {
        let mut d = vec![0; orders.len()];
        for a in (0..orders.len()).rev() {
            d[a] = x % orders[a];
            x /= orders[a];
        }
        d
    };
    let total: usize = orders.iter().product();
    (0..total)
        .map(|k| {
            let kd = digits(k);
            let mut vals = vec![Complex64::new(0.0, 0.0); n_classes];
            for g in 0..total {
                let gd = digits(g);
                let phase: f64 = (0..orders.len())
                    .map(|a| 2.0 * PI * ((kd[a] * gd[a]) % orders[a]) as f64 / orders[a] as f64)
                    .sum();
                vals[class_of[g]] = snap(Complex64::from_polar(1.0, phase));
            }
            let name = if orders.len() == 1 {
                format!("chi_{k}")
            } else {
                format!("chi_({})", kd.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))
            };
            (Some(name), vals)
        })
        .collect()
}

/// Removes rounding noise so that exact values such as `i` compare exactly.
fn snap(z: Complex64) -> Complex64 {
    let r = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
    Complex64::new(r(z.re), r(z.im))
}

/// Characters from the simultaneous eigenvectors of the class-sum operators.
///
/// Class sums `K_j` act on the centre of the group algebra; in the basis `K_l/√|C_l|`
/// the adjoint of `K_j` is `K_{j*}` (inverse class), so a random combination
/// `Σ c_j K_j + c̄_j K_{j*}` is Hermitian and, generically, has simple spectrum. Its
/// eigenvectors are the central idempotents, with coordinates `∝ √|C_l| · conj χ(g_l)`.
fn burnside_dixon(
    g: &FiniteGroup,
    classes: &[Vec<usize>],
    class_of: &[usize],
) -> Result<Vec<(Option<String>, Vec<Complex64>)>> {
    let r = classes.len();
    let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let inv_class: Vec<usize> = reps.iter().map(|&x| class_of[g.inv(x)]).collect();
    // a[j][k][l] = #{x ∈ C_j : x⁻¹ z_l ∈ C_k}, i.e. coefficient of K_l in K_j K_k.
    let mut coeff = vec![0.0f64; r * r * r];
    for j in 0..r {
        for l in 0..r {
            for &x in &classes[j] {
                let y = g.mul(g.inv(x), reps[l]);
                coeff[(j * r + class_of[y]) * r + l] += 1.0;
            }
        }
    }
    let sizes: Vec<f64> = classes.iter().map(|c| c.len() as f64).collect();
    // Matrix of left multiplication by K_j in the orthonormal basis: entry (l, k).
    let op = |j: usize| -> DMatrix<Complex64> {
        DMatrix::from_fn(r, r, |l, k| {
            Complex64::new(coeff[(j * r + k) * r + l] * sizes[l].sqrt() / sizes[k].sqrt(), 0.0)
        })
    };
    let ops: Vec<DMatrix<Complex64>> = (0..r).map(op).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    for _attempt in 0..16 {
        let mut h = DMatrix::<Complex64>::zeros(r, r);
        for j in 0..r {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h += &ops[j] * c + &ops[inv_class[j]] * c.conj();
        }
        // Symmetrize against rounding before the Hermitian solver.
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let scale = ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if ev.windows(2).any(|w| w[1] - w[0] < 1e-6 * scale) {
            continue;
        }
        let mut chars = Vec::with_capacity(r);
        for col in 0..r {
            let x = eig.eigenvectors.column(col);
            let e = class_of[g.identity()];
            let v: Vec<Complex64> = (0..r).map(|l| x[l] / sizes[l].sqrt()).collect();
            let v0 = v[e];
            if v0.norm() < 1e-12 {
                return Err(Error::NotAGroup("idempotent with vanishing identity coefficient".into()));
            }
            let v: Vec<Complex64> = v.iter().map(|z| z / v0).collect();
            let norm: f64 = (0..r).map(|l| sizes[l] * v[l].norm_sqr()).sum();
            let dim = (g.order() as f64 / norm).sqrt();
            let d = dim.round();
            if (dim - d).abs() > 1e-6 || d < 1.0 {
                return Err(Error::NotAGroup(format!("non-integral character degree {dim}")));
            }
            chars.push((None, v.iter().map(|z| snap(z.conj() * d)).collect()));
        }
        return Ok(chars);
    }
    Err(Error::NotAGroup("class-sum spectrum stayed degenerate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sectors::group::NamedGroup;

    fn table(name: &str) -> (FiniteGroup, CharacterTable) {
        let g = NamedGroup::try_from(name.to_string()).unwrap().build().unwrap();
        let t = CharacterTable::compute(&g).unwrap();
        (g, t)
    }

    #[test]
    fn cyclic_characters_are_powers_of_i() {
        let (_, t) = table("Z4");
        assert_eq!(t.irreps.len(), 4);
        let i = Complex64::new(0.0, 1.0);
        for (k, v) in t.irreps.iter().enumerate() {
            let name_k: usize = v.name.trim_start_matches("chi_").parse().unwrap();
            for j in 0..4 {
                let expected = i.powu((name_k * j) as u32);
                assert!((t.character(k, j) - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn s3_table_matches_classic_values() {
        let (g, t) = table("S3");
        let dims: Vec<usize> = t.irreps.iter().map(|v| v.dim).collect();
        assert_eq!(dims, vec![1, 1, 2]);
        assert_eq!(t.irreps[0].name, "trivial");
        // Values on (e, 3-cycles, transpositions).
        let three_cycle = g.index_of("120").unwrap();
        let transposition = g.index_of("102").unwrap();
        let sign = &t.irreps[1];
        let std = 2;
        assert!((t.character(1, three_cycle) - 1.0).norm() < 1e-12);
        assert!((t.character(1, transposition) + 1.0).norm() < 1e-12);
        assert!((t.character(std, three_cycle) + 1.0).norm() < 1e-12);
        assert!(t.character(std, transposition).norm() < 1e-12);
        assert_eq!(sign.indicator, 1);
        assert!(t.irreps.iter().all(|v| v.indicator == 1));
    }

    #[test]
    fn indicators_distinguish_d4_and_q8() {
        let (_, d4) = table("D4");
        let (_, q8) = table("Q8");
        let two_dim = |t: &CharacterTable| t.irreps.iter().find(|v| v.dim == 2).unwrap().indicator;
        assert_eq!(two_dim(&d4), 1);
        assert_eq!(two_dim(&q8), -1);
        assert!(d4.orthogonality_defect() < 1e-10);
        assert!(q8.orthogonality_defect() < 1e-10);
    }

    #[test]
    fn generic_path_agrees_with_closed_form_on_abelian_groups() {
        // Rebuild Z3×Z2 from its raw table so the closed form is not available.
        let (g, closed) = table("Z3xZ2");
        let raw_table: Vec<Vec<usize>> = (0..g.order()).map(|a| (0..g.order()).map(|b| g.mul(a, b)).collect()).collect();
        let plain = FiniteGroup::from_table(g.names().to_vec(), raw_table).unwrap();
        let t = CharacterTable::compute(&plain).unwrap();
        assert_eq!(t.irreps.len(), 6);
        for v in &t.irreps {
            let found = closed.irreps.iter().any(|w| {
                (0..g.order()).all(|x| {
                    (v.class_values[t.class_of[x]] - w.class_values[closed.class_of[x]]).norm() < 1e-10
                })
            });
            assert!(found, "{} not in closed-form table", v.name);
        }
    }

    #[test]
    fn complex_characters_pair_with_conjugates() {
        let (_, t) = table("Z4");
        let idx = |n: &str| t.index_of(n).unwrap();
        assert_eq!(t.irreps[idx("chi_1")].conjugate, idx("chi_3"));
        assert_eq!(t.irreps[idx("chi_2")].conjugate, idx("chi_2"));
        assert_eq!(t.irreps[idx("chi_1")].indicator, 0);
        assert_eq!(t.irreps[idx("chi_2")].indicator, 1);
    }
}
