//! Gauge-group bookkeeping for a pair `(G, N)`: irreps, symmetric generating sets,
//! the splitting `Δ = Δ₁ ∪ Δ₂`, conjugation data and the preserved-sector table.

mod characters;
mod group;
mod torus;

pub use characters::{CharacterTable, Irrep};
pub use group::{FiniteGroup, NamedGroup, Subgroup, MAX_ORDER};
pub use torus::{weight_box, weight_name, weights_generate, TorusSubgroup};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::MassAssignment;
use crate::onep::ChargeLabel;

const TOL: f64 = 1e-9;

/// A finite group with its character table and a normal subgroup.
#[derive(Debug, Clone)]
pub struct FinitePair {
    pub group: FiniteGroup,
    pub table: CharacterTable,
    pub normal: Subgroup,
}

impl FinitePair {
    pub fn new(group: FiniteGroup, normal: Subgroup) -> Result<Self> {
        if !normal.normal {
            return Err(Error::NotAGroup("N must be a normal subgroup".into()));
        }
        let table = CharacterTable::compute(&group)?;
        Ok(Self { group, table, normal })
    }

    pub fn named(name: &str, normal: &[&str]) -> Result<Self> {
        let group = NamedGroup::try_from(name.to_string())?.build()?;
        let names: Vec<String> = normal.iter().map(|s| s.to_string()).collect();
        let n = group.subgroup_by_names(&names)?;
        Self::new(group, n)
    }

    pub fn irrep(&self, name: &str) -> Result<usize> {
        self.table.index_of(name)
    }

    /// All nontrivial irreps, the default `Δ`.
    pub fn default_delta(&self) -> Vec<usize> {
        (0..self.table.irreps.len())
            .filter(|&i| self.table.irreps[i].name != "trivial")
            .collect()
    }

    pub fn trivial_on_n(&self, irrep: usize) -> bool {
        let d = self.table.irreps[irrep].dim as f64;
        self.normal
            .elements
            .iter()
            .all(|&x| (self.table.character(irrep, x) - d).norm() < TOL)
    }

    /// Edge cases accepted with a warning: `N = {e}` or `N = G`.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.normal.order() == 1 {
            w.push("N is trivial".to_string());
        }
        if self.normal.order() == self.group.order() {
            w.push("N is the whole group".to_string());
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratingVerdict {
    pub symmetric: bool,
    pub generating: bool,
}

impl GeneratingVerdict {
    pub fn holds(&self) -> bool {
        self.symmetric && self.generating
    }
}

/// Symmetric: closed under conjugation. Generating: `∩_{v∈Δ} ker v = {e}`.
pub fn generating_check(table: &CharacterTable, order: usize, delta: &[usize]) -> Result<GeneratingVerdict> {
    if delta.is_empty() {
        return Err(invalid("Δ must be nonempty"));
    }
    let symmetric = delta.iter().all(|&v| delta.contains(&table.irreps[v].conjugate));
    let kernel = common_kernel(table, order, delta);
    Ok(GeneratingVerdict {
        symmetric,
        generating: kernel.len() == 1,
    })
}

fn common_kernel(table: &CharacterTable, order: usize, delta: &[usize]) -> Vec<usize> {
    let mut k: Vec<usize> = (0..order).collect();
    for &v in delta {
        let kv = table.kernel(v);
        k.retain(|x| kv.binary_search(x).is_ok());
    }
    k
}

#[derive(Debug, Clone)]
pub struct Split {
    pub delta1: Vec<usize>,
    pub delta2: Vec<usize>,
    pub n1: Subgroup,
    /// `G₁ = G/N₁` with the coset index of each element of `G`.
    pub g1: (FiniteGroup, Vec<usize>),
    /// `G₂ = G/N`.
    pub g2: (FiniteGroup, Vec<usize>),
    /// `N₁ ∩ N = {e}` and `|N₁|·|N| = |G|`.
    pub iso_verified: bool,
}

pub fn split(pair: &FinitePair, delta: &[usize]) -> Result<Split> {
    let verdict = generating_check(&pair.table, pair.group.order(), delta)?;
    if !verdict.holds() {
        return Err(invalid(format!(
            "Δ must be symmetric and generating (symmetric = {}, generating = {})",
            verdict.symmetric, verdict.generating
        )));
    }
    let (delta2, delta1): (Vec<usize>, Vec<usize>) = delta.iter().partition(|&&v| pair.trivial_on_n(v));
    let n1_elems = common_kernel(&pair.table, pair.group.order(), &delta1);
    let n1 = pair.group.subgroup(&n1_elems)?;
    let g1 = pair.group.quotient(&n1)?;
    let g2 = pair.group.quotient(&pair.normal)?;
    let meet = n1.intersect(&pair.normal);
    let iso_verified = meet.order() == 1 && n1.order() * pair.normal.order() == pair.group.order();
    Ok(Split {
        delta1,
        delta2,
        n1,
        g1,
        g2,
        iso_verified,
    })
}

/// Irrep of `G/N` obtained from an irrep of `G` trivial on `N`; `None` otherwise.
pub fn descend(
    pair: &FinitePair,
    irrep: usize,
    quotient: &(FiniteGroup, Vec<usize>),
    quotient_table: &CharacterTable,
) -> Option<usize> {
    let (q, coset) = quotient;
    let values: Vec<num_complex::Complex64> = (0..q.order())
        .map(|c| {
            let rep = coset.iter().position(|&k| k == c).expect("every coset is hit");
            pair.table.character(irrep, rep)
        })
        .collect();
    // Constant on cosets is required for the value table to be well defined.
    let consistent = (0..pair.group.order())
        .all(|x| (pair.table.character(irrep, x) - values[coset[x]]).norm() < TOL);
    if !consistent {
        return None;
    }
    (0..quotient_table.irreps.len()).find(|&w| (0..q.order()).all(|c| (quotient_table.character(w, c) - values[c]).norm() < 1e-7))
}

/// `(m, p)` with `n = 2m + p`, the pairing of complex irreps and the real/quaternionic lists,
/// plus the ordered component labels `e_1, …, e_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationStructure {
    pub m: usize,
    pub p: usize,
    pub pairs: Vec<(String, String)>,
    pub real: Vec<String>,
    /// Quaternionic irreps, doubled to `v ⊕ v` and counted as a conjugate pair.
    pub quaternionic: Vec<String>,
    pub components: Vec<ChargeLabel>,
}

pub fn conjugation_structure(table: &CharacterTable, delta: &[usize]) -> Result<ConjugationStructure> {
    let mut s = ConjugationStructure {
        m: 0,
        p: 0,
        pairs: Vec::new(),
        real: Vec::new(),
        quaternionic: Vec::new(),
        components: Vec::new(),
    };
    let mut done = vec![false; table.irreps.len()];
    for &v in delta {
        if done[v] {
            continue;
        }
        let irrep = &table.irreps[v];
        let labels = |name: &str, range: std::ops::Range<usize>| range.map(|c| ChargeLabel::new(name, c)).collect::<Vec<_>>();
        match irrep.indicator {
            0 => {
                let c = irrep.conjugate;
                if !delta.contains(&c) {
                    return Err(Error::Conjugation(format!(
                        "{} is complex but its conjugate {} is not in Δ",
                        irrep.name, table.irreps[c].name
                    )));
                }
                s.m += irrep.dim;
                s.pairs.push((irrep.name.clone(), table.irreps[c].name.clone()));
                s.components.extend(labels(&irrep.name, 0..irrep.dim));
                s.components.extend(labels(&table.irreps[c].name, 0..irrep.dim));
                done[c] = true;
            }
            1 => {
                s.p += irrep.dim;
                s.real.push(irrep.name.clone());
                s.components.extend(labels(&irrep.name, 0..irrep.dim));
            }
            _ => {
                s.m += irrep.dim;
                s.quaternionic.push(irrep.name.clone());
                s.components.extend(labels(&irrep.name, 0..2 * irrep.dim));
            }
        }
        done[v] = true;
    }
    Ok(s)
}

/// Mass data for a free multiplet over `Δ₂`, with `mu` evaluated per irrep.
pub fn mass_assignments(table: &CharacterTable, delta2: &[usize], mu: impl Fn(&Irrep) -> f64) -> Vec<MassAssignment> {
    delta2
        .iter()
        .map(|&v| {
            let irrep = &table.irreps[v];
            MassAssignment {
                irrep: irrep.name.clone(),
                conjugate: table.irreps[irrep.conjugate].name.clone(),
                dim: irrep.dim,
                mass: mu(irrep),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Delta1,
    Delta2,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRow {
    pub irrep: String,
    pub dim: usize,
    pub indicator: i8,
    pub trivial_on_n: bool,
    pub preserved: bool,
    pub factor: Assignment,
    pub quaternionic_doubled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorTable {
    pub rows: Vec<SectorRow>,
    pub quotient_irreps: Option<usize>,
    pub iso_verified: Option<bool>,
    pub warnings: Vec<String>,
}

impl SectorTable {
    pub fn preserved(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.preserved).map(|r| r.irrep.as_str()).collect()
    }

    pub fn non_preserved(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| !r.preserved).map(|r| r.irrep.as_str()).collect()
    }
}

/// One row per irrep of `G`; a sector is preserved exactly when `N ⊆ ker v`.
pub fn sector_table(pair: &FinitePair, delta: &[usize]) -> Result<SectorTable> {
    let sp = split(pair, delta)?;
    let rows = (0..pair.table.irreps.len())
        .map(|v| {
            let irrep = &pair.table.irreps[v];
            let trivial = pair.trivial_on_n(v);
            SectorRow {
                irrep: irrep.name.clone(),
                dim: irrep.dim,
                indicator: irrep.indicator,
                trivial_on_n: trivial,
                preserved: trivial,
                factor: if sp.delta1.contains(&v) {
                    Assignment::Delta1
                } else if sp.delta2.contains(&v) {
                    Assignment::Delta2
                } else {
                    Assignment::Outside
                },
                quaternionic_doubled: irrep.indicator == -1,
            }
        })
        .collect();
    let quotient = CharacterTable::compute(&sp.g2.0)?;
    Ok(SectorTable {
        rows,
        quotient_irreps: Some(quotient.irreps.len()),
        iso_verified: Some(sp.iso_verified),
        warnings: pair.warnings(),
    })
}

/// `(T^r, N)` with weights enumerated in a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPair {
    pub rank: usize,
    pub subgroup: TorusSubgroup,
}

impl TorusPair {
    pub fn new(rank: usize, subgroup: TorusSubgroup) -> Result<Self> {
        if rank == 0 {
            return Err(invalid("torus rank must be positive"));
        }
        subgroup.validate(rank)?;
        Ok(Self { rank, subgroup })
    }

    pub fn u1(n: TorusSubgroup) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn generating_check(&self, delta: &[Vec<i64>]) -> Result<GeneratingVerdict> {
        if delta.is_empty() {
            return Err(invalid("Δ must be nonempty"));
        }
        if delta.iter().any(|w| w.len() != self.rank) {
            return Err(invalid("weight of the wrong rank"));
        }
        let symmetric = delta.iter().all(|w| {
            let neg: Vec<i64> = w.iter().map(|x| -x).collect();
            delta.contains(&neg)
        });
        Ok(GeneratingVerdict {
            symmetric,
            generating: weights_generate(self.rank, delta),
        })
    }

    /// `Δ₂` = weights trivial on `N`; the isomorphism check is not attempted for tori.
    pub fn split(&self, delta: &[Vec<i64>]) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
        if !self.generating_check(delta)?.holds() {
            return Err(invalid("Δ must be symmetric and generating"));
        }
        let (d2, d1): (Vec<Vec<i64>>, Vec<Vec<i64>>) =
            delta.iter().cloned().partition(|w| self.subgroup.annihilated_by(w));
        Ok((d1, d2))
    }

    pub fn conjugation_structure(&self, delta: &[Vec<i64>]) -> Result<ConjugationStructure> {
        let mut s = ConjugationStructure {
            m: 0,
            p: 0,
            pairs: Vec::new(),
            real: Vec::new(),
            quaternionic: Vec::new(),
            components: Vec::new(),
        };
        let mut seen: Vec<&Vec<i64>> = Vec::new();
        for w in delta {
            if seen.contains(&w) {
                continue;
            }
            seen.push(w);
            if w.iter().all(|&x| x == 0) {
                s.p += 1;
                s.real.push(weight_name(w));
                s.components.push(ChargeLabel::new(weight_name(w), 0));
                continue;
            }
            let neg: Vec<i64> = w.iter().map(|x| -x).collect();
            let partner = delta
                .iter()
                .find(|v| **v == neg)
                .ok_or_else(|| Error::Conjugation(format!("{} has no conjugate in Δ", weight_name(w))))?;
            seen.push(partner);
            s.m += 1;
            s.pairs.push((weight_name(w), weight_name(&neg)));
            s.components.push(ChargeLabel::new(weight_name(w), 0));
            s.components.push(ChargeLabel::new(weight_name(&neg), 0));
        }
        Ok(s)
    }

    /// Rows for every weight in `[−b, b]^r`.
    pub fn sector_table(&self, delta: &[Vec<i64>], b: i64) -> Result<SectorTable> {
        let (d1, d2) = self.split(delta)?;
        let rows = weight_box(self.rank, b)
            .into_iter()
            .map(|w| {
                let trivial = self.subgroup.annihilated_by(&w);
                SectorRow {
                    irrep: weight_name(&w),
                    dim: 1,
                    indicator: if w.iter().all(|&x| x == 0) { 1 } else { 0 },
                    trivial_on_n: trivial,
                    preserved: trivial,
                    factor: if d1.contains(&w) {
                        Assignment::Delta1
                    } else if d2.contains(&w) {
                        Assignment::Delta2
                    } else {
                        Assignment::Outside
                    },
                    quaternionic_doubled: false,
                }
            })
            .collect();
        let mut warnings = Vec::new();
        if self.subgroup.is_trivial() {
            warnings.push("N is trivial".to_string());
        }
        Ok(SectorTable {
            rows,
            quotient_irreps: None,
            iso_verified: None,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(pair: &FinitePair, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| pair.table.irreps[i].name.clone()).collect()
    }

    fn by_name(pair: &FinitePair, n: &[&str]) -> Vec<usize> {
        n.iter().map(|s| pair.irrep(s).unwrap()).collect()
    }

    #[test]
    fn z4_generating_checks() {
        let pair = FinitePair::named("Z4", &["0"]).unwrap();
        let all = by_name(&pair, &["chi_1", "chi_2", "chi_3"]);
        assert!(generating_check(&pair.table, 4, &all).unwrap().holds());
        let v = generating_check(&pair.table, 4, &by_name(&pair, &["chi_2"])).unwrap();
        assert!(v.symmetric && !v.generating);
        let v = generating_check(&pair.table, 4, &by_name(&pair, &["chi_1"])).unwrap();
        assert!(!v.symmetric && v.generating);
        assert!(generating_check(&pair.table, 4, &[]).is_err());
    }

    #[test]
    fn z4_split_iso_check_fails_as_reported() {
        let pair = FinitePair::named("Z4", &["0", "2"]).unwrap();
        let delta = by_name(&pair, &["chi_1", "chi_2", "chi_3"]);
        let s = split(&pair, &delta).unwrap();
        assert_eq!(names(&pair, &s.delta2), vec!["chi_2"]);
        assert_eq!(names(&pair, &s.delta1), vec!["chi_1", "chi_3"]);
        assert_eq!(s.n1.elements, vec![0]);
        assert!(!s.iso_verified);
        assert_eq!(s.g2.0.order(), 2);
    }

    #[test]
    fn klein_four_split() {
        let n = ["(0,0)", "(1,0)"];
        let pair = FinitePair::named("Z2xZ2", &n).unwrap();
        let all = by_name(&pair, &["chi_(1,0)", "chi_(0,1)", "chi_(1,1)"]);
        let s = split(&pair, &all).unwrap();
        assert_eq!(names(&pair, &s.delta2), vec!["chi_(0,1)"]);
        // ker χ₁₀ ∩ ker χ₁₁ is trivial, so the product check fails for the full Δ.
        assert_eq!(s.n1.order(), 1);
        assert!(!s.iso_verified);
        let two = by_name(&pair, &["chi_(1,0)", "chi_(0,1)"]);
        let s = split(&pair, &two).unwrap();
        let n1: Vec<&str> = s.n1.elements.iter().map(|&x| pair.group.name(x)).collect();
        assert_eq!(n1, vec!["(0,0)", "(0,1)"]);
        assert!(s.iso_verified);
    }

    #[test]
    fn trivial_n_edge_case() {
        let pair = FinitePair::named("S3", &["012"]).unwrap();
        let delta = pair.default_delta();
        let s = split(&pair, &delta).unwrap();
        assert_eq!(s.delta2, delta);
        assert!(s.delta1.is_empty());
        assert_eq!(s.n1.order(), 6);
        assert_eq!(s.g1.0.order(), 1);
        assert_eq!(pair.warnings(), vec!["N is trivial".to_string()]);
    }

    #[test]
    fn conjugation_structures() {
        let z4 = FinitePair::named("Z4", &["0"]).unwrap();
        let c = conjugation_structure(&z4.table, &by_name(&z4, &["chi_1", "chi_3"])).unwrap();
        assert_eq!((c.m, c.p), (1, 0));
        assert!(conjugation_structure(&z4.table, &by_name(&z4, &["chi_1"])).is_err());
        let s3 = FinitePair::named("S3", &["012"]).unwrap();
        let sign = s3.table.irreps.iter().position(|v| v.dim == 1 && v.name != "trivial").unwrap();
        let c = conjugation_structure(&s3.table, &[sign]).unwrap();
        assert_eq!((c.m, c.p), (0, 1));
        let q8 = FinitePair::named("Q8", &["1"]).unwrap();
        let two = q8.table.irreps.iter().position(|v| v.dim == 2).unwrap();
        let c = conjugation_structure(&q8.table, &[two]).unwrap();
        assert_eq!(c.quaternionic.len(), 1);
        assert_eq!(2 * c.m + c.p, 4);
        assert_eq!(c.components.len(), 4);
    }

    #[test]
    fn sector_tables_for_reference_pairs() {
        let z4 = FinitePair::named("Z4", &["0", "2"]).unwrap();
        let t = sector_table(&z4, &z4.default_delta()).unwrap();
        assert_eq!(t.preserved(), vec!["chi_0", "chi_2"]);
        assert_eq!(t.non_preserved(), vec!["chi_1", "chi_3"]);
        assert_eq!(t.quotient_irreps, Some(2));

        let s3 = FinitePair::named("S3", &["012", "120", "201"]).unwrap();
        let t = sector_table(&s3, &s3.default_delta()).unwrap();
        assert_eq!(t.preserved().len(), 2);
        assert_eq!(t.non_preserved().len(), 1);
        assert_eq!(t.rows.iter().find(|r| !r.preserved).unwrap().dim, 2);
        assert_eq!(t.quotient_irreps, Some(2));

        let d4 = FiniteGroup::d4().unwrap();
        let center = d4.center();
        let pair = FinitePair::new(d4, center).unwrap();
        let t = sector_table(&pair, &pair.default_delta()).unwrap();
        assert_eq!(t.preserved().len(), t.quotient_irreps.unwrap());
        assert_eq!(t.preserved().len(), 4);
    }

    #[test]
    fn u1_with_z3() {
        let pair = TorusPair::u1(TorusSubgroup::roots_of_unity(3)).unwrap();
        let delta = vec![vec![1], vec![-1]];
        let t = pair.sector_table(&delta, 4).unwrap();
        assert_eq!(t.preserved(), vec!["chi_-3", "chi_0", "chi_3"]);
        assert_eq!(t.iso_verified, None);
        let c = pair.conjugation_structure(&delta).unwrap();
        assert_eq!((c.m, c.p), (1, 0));
    }

    #[test]
    fn split_is_idempotent_on_the_quotient() {
        let pair = FinitePair::named("S3", &["012", "120", "201"]).unwrap();
        let s = split(&pair, &pair.default_delta()).unwrap();
        let qt = CharacterTable::compute(&s.g2.0).unwrap();
        let down: Vec<usize> = s.delta2.iter().map(|&v| descend(&pair, v, &s.g2, &qt).unwrap()).collect();
        let quotient_pair = FinitePair::new(s.g2.0.clone(), s.g2.0.trivial_subgroup()).unwrap();
        let again = split(&quotient_pair, &down).unwrap();
        assert_eq!(again.delta2, down);
        // Non-preserved irreps do not descend.
        for &v in &s.delta1 {
            assert!(descend(&pair, v, &s.g2, &qt).is_none());
        }
    }

    #[test]
    fn free_factor_over_s3_quotient() {
        let pair = FinitePair::named("S3", &["012", "120", "201"]).unwrap();
        let (q, _) = pair.group.quotient(&pair.normal).unwrap();
        let qt = CharacterTable::compute(&q).unwrap();
        let all: Vec<usize> = (0..qt.irreps.len()).collect();
        let masses = mass_assignments(&qt, &all, |_| 0.5);
        let f = crate::models::build_free_factor(crate::onep::Dims::three(), &masses).unwrap();
        assert_eq!(f.masses(), &[0.5, 0.5]);
    }
}
