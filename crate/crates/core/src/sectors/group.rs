use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group accepted for character-table work.
pub const MAX_ORDER: usize = 10_000;

/// Finite group given by its Cayley table, `table[a * n + b] = a·b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    names: Vec<String>,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    /// Orders of cyclic factors when the group is a known product `Z_{n₁} × ⋯`, with
    /// elements enumerated in mixed radix (last factor fastest).
    cyclic_orders: Option<Vec<usize>>,
}

impl FiniteGroup {
    /// Validates closure, identity, inverses and associativity.
    pub fn from_table(names: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::NotAGroup("empty element list".into()));
        }
        if n > MAX_ORDER {
            return Err(Error::NotAGroup(format!("order {n} exceeds the supported {MAX_ORDER}")));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != n {
            return Err(Error::NotAGroup("element names are not distinct".into()));
        }
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::NotAGroup(format!("multiplication table must be {n}x{n}")));
        }
        if table.iter().flatten().any(|&v| v >= n) {
            return Err(Error::NotAGroup("table entry outside the element list".into()));
        }
        let flat: Vec<usize> = table.into_iter().flatten().collect();
        let mul = |a: usize, b: usize| flat[a * n + b];
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mul(e, x) == x && mul(x, e) == x))
            .ok_or_else(|| Error::NotAGroup("no two-sided identity".into()))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| mul(a, b) == identity && mul(b, a) == identity)
                .ok_or_else(|| Error::NotAGroup(format!("element {} has no inverse", names[a])))?;
            inverse[a] = inv;
        }
        // Latin-square property follows from inverses; associativity by Light's test
        // over a generating set of the magma.
        let gens = magma_generators(n, &flat);
        for &g in &gens {
            for x in 0..n {
                let xg = mul(x, g);
                for y in 0..n {
                    if mul(xg, y) != mul(x, mul(g, y)) {
                        return Err(Error::NotAGroup(format!(
                            "not associative: ({}·{})·{} != {}·({}·{})",
                            names[x], names[g], names[y], names[x], names[g], names[y]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            names,
            table: flat,
            identity,
            inverse,
            cyclic_orders: None,
        })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NotAGroup("Z_0 is not finite".into()));
        }
        let names = (0..n).map(|k| k.to_string()).collect();
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let mut g = Self::from_table(names, table)?;
        g.cyclic_orders = Some(vec![n]);
        Ok(g)
    }

    /// Symmetric group on three letters; elements are one-line images of `(0 1 2)`.
    pub fn s3() -> Result<Self> {
        permutation_group(&[[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]])
    }

    /// Dihedral group of the square, `⟨r, s | r⁴ = s² = 1, srs = r⁻¹⟩`, elements `sᵃ rᵏ`.
    pub fn d4() -> Result<Self> {
        let name = |a: usize, k: usize| match (a, k) {
            (0, 0) => "e".to_string(),
            (0, 1) => "r".to_string(),
            (0, k) => format!("r{k}"),
            (1, 0) => "s".to_string(),
            (1, 1) => "sr".to_string(),
            (_, k) => format!("sr{k}"),
        };
        let idx = |a: usize, k: usize| a * 4 + k;
        let mut names = Vec::new();
        for a in 0..2 {
            for k in 0..4 {
                names.push(name(a, k));
            }
        }
        // (sᵃ rᵏ)(sᵇ rˡ) = s^{a+b} r^{(−1)^b k + l}
        let mut table = vec![vec![0; 8]; 8];
        for a in 0..2 {
            for k in 0..4 {
                for b in 0..2 {
                    for l in 0..4 {
                        let rk = if b == 1 { (4 - k) % 4 } else { k };
                        table[idx(a, k)][idx(b, l)] = idx((a + b) % 2, (rk + l) % 4);
                    }
                }
            }
        }
        Self::from_table(names, table)
    }

    /// Quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn q8() -> Result<Self> {
        let names: Vec<String> = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"].iter().map(|s| s.to_string()).collect();
        // Unit `u ∈ {1,i,j,k}` with sign: index = 2u + (sign < 0).
        let unit_mul = |u: usize, v: usize| -> (usize, bool) {
            match (u, v) {
                (0, x) | (x, 0) => (x, false),
                (a, b) if a == b => (0, true),
                (1, 2) => (3, false),
                (2, 1) => (3, true),
                (2, 3) => (1, false),
                (3, 2) => (1, true),
                (3, 1) => (2, false),
                (1, 3) => (2, true),
                _ => unreachable!(),
            }
        };
        let mut table = vec![vec![0; 8]; 8];
        for a in 0..8 {
            for b in 0..8 {
                let (w, neg) = unit_mul(a / 2, b / 2);
                let sign = (a % 2 == 1) ^ (b % 2 == 1) ^ neg;
                table[a][b] = 2 * w + usize::from(sign);
            }
        }
        Self::from_table(names, table)
    }

    pub fn direct_product(a: &Self, b: &Self) -> Result<Self> {
        let (na, nb) = (a.order(), b.order());
        if na * nb > MAX_ORDER {
            return Err(Error::NotAGroup(format!("product order {} too large", na * nb)));
        }
        let mut names = Vec::with_capacity(na * nb);
        for x in 0..na {
            for y in 0..nb {
                names.push(format!("({},{})", a.names[x], b.names[y]));
            }
        }
        let mut table = vec![vec![0; na * nb]; na * nb];
        for x1 in 0..na {
            for y1 in 0..nb {
                for x2 in 0..na {
                    for y2 in 0..nb {
                        table[x1 * nb + y1][x2 * nb + y2] = a.mul(x1, x2) * nb + b.mul(y1, y2);
                    }
                }
            }
        }
        let mut g = Self::from_table(names, table)?;
        g.cyclic_orders = match (&a.cyclic_orders, &b.cyclic_orders) {
            (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
            _ => None,
        };
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order() + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::NotAGroup(format!("unknown element {name:?}")))
    }

    pub fn cyclic_orders(&self) -> Option<&[usize]> {
        self.cyclic_orders.as_deref()
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Conjugacy classes in order of first element; the identity class comes first.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let n = self.order();
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut order: Vec<usize> = vec![self.identity];
        order.extend((0..n).filter(|&x| x != self.identity));
        for x in order {
            if class_of[x] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let mut members: BTreeSet<usize> = BTreeSet::new();
            for g in 0..n {
                members.insert(self.mul(self.mul(g, x), self.inv(g)));
            }
            for &m in &members {
                class_of[m] = id;
            }
            classes.push(members.into_iter().collect());
        }
        classes
    }

    /// Validated subgroup given by element indices.
    pub fn subgroup(&self, elements: &[usize]) -> Result<Subgroup> {
        let set: BTreeSet<usize> = elements.iter().copied().collect();
        if set.iter().any(|&x| x >= self.order()) {
            return Err(Error::NotAGroup("subgroup element out of range".into()));
        }
        if !set.contains(&self.identity) {
            return Err(Error::NotAGroup("subgroup must contain the identity".into()));
        }
        for &a in &set {
            if !set.contains(&self.inv(a)) {
                return Err(Error::NotAGroup(format!("subgroup not closed under inverse of {}", self.name(a))));
            }
            for &b in &set {
                if !set.contains(&self.mul(a, b)) {
                    return Err(Error::NotAGroup(format!(
                        "subgroup not closed: {}·{}",
                        self.name(a),
                        self.name(b)
                    )));
                }
            }
        }
        let normal = (0..self.order())
            .all(|g| set.iter().all(|&x| set.contains(&self.mul(self.mul(g, x), self.inv(g)))));
        Ok(Subgroup {
            elements: set.into_iter().collect(),
            normal,
        })
    }

    pub fn subgroup_by_names(&self, names: &[String]) -> Result<Subgroup> {
        let idx: Vec<usize> = names.iter().map(|n| self.index_of(n)).collect::<Result<_>>()?;
        self.subgroup(&idx)
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup {
            elements: vec![self.identity],
            normal: true,
        }
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup {
            elements: (0..self.order()).collect(),
            normal: true,
        }
    }

    pub fn center(&self) -> Subgroup {
        let n = self.order();
        let elements: Vec<usize> = (0..n).filter(|&z| (0..n).all(|g| self.mul(z, g) == self.mul(g, z))).collect();
        Subgroup { elements, normal: true }
    }

    /// `G/N` with cosets labelled by their first element; returns the quotient and the
    /// coset index of each element of `G`.
    pub fn quotient(&self, n: &Subgroup) -> Result<(FiniteGroup, Vec<usize>)> {
        if !n.normal {
            return Err(Error::NotAGroup("quotient by a non-normal subgroup".into()));
        }
        let order = self.order();
        let mut coset = vec![usize::MAX; order];
        let mut reps = Vec::new();
        for g in 0..order {
            if coset[g] != usize::MAX {
                continue;
            }
            let id = reps.len();
            for &x in &n.elements {
                coset[self.mul(g, x)] = id;
            }
            reps.push(g);
        }
        let k = reps.len();
        let names: Vec<String> = reps
            .iter()
            .map(|&r| if k == order { self.names[r].clone() } else { format!("{}N", self.names[r]) })
            .collect();
        let table = (0..k)
            .map(|a| (0..k).map(|b| coset[self.mul(reps[a], reps[b])]).collect())
            .collect();
        let q = FiniteGroup::from_table(names, table)?;
        Ok((q, coset))
    }
}

/// Element subset of a finite group, with the normality verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub elements: Vec<usize>,
    pub normal: bool,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn intersect(&self, other: &Subgroup) -> Subgroup {
        let elements = self.elements.iter().copied().filter(|x| other.contains(*x)).collect();
        Subgroup {
            elements,
            normal: self.normal && other.normal,
        }
    }
}

fn permutation_group(perms: &[[usize; 3]]) -> Result<FiniteGroup> {
    let names: Vec<String> = perms
        .iter()
        .map(|p| p.iter().map(|d| d.to_string()).collect::<String>())
        .collect();
    // (p·q)(i) = p(q(i))
    let table = perms
        .iter()
        .map(|p| {
            perms
                .iter()
                .map(|q| {
                    let c = [p[q[0]], p[q[1]], p[q[2]]];
                    perms.iter().position(|r| *r == c).expect("closed set of permutations")
                })
                .collect()
        })
        .collect();
    FiniteGroup::from_table(names, table)
}

/// Greedy generating set: add a missing element, then close under products.
fn magma_generators(n: usize, table: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    let mut members: Vec<usize> = Vec::new();
    let mut gens = Vec::new();
    for start in 0..n {
        if inside[start] {
            continue;
        }
        gens.push(start);
        let mut queue = VecDeque::from([start]);
        inside[start] = true;
        members.push(start);
        while let Some(z) = queue.pop_front() {
            let snapshot = members.len();
            for i in 0..snapshot {
                let c = members[i];
                for p in [table[z * n + c], table[c * n + z]] {
                    if !inside[p] {
                        inside[p] = true;
                        members.push(p);
                        queue.push_back(p);
                    }
                }
            }
        }
    }
    gens
}

/// Named finite groups accepted in configuration: `Z<n>`, `S3`, `D4`, `Q8` and
/// products joined by `x`, e.g. `Z2xZ2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedGroup {
    Cyclic(usize),
    S3,
    D4,
    Q8,
    Product(Vec<NamedGroup>),
}

impl TryFrom<String> for NamedGroup {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', '×']).map(str::trim).collect();
        let parse_one = |p: &str| -> Result<NamedGroup> {
            match p {
                "S3" => Ok(NamedGroup::S3),
                "D4" => Ok(NamedGroup::D4),
                "Q8" => Ok(NamedGroup::Q8),
                _ => p
                    .strip_prefix('Z')
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| *k > 0)
                    .map(NamedGroup::Cyclic)
                    .ok_or_else(|| Error::Config(format!("unknown group name {p:?}"))),
            }
        };
        if parts.len() == 1 {
            parse_one(parts[0])
        } else {
            Ok(NamedGroup::Product(parts.into_iter().map(parse_one).collect::<Result<_>>()?))
        }
    }
}

impl From<NamedGroup> for String {
    fn from(g: NamedGroup) -> String {
        match g {
            NamedGroup::Cyclic(n) => format!("Z{n}"),
            NamedGroup::S3 => "S3".into(),
            NamedGroup::D4 => "D4".into(),
            NamedGroup::Q8 => "Q8".into(),
            NamedGroup::Product(v) => v.into_iter().map(String::from).collect::<Vec<_>>().join("x"),
        }
    }
}

impl NamedGroup {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            NamedGroup::Cyclic(n) => FiniteGroup::cyclic(*n),
            NamedGroup::S3 => FiniteGroup::s3(),
            NamedGroup::D4 => FiniteGroup::d4(),
            NamedGroup::Q8 => FiniteGroup::q8(),
            NamedGroup::Product(parts) => {
                let mut it = parts.iter();
                let first = it.next().ok_or_else(|| Error::Config("empty product".into()))?.build()?;
                it.try_fold(first, |acc, p| FiniteGroup::direct_product(&acc, &p.build()?))
            }
        }
    }
}
