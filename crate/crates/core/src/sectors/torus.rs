use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Closed subgroup of the torus `T^r = R^r / 2πZ^r`: finitely many elements of the form
/// `2π·(a₁/b₁, …, a_r/b_r)` generating a finite part, plus subtorus directions
/// `t ↦ t·d` with integer `d`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TorusSubgroup {
    #[serde(default)]
    pub cyclic: Vec<Vec<(i64, i64)>>,
    #[serde(default)]
    pub directions: Vec<Vec<i64>>,
}

impl TorusSubgroup {
    /// `Z_n ⊂ U(1)`.
    pub fn roots_of_unity(n: i64) -> Self {
        Self {
            cyclic: vec![vec![(1, n)]],
            directions: Vec::new(),
        }
    }

    pub fn validate(&self, rank: usize) -> Result<()> {
        for g in &self.cyclic {
            if g.len() != rank || g.iter().any(|&(_, b)| b <= 0) {
                return Err(invalid("torus subgroup generator needs rank entries with positive denominators"));
            }
        }
        if self.directions.iter().any(|d| d.len() != rank) {
            return Err(invalid("subtorus direction has the wrong rank"));
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.directions.iter().all(|d| d.iter().all(|&x| x == 0))
            && self.cyclic.iter().all(|g| g.iter().all(|&(a, b)| a % b == 0))
    }

    /// `e^{i w·θ} = 1` on every generator and `w·d = 0` on every direction.
    pub fn annihilated_by(&self, w: &[i64]) -> bool {
        let on_generators = self.cyclic.iter().all(|g| {
            // Σ w_i a_i / b_i ∈ Z, evaluated over the common denominator.
            let den: i128 = g.iter().fold(1i128, |acc, &(_, b)| lcm(acc, b as i128));
            let num: i128 = g
                .iter()
                .zip(w)
                .map(|(&(a, b), &wi)| wi as i128 * a as i128 * (den / b as i128))
                .sum();
            num % den == 0
        });
        let on_directions = self
            .directions
            .iter()
            .all(|d| d.iter().zip(w).map(|(a, b)| a * b).sum::<i64>() == 0);
        on_generators && on_directions
    }
}

pub fn weight_name(w: &[i64]) -> String {
    if w.len() == 1 {
        format!("chi_{}", w[0])
    } else {
        format!("chi_({})", w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
    }
}

/// All weights in `[−b, b]^r` in lexicographic order.
pub fn weight_box(rank: usize, b: i64) -> Vec<Vec<i64>> {
    let side = (2 * b + 1) as usize;
    let total = side.pow(rank as u32);
    (0..total)
        .map(|mut k| {
            let mut w = vec![0i64; rank];
            for a in (0..rank).rev() {
                w[a] = (k % side) as i64 - b;
                k /= side;
            }
            w
        })
        .collect()
}

/// Weights generate iff they span `Z^r`, i.e. the gcd of the `r×r` minors is 1.
pub fn weights_generate(rank: usize, weights: &[Vec<i64>]) -> bool {
    if weights.len() < rank {
        return false;
    }
    let mut g: i128 = 0;
    let mut idx: Vec<usize> = (0..rank).collect();
    loop {
        let m: Vec<Vec<i128>> = idx.iter().map(|&i| weights[i].iter().map(|&x| x as i128).collect()).collect();
        g = gcd(g, bareiss_det(m).abs());
        if g == 1 {
            return true;
        }
        // Next combination of `rank` indices out of `weights.len()`.
        let n = weights.len();
        let mut i = rank;
        loop {
            if i == 0 {
                return g == 1;
            }
            i -= 1;
            if idx[i] < n - rank + i {
                idx[i] += 1;
                for j in i + 1..rank {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}
