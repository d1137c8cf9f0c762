//! Shared fixtures for the kernel benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scalelab_core::models::{build_free_factor, Factor, MassAssignment};
use scalelab_core::nuclearity::{random_map, FiniteRankMap};
use scalelab_core::onep::Dims;
use scalelab_core::sectors::{FinitePair, NamedGroup};
use scalelab_core::states::{reference_probes, CauchyDatum};
use scalelab_core::theta::{reference_generators, GeneratorFamily};

pub fn probe() -> CauchyDatum {
    reference_probes(Dims::three()).expect("reference probes").remove(0)
}

pub fn free_generators(mass: f64) -> GeneratorFamily {
    let dims = Dims::three();
    let factor = build_free_factor(
        dims,
        &[MassAssignment {
            irrep: "trivial".into(),
            conjugate: "trivial".into(),
            dim: 1,
            mass,
        }],
    )
    .expect("free factor");
    GeneratorFamily::neutral(Factor::Free(factor), reference_generators(dims).expect("generators")).expect("family")
}

pub fn random_finite_map(rows: usize, cols: usize, rank: usize, seed: u64) -> FiniteRankMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_map(rows, cols, rank, &mut rng).expect("random map")
}

pub fn group_pair(group: &str) -> FinitePair {
    let g = NamedGroup::try_from(group.to_string()).expect("known group").build().expect("group");
    let n = g.center();
    FinitePair::new(g, n).expect("pair")
}
