//! Momentum-space calculus for scalar test functions: Fourier data, dilations,
//! `□ⁿ` on the mass shell, the single-particle map `T` and quadrature.
//!
//! Conventions: `f̂(p) = ∫ f(x) e^{ipx} dx` (Minkowski pairing on spacetime),
//! `ω_m(p) = √(m² + |p|²)`, and momentum integrals carry `(2π)^{-s}`.

mod quadrature;
mod testfn;
mod vector;

pub use quadrature::{
    composite_gauss_legendre, MassMeasure, MassTruncation, Node, QuadratureRule, QuadratureSettings,
};
pub use testfn::{Dims, Domain, Fourier, Gaussian, GridBump, Kind, TestFunction, Vec3};
pub use vector::{box_multiplier, single_particle_map, ChargeLabel, Energy, OneParticleVector};

#[allow(unused_imports)]
pub(crate) use testfn::{dot, norm};

use crate::error::{invalid, Result};

/// Exponents `(a, b)` of the Cauchy-data dilation `g ↦ λ^a g(·/λ)`, `h ↦ λ^b h(·/λ)`.
///
/// `a + b + s = 0` keeps the symplectic form fixed; `a = −(s+1)/2` then makes the
/// massless vacuum form invariant, since `q_m(δ_λ(g,h)) = q_{λm}(g,h)`.
pub fn dilation_exponents(dims: Dims) -> (f64, f64) {
    let s = dims.spatial() as f64;
    (-(s + 1.0) / 2.0, (1.0 - s) / 2.0)
}

/// Dilation of a Cauchy pair (field smearing `g`, momentum smearing `h`).
pub fn dilate_cauchy(g: &TestFunction, h: &TestFunction, lambda: f64) -> Result<(TestFunction, TestFunction)> {
    if g.domain() != Domain::Spatial || h.domain() != Domain::Spatial {
        return Err(invalid("Cauchy data must be spatial functions"));
    }
    let (a, b) = dilation_exponents(g.dims());
    Ok((g.dilate_with_prefactor(lambda, a)?, h.dilate_with_prefactor(lambda, b)?))
}

/// Spacetime dilation `f ↦ f(·/λ)`, without prefactor. Under it
/// `‖T δ_λ f‖²_m = λ^{s+3} ‖T f‖²_{λm}` at a point mass.
pub fn dilate_spacetime(f: &TestFunction, lambda: f64) -> Result<TestFunction> {
    if f.domain() != Domain::Spacetime {
        return Err(invalid("spacetime dilation applied to a spatial function"));
    }
    f.dilate_with_prefactor(lambda, 0.0)
}

/// Power of `λ` relating `‖T δ_λ f‖²` at mass `m` to `‖T f‖²` at mass `λm`.
pub fn point_mass_covariance_exponent(dims: Dims) -> i32 {
    dims.spatial() as i32 + 3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_fix_symplectic_weight() {
        for s in [2, 3] {
            let d = Dims::new(s).unwrap();
            let (a, b) = dilation_exponents(d);
            assert_eq!(a + b + s as f64, 0.0);
        }
    }

    #[test]
    fn identity_dilation() {
        let d = Dims::three();
        let g = TestFunction::spatial_gaussian(d, 1.0).unwrap();
        let (g1, h1) = dilate_cauchy(&g, &g, 1.0).unwrap();
        assert_eq!(g1, g);
        assert_eq!(h1, g);
        let f = TestFunction::spacetime_gaussian(d, 1.0, 0.5).unwrap();
        assert_eq!(dilate_spacetime(&f, 1.0).unwrap(), f);
        assert!(dilate_spacetime(&g, 0.5).is_err());
        assert!(dilate_cauchy(&f, &f, 0.5).is_err());
    }
}
