//! Normed spaces, duality maps, and the Lyapunov functional.
//!
//! A space is `R^dim` carrying either the euclidean norm or the lp norm with
//! p in (1, 2]. Both families are 2-uniformly convex and uniformly smooth,
//! which is what the solvers in this crate assume. Points live in the primal
//! space E ([`Vector`]), linear functionals in the dual E* ([`DualVector`]);
//! the two are kept as distinct types because the iterations constantly move
//! between them and mixing them up is the classic bug in this setting.
//!
//! The normalized duality map J: E -> E* is characterised by
//! `<x, Jx> = ||x||^2` and `||Jx||_* = ||x||`. For the euclidean norm it is
//! the identity on coordinates; for lp it is
//! `(Jx)_i = ||x||^{2-p} |x_i|^{p-1} sgn(x_i)` with `J(0) = 0`. Its inverse
//! is the duality map of the dual norm lq, `1/p + 1/q = 1`.
//!
//! The Lyapunov functional
//! `phi(x, y) = ||x||^2 - 2<x, Jy> + ||y||^2`
//! plays the role of `||x - y||^2`; the companion
//! `V(x, x*) = ||x||^2 - 2<x, x*> + ||x*||_*^2` is the same quantity with a
//! dual second argument, so `V(x, x*) = phi(x, J^{-1} x*)`.
//!
//! The 2-uniform convexity constant `c` enters the solvers in two places:
//! the two-point bound `||x - y|| <= (2 / c^2) ||Jx - Jy||_*`, and the step
//! cap `c^2 * alpha / 2` for an alpha-inverse-strongly-monotone operator.
//! For lp(p) the constant is `c = sqrt(p - 1)`; the euclidean norm has
//! `c = 1`.

use std::fmt;

/// Norm family of a space. `Lp(2.0)` coincides with `Euclidean` and is
/// accepted; the duality map reduces to the identity there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormFamily {
    Euclidean,
    /// lp norm on coordinates, p restricted to (1, 2].
    Lp(f64),
}

/// A point of the primal space E, stored as plain coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(Vec<f64>);

/// A functional in the dual space E*, stored as plain coordinates. The
/// pairing `<x, f>` is the coordinate dot product for both norm families.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector(Vec<f64>);

macro_rules! coord_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn new(coords: Vec<f64>) -> Self {
                assert!(
                    coords.iter().all(|t| t.is_finite()),
                    "{} coordinates must be finite, got {:?}",
                    stringify!($ty),
                    coords
                );
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn iter(&self) -> std::slice::Iter<'_, f64> {
                self.0.iter()
            }

            /// Coordinatewise sum; panics on dimension mismatch.
            pub fn add(&self, other: &Self) -> Self {
                same_len(self.0.len(), other.0.len());
                Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
            }

            /// Coordinatewise difference; panics on dimension mismatch.
            pub fn sub(&self, other: &Self) -> Self {
                same_len(self.0.len(), other.0.len());
                Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
            }

            pub fn scale(&self, t: f64) -> Self {
                Self(self.0.iter().map(|a| a * t).collect())
            }

            /// Linear combination `sum_i t_i v_i`; panics if the terms mix
            /// dimensions or the list is empty.
            pub fn combine(terms: &[(f64, &Self)]) -> Self {
                assert!(!terms.is_empty(), "combine needs at least one term");
                let dim = terms[0].1.len();
                let mut out = vec![0.0; dim];
                for (t, v) in terms {
                    same_len(dim, v.len());
                    for (o, a) in out.iter_mut().zip(&v.0) {
                        *o += t * a;
                    }
                }
                Self(out)
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(coords: Vec<f64>) -> Self {
                Self::new(coords)
            }
        }

        impl std::ops::Index<usize> for $ty {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "[")?;
                for (i, t) in self.0.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, "]")
            }
        }
    };
}

coord_impls!(Vector);
coord_impls!(DualVector);

fn same_len(a: usize, b: usize) {
    assert!(a == b, "dimension mismatch: {a} vs {b}");
}

/// Duality pairing `<x, f>` between E and E*.
pub fn pairing(x: &Vector, f: &DualVector) -> f64 {
    same_len(x.len(), f.len());
    x.iter().zip(f.iter()).map(|(a, b)| a * b).sum()
}

fn lp_norm(coords: &[f64], p: f64) -> f64 {
    coords.iter().map(|t| t.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn euclidean_norm(coords: &[f64]) -> f64 {
    coords.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// Raise the coordinates of `x` to the duality-map profile of the norm
/// `l_s`: `out_i = ||x||_s^{2-s} |x_i|^{s-1} sgn(x_i)`, with 0 at the origin.
fn gauge_map(coords: &[f64], s: f64) -> Vec<f64> {
    let n = lp_norm(coords, s);
    if n == 0.0 {
        return vec![0.0; coords.len()];
    }
    let scale = n.powf(2.0 - s);
    coords
        .iter()
        .map(|&t| {
            if t == 0.0 {
                0.0
            } else {
                scale * t.abs().powf(s - 1.0) * t.signum()
            }
        })
        .collect()
}

/// A 2-uniformly convex, uniformly smooth space: `R^dim` with a norm family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceSpec {
    dim: usize,
    norm: NormFamily,
}

impl SpaceSpec {
    /// Euclidean space of the given dimension (convexity constant c = 1).
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "space dimension must be at least 1");
        Self { dim, norm: NormFamily::Euclidean }
    }

    /// lp space of the given dimension. Requires p in (1, 2]; outside that
    /// range the norm is not 2-uniformly convex (p > 2) or not smooth
    /// (p = 1) and the solvers' estimates fail.
    pub fn lp(dim: usize, p: f64) -> Self {
        assert!(dim >= 1, "space dimension must be at least 1");
        assert!(
            p > 1.0 && p <= 2.0,
            "lp norm requires p in (1, 2], got {p}"
        );
        Self { dim, norm: NormFamily::Lp(p) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_family(&self) -> NormFamily {
        self.norm
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.norm, NormFamily::Euclidean)
    }

    /// Conjugate exponent q of the norm (q = p / (p - 1); 2 for euclidean).
    pub fn dual_exponent(&self) -> f64 {
        match self.norm {
            NormFamily::Euclidean => 2.0,
            NormFamily::Lp(p) => p / (p - 1.0),
        }
    }

    /// The 2-uniform convexity constant c: 1 for euclidean, sqrt(p - 1) for
    /// lp(p). It satisfies `<x - y, Jx - Jy> >= c^2 ||x - y||^2`, from which
    /// the two-point bound `||x - y|| <= (2 / c^2) ||Jx - Jy||_*` follows.
    pub fn convexity_constant(&self) -> f64 {
        match self.norm {
            NormFamily::Euclidean => 1.0,
            NormFamily::Lp(p) => (p - 1.0).sqrt(),
        }
    }

    /// Largest step size `c^2 * alpha / 2` for which the forward step of an
    /// alpha-inverse-strongly-monotone operator keeps its phi estimate.
    pub fn step_cap(&self, alpha: f64) -> f64 {
        let c = self.convexity_constant();
        c * c * alpha / 2.0
    }

    fn check_dim(&self, n: usize) {
        assert!(
            n == self.dim,
            "dimension mismatch: space has dim {}, vector has dim {}",
            self.dim,
            n
        );
    }

    /// Primal norm `||x||`.
    pub fn norm(&self, x: &Vector) -> f64 {
        self.check_dim(x.len());
        match self.norm {
            NormFamily::Euclidean => euclidean_norm(x.as_slice()),
            NormFamily::Lp(p) => lp_norm(x.as_slice(), p),
        }
    }

    /// Dual norm `||f||_*` (the lq norm of the coordinates).
    pub fn dual_norm(&self, f: &DualVector) -> f64 {
        self.check_dim(f.len());
        match self.norm {
            NormFamily::Euclidean => euclidean_norm(f.as_slice()),
            NormFamily::Lp(p) => lp_norm(f.as_slice(), p / (p - 1.0)),
        }
    }

    /// Normalized duality map J: E -> E*. Single-valued because the norm is
    /// smooth; `J(0) = 0` and `sgn(0) = 0` by convention.
    pub fn duality_map(&self, x: &Vector) -> DualVector {
        self.check_dim(x.len());
        match self.norm {
            NormFamily::Euclidean => DualVector(x.as_slice().to_vec()),
            NormFamily::Lp(p) => DualVector(gauge_map(x.as_slice(), p)),
        }
    }

    /// Inverse duality map J^{-1}: E* -> E, the duality map of the dual
    /// norm lq applied to the coordinates.
    pub fn inverse_duality_map(&self, f: &DualVector) -> Vector {
        self.check_dim(f.len());
        match self.norm {
            NormFamily::Euclidean => Vector(f.as_slice().to_vec()),
            NormFamily::Lp(p) => Vector(gauge_map(f.as_slice(), p / (p - 1.0))),
        }
    }

    /// Lyapunov functional `phi(x, y) = ||x||^2 - 2<x, Jy> + ||y||^2`.
    ///
    /// Satisfies `(||x|| - ||y||)^2 <= phi(x, y) <= (||x|| + ||y||)^2` and
    /// reduces to `||x - y||^2` in the euclidean case.
    pub fn phi(&self, x: &Vector, y: &Vector) -> f64 {
        let jy = self.duality_map(y);
        let nx = self.norm(x);
        let ny = self.norm(y);
        nx * nx - 2.0 * pairing(x, &jy) + ny * ny
    }

    /// `V(x, f) = ||x||^2 - 2<x, f> + ||f||_*^2`, the phi functional with a
    /// dual second argument: `V(x, f) = phi(x, J^{-1} f)`.
    pub fn v_functional(&self, x: &Vector, f: &DualVector) -> f64 {
        let nx = self.norm(x);
        let nf = self.dual_norm(f);
        nx * nx - 2.0 * pairing(x, f) + nf * nf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn v(coords: &[f64]) -> Vector {
        Vector::new(coords.to_vec())
    }

    #[test]
    fn euclidean_duality_map_is_identity() {
        let e = SpaceSpec::euclidean(3);
        let x = v(&[1.5, -2.0, 0.25]);
        let jx = e.duality_map(&x);
        assert_eq!(jx.as_slice(), x.as_slice());
        let back = e.inverse_duality_map(&jx);
        assert_eq!(back.as_slice(), x.as_slice());
    }

    #[test]
    fn lp_norm_and_duality_map_match_closed_forms() {
        // lp(1.5), x = (1, 1): ||x|| = 2^(2/3), Jx = (2^(1/3), 2^(1/3)).
        let s = SpaceSpec::lp(2, 1.5);
        let x = v(&[1.0, 1.0]);
        assert!((s.norm(&x) - 2f64.powf(2.0 / 3.0)).abs() < TOL);
        let jx = s.duality_map(&x);
        let expect = 2f64.powf(1.0 / 3.0);
        assert!((jx[0] - expect).abs() < TOL);
        assert!((jx[1] - expect).abs() < TOL);
    }

    #[test]
    fn duality_map_defining_identities() {
        let s = SpaceSpec::lp(3, 1.5);
        let x = v(&[0.3, -1.2, 2.0]);
        let jx = s.duality_map(&x);
        let n = s.norm(&x);
        assert!((pairing(&x, &jx) - n * n).abs() < 1e-10);
        assert!((s.dual_norm(&jx) - n).abs() < 1e-10);
    }

    #[test]
    fn duality_map_vanishes_at_origin_only() {
        let s = SpaceSpec::lp(2, 1.5);
        let zero = Vector::zeros(2);
        assert_eq!(s.duality_map(&zero).as_slice(), &[0.0, 0.0]);
        assert_eq!(s.inverse_duality_map(&DualVector::zeros(2)).as_slice(), &[0.0, 0.0]);
        let x = v(&[1e-8, 0.0]);
        assert!(s.dual_norm(&s.duality_map(&x)) > 0.0);
    }

    #[test]
    fn inverse_duality_map_round_trips() {
        let s = SpaceSpec::lp(2, 1.5);
        for coords in [[2.0, -1.0], [1.0, 1.0], [0.0, 3.5], [-0.7, 0.0]] {
            let x = v(&coords);
            let back = s.inverse_duality_map(&s.duality_map(&x));
            for i in 0..2 {
                assert!(
                    (back[i] - x[i]).abs() <= 1e-10 * (1.0 + x[i].abs()),
                    "round trip failed at {coords:?}: {back}"
                );
            }
        }
    }

    #[test]
    fn lp_of_two_matches_euclidean() {
        let e = SpaceSpec::euclidean(3);
        let s = SpaceSpec::lp(3, 2.0);
        let x = v(&[0.4, -2.2, 1.0]);
        assert!((e.norm(&x) - s.norm(&x)).abs() < TOL);
        let (je, js) = (e.duality_map(&x), s.duality_map(&x));
        for i in 0..3 {
            assert!((je[i] - js[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn phi_matches_squared_distance_in_euclidean_space() {
        let e = SpaceSpec::euclidean(2);
        let x = v(&[3.0, -1.0]);
        let y = v(&[0.5, 2.0]);
        let d = x.sub(&y);
        assert!((e.phi(&x, &y) - pairing(&d, &DualVector::new(d.as_slice().to_vec()))).abs() < TOL);
    }

    #[test]
    fn phi_frozen_value_in_lp() {
        // lp(1.5): phi((1,1), (1,0)) = 2^(4/3) - 2 + 1.
        let s = SpaceSpec::lp(2, 1.5);
        let got = s.phi(&v(&[1.0, 1.0]), &v(&[1.0, 0.0]));
        let expect = 2f64.powf(4.0 / 3.0) - 1.0;
        assert!((got - expect).abs() < 1e-12, "got {got}, expected {expect}");
    }

    #[test]
    fn v_functional_equals_phi_of_pulled_back_point() {
        let s = SpaceSpec::lp(2, 1.5);
        let x = v(&[0.8, -0.3]);
        let f = DualVector::new(vec![1.1, 0.4]);
        let pulled = s.inverse_duality_map(&f);
        assert!((s.v_functional(&x, &f) - s.phi(&x, &pulled)).abs() < 1e-10);
    }

    #[test]
    fn step_cap_scales_with_convexity_constant() {
        let e = SpaceSpec::euclidean(1);
        assert!((e.step_cap(1.0) - 0.5).abs() < TOL);
        let s = SpaceSpec::lp(2, 1.5);
        assert!((s.step_cap(1.0) - 0.25).abs() < TOL);
        assert!((s.convexity_constant() - 0.5f64.sqrt()).abs() < TOL);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn mixed_dimensions_panic() {
        let e = SpaceSpec::euclidean(2);
        e.norm(&v(&[1.0, 2.0, 3.0]));
    }

    #[test]
    #[should_panic(expected = "lp norm requires p in (1, 2]")]
    fn lp_exponent_outside_range_is_rejected() {
        SpaceSpec::lp(2, 3.0);
    }

    #[test]
    #[should_panic(expected = "finite")]
    fn non_finite_coordinates_are_rejected() {
        Vector::new(vec![1.0, f64::NAN]);
    }
}
