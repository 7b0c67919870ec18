//! Randomized identity checks for the geometry layer and the projection
//! operators, across both the euclidean and the lp norm families.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vi_core::geometry::pairing;
use vi_core::sets::{cut_set, generalized_project, SetSpec};
use vi_core::{DualVector, SpaceSpec, Vector};

fn euclid_case(max_dim: usize, span: f64) -> impl Strategy<Value = (SpaceSpec, Vec<f64>)> {
    (1..=max_dim).prop_flat_map(move |dim| {
        (
            Just(SpaceSpec::euclidean(dim)),
            prop::collection::vec(-span..span, dim),
        )
    })
}

fn lp_case(max_dim: usize, span: f64) -> impl Strategy<Value = (SpaceSpec, Vec<f64>)> {
    (1..=max_dim, 1.2f64..=2.0).prop_flat_map(move |(dim, p)| {
        (
            Just(SpaceSpec::lp(dim, p)),
            prop::collection::vec(-span..span, dim),
        )
    })
}

fn any_case() -> impl Strategy<Value = (SpaceSpec, Vec<f64>)> {
    prop_oneof![euclid_case(5, 10.0), lp_case(3, 5.0)]
}

/// Same space, two points.
fn any_pair() -> impl Strategy<Value = (SpaceSpec, Vec<f64>, Vec<f64>)> {
    any_case().prop_flat_map(|(space, x)| {
        let dim = x.len();
        let span = if space.is_euclidean() { 10.0 } else { 5.0 };
        (
            Just(space),
            Just(x),
            prop::collection::vec(-span..span, dim),
        )
    })
}

proptest! {
    #[test]
    fn duality_map_reproduces_the_norm((space, coords) in any_case()) {
        let x = Vector::new(coords);
        let jx = space.duality_map(&x);
        let n = space.norm(&x);
        let tol = 1e-9 * (1.0 + n * n);
        prop_assert!((pairing(&x, &jx) - n * n).abs() <= tol);
        prop_assert!((space.dual_norm(&jx) - n).abs() <= 1e-9 * (1.0 + n));
    }

    #[test]
    fn duality_map_round_trips((space, coords) in any_case()) {
        let x = Vector::new(coords);
        let back = space.inverse_duality_map(&space.duality_map(&x));
        let tol = 1e-9 * (1.0 + space.norm(&x));
        for i in 0..x.len() {
            prop_assert!((back[i] - x[i]).abs() <= tol, "coordinate {i}: {} vs {}", back[i], x[i]);
        }
    }

    #[test]
    fn duality_map_is_homogeneous((space, coords) in any_case(), t in -3.0f64..3.0) {
        let x = Vector::new(coords);
        let lhs = space.duality_map(&x.scale(t));
        let rhs = space.duality_map(&x).scale(t);
        let tol = 1e-9 * (1.0 + space.norm(&x)) * (1.0 + t.abs());
        for i in 0..x.len() {
            prop_assert!((lhs[i] - rhs[i]).abs() <= tol);
        }
    }

    #[test]
    fn lyapunov_distance_respects_the_norm_bounds((space, xs, ys) in any_pair()) {
        let x = Vector::new(xs);
        let y = Vector::new(ys);
        let phi = space.phi(&x, &y);
        let (nx, ny) = (space.norm(&x), space.norm(&y));
        let tol = 1e-9 * (1.0 + nx * nx + ny * ny);
        prop_assert!(phi >= (nx - ny).powi(2) - tol);
        prop_assert!(phi <= (nx + ny).powi(2) + tol);
        prop_assert!(space.phi(&x, &x).abs() <= tol);
    }

    #[test]
    fn v_functional_is_phi_after_the_inverse_map((space, xs, fs) in any_pair()) {
        let x = Vector::new(xs);
        let f = DualVector::new(fs);
        let direct = space.v_functional(&x, &f);
        let through_phi = space.phi(&x, &space.inverse_duality_map(&f));
        let tol = 1e-8 * (1.0 + direct.abs());
        prop_assert!((direct - through_phi).abs() <= tol);
    }

    #[test]
    fn norm_gap_is_controlled_by_the_dual_gap((space, xs, ys) in any_pair()) {
        // In a 2-uniformly convex space the duality map gap bounds the
        // point gap: ||x - y|| <= (2 / c^2) ||Jx - Jy||_*.
        let x = Vector::new(xs);
        let y = Vector::new(ys);
        let c = space.convexity_constant();
        let lhs = space.norm(&x.sub(&y));
        let rhs = (2.0 / (c * c)) * space.dual_norm(&space.duality_map(&x).sub(&space.duality_map(&y)));
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs));
    }
}

fn set_for_dim(dim: usize, pick: u8, seed: u64) -> SetSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand::Rng;
    match pick % 3 {
        0 => {
            let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|a| a + rng.gen_range(0.5..4.0)).collect();
            SetSpec::box_set(Vector::new(lo), Vector::new(hi)).unwrap()
        }
        1 => {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            SetSpec::ball(Vector::new(c), rng.gen_range(0.5..3.0)).unwrap()
        }
        _ => {
            let mut n: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if n.iter().all(|t| t.abs() < 0.3) {
                n[0] = 1.0;
            }
            SetSpec::halfspace(DualVector::new(n), rng.gen_range(-2.0..2.0)).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn euclidean_projection_satisfies_the_variational_inequality(
        dim in 1usize..=3,
        pick in 0u8..3,
        seed in 0u64..1_000_000,
        coords in prop::collection::vec(-8.0f64..8.0, 3),
    ) {
        let space = SpaceSpec::euclidean(dim);
        let set = set_for_dim(dim, pick, seed);
        let x = Vector::new(coords[..dim].to_vec());
        let z = generalized_project(&space, &set, &x).unwrap();
        prop_assert!(set.contains(&z, 1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        for _ in 0..40 {
            let y = set.sample(&mut rng);
            let inner: f64 = (0..dim).map(|i| (x[i] - z[i]) * (y[i] - z[i])).sum();
            let scale = (1.0 + space.norm(&x)) * (1.0 + space.norm(&y));
            prop_assert!(inner <= 1e-8 * scale, "characterisation failed: {inner}");
        }
    }

    #[test]
    fn generalized_projection_satisfies_its_characterisation(
        dim in 1usize..=3,
        p in 1.2f64..=1.9,
        pick in 0u8..2,
        seed in 0u64..1_000_000,
        coords in prop::collection::vec(-4.0f64..4.0, 3),
    ) {
        // Boxes and half-spaces take the exact KKT paths.
        let space = SpaceSpec::lp(dim, p);
        let set = set_for_dim(dim, if pick == 0 { 0 } else { 2 }, seed);
        let x = Vector::new(coords[..dim].to_vec());
        let z = generalized_project(&space, &set, &x).unwrap();
        prop_assert!(set.contains(&z, 1e-7));
        let gap = space.duality_map(&x).sub(&space.duality_map(&z));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdeadbeef);
        for _ in 0..40 {
            let y = set.sample(&mut rng);
            let inner = pairing(&y.sub(&z), &gap);
            let scale = (1.0 + space.norm(&x)) * (1.0 + space.norm(&y));
            prop_assert!(inner <= 1e-7 * scale, "characterisation failed: {inner}");
        }
    }

    #[test]
    fn generalized_projection_minimises_phi_and_obeys_three_point(
        dim in 1usize..=2,
        p in 1.2f64..=1.9,
        seed in 0u64..1_000_000,
        coords in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let space = SpaceSpec::lp(dim, p);
        let set = set_for_dim(dim, 0, seed);
        let x = Vector::new(coords[..dim].to_vec());
        let z = generalized_project(&space, &set, &x).unwrap();
        let phi_z = space.phi(&z, &x);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1ab1e);
        for _ in 0..30 {
            let y = set.sample(&mut rng);
            let phi_y = space.phi(&y, &x);
            prop_assert!(phi_z <= phi_y + 1e-8 * (1.0 + phi_y));
            let lhs = space.phi(&y, &z) + space.phi(&z, &x);
            prop_assert!(lhs <= space.phi(&y, &x) + 1e-8 * (1.0 + lhs));
        }
    }

    #[test]
    fn projection_is_idempotent(
        dim in 1usize..=3,
        pick in 0u8..3,
        seed in 0u64..1_000_000,
        euclid in proptest::bool::ANY,
        coords in prop::collection::vec(-6.0f64..6.0, 3),
    ) {
        let space = if euclid { SpaceSpec::euclidean(dim) } else { SpaceSpec::lp(dim, 1.5) };
        let set = set_for_dim(dim, pick, seed);
        let x = Vector::new(coords[..dim].to_vec());
        let z = generalized_project(&space, &set, &x).unwrap();
        let zz = generalized_project(&space, &set, &z).unwrap();
        let tol = 1e-7 * (1.0 + space.norm(&z));
        for i in 0..dim {
            prop_assert!((zz[i] - z[i]).abs() <= tol);
        }
    }

    #[test]
    fn cut_membership_matches_the_phi_comparison(
        p in 1.2f64..=2.0,
        euclid in proptest::bool::ANY,
        xs in prop::collection::vec(-4.0f64..4.0, 2),
        ws in prop::collection::vec(-4.0f64..4.0, 2),
        vs in prop::collection::vec(-6.0f64..6.0, 2),
    ) {
        let space = if euclid { SpaceSpec::euclidean(2) } else { SpaceSpec::lp(2, p) };
        let base = SetSpec::box_set(
            Vector::new(vec![-6.0, -6.0]),
            Vector::new(vec![6.0, 6.0]),
        ).unwrap();
        let (x, w, v) = (Vector::new(xs), Vector::new(ws), Vector::new(vs));
        let cut = cut_set(&space, &base, &x, &w);
        let lhs = space.phi(&v, &w);
        let rhs = space.phi(&v, &x);
        // Skip knife-edge cases where roundoff decides the comparison.
        prop_assume!((lhs - rhs).abs() > 1e-9 * (1.0 + lhs.abs() + rhs.abs()));
        prop_assert_eq!(cut.contains(&v, 0.0), lhs <= rhs);
    }
}
