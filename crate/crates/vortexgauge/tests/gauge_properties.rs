use std::sync::OnceLock;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::gauge_fields::{Connection, EdgeComplex, FieldOperators, PerturbationClass};
use vortexgauge::holomorphization::tilde_automorphy;
use vortexgauge::hyperbolic::{
    build_fuchsian_group, build_mesh, disk_to_half_plane, hyperbolic_distance, DeckElement, FuchsianGroup, Geometry,
    Letter, SurfaceMesh,
};

fn group(genus: usize) -> &'static FuchsianGroup {
    static G2: OnceLock<FuchsianGroup> = OnceLock::new();
    static G3: OnceLock<FuchsianGroup> = OnceLock::new();
    let cell = if genus == 2 { &G2 } else { &G3 };
    cell.get_or_init(|| build_fuchsian_group(genus).unwrap())
}

fn mesh() -> &'static (SurfaceMesh, EdgeComplex) {
    static M: OnceLock<(SurfaceMesh, EdgeComplex)> = OnceLock::new();
    M.get_or_init(|| {
        let m = build_mesh(&Geometry::Hyperbolic(group(2).clone()), 8).unwrap();
        let cx = EdgeComplex::new(&m);
        (m, cx)
    })
}

fn word(rank: usize) -> impl Strategy<Value = Vec<Letter>> {
    proptest::collection::vec(
        (0..rank, any::<bool>()).prop_map(|(generator, inverse)| Letter { generator, inverse }),
        1..4,
    )
}

fn interior_point(genus: usize) -> impl Strategy<Value = C> {
    let r = (group(genus).inradius() / 2.0).tanh();
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(s, t)| disk_to_half_plane(C::from_polar(r * s.sqrt(), t)))
}

fn turns(rank: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..1.0f64, rank)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factor_is_a_unitary_cocycle(
        (genus, w1, w2, z) in (2usize..=3).prop_flat_map(|g| (Just(g), word(2 * g), word(2 * g), interior_point(g))),
        n in -3i64..=4,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = AutomorphyFactor::hyperbolic(n, genus, Character::random(2 * genus, &mut rng)).unwrap();
        let g = group(genus);
        let g1 = DeckElement::Fuchsian(g.evaluate_word(&w1));
        let g2 = DeckElement::Fuchsian(g.evaluate_word(&w2));
        prop_assert!(f.check_cocycle(&g1, &g2, z) < 1e-10);
        prop_assert!((f.evaluate(&g1, z).norm() - 1.0).abs() < 1e-12);
        let inv = f.evaluate(&g1.inverse(), g1.apply(z)) * f.evaluate(&g1, z);
        prop_assert!((inv - 1.0).norm() < 1e-10);
    }

    #[test]
    fn deck_transformations_are_isometries(w in word(4), z in interior_point(2), u in interior_point(2)) {
        let g = group(2).evaluate_word(&w);
        let d0 = hyperbolic_distance(z, u);
        let d1 = hyperbolic_distance(g.apply(z), g.apply(u));
        prop_assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0));
    }

    #[test]
    fn character_multiplication_is_pointwise(a in turns(4), b in turns(4), m in proptest::collection::vec(-3i64..=3, 4)) {
        let (sa, sb) = (Character::from_turns(&a), Character::from_turns(&b));
        let lhs = sa.multiply(&sb).evaluate(&m);
        let rhs = sa.evaluate(&m) * sb.evaluate(&m);
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((sa.multiply(&sa.conj()).evaluate(&m) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn tilde_factor_is_a_positive_cocycle(w1 in word(4), w2 in word(4), z in interior_point(2), n in 0i64..=3) {
        let g = group(2);
        let (a, b) = (g.evaluate_word(&w1), g.evaluate_word(&w2));
        let ab = a.compose(&b);
        let lhs = tilde_automorphy(n, 2, &ab.matrix, z).unwrap();
        let rhs = tilde_automorphy(n, 2, &a.matrix, b.apply(z)).unwrap() * tilde_automorphy(n, 2, &b.matrix, z).unwrap();
        prop_assert!(lhs > 0.0);
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energies_are_gauge_invariant(
        chi in proptest::collection::vec(-3.0..3.0f64, 64),
        psi in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
        n in 0i64..=3,
    ) {
        let (m, cx) = mesh();
        let f = AutomorphyFactor::hyperbolic(n, 2, Character::trivial(4)).unwrap();
        let a = Connection::reference(&f, m).unwrap();
        let nv = m.n_vertices();
        let chi: Vec<f64> = (0..nv).map(|v| chi[v % chi.len()] * (1.0 + v as f64 / nv as f64)).collect();
        let psi: Vec<C> = (0..nv).map(|v| { let (x, y) = psi[(3 * v) % psi.len()]; C::new(x, y) }).collect();
        let ops = FieldOperators::new(m, cx, &a);
        let a2 = a.with_alpha(cx.d0().matvec(&chi), PerturbationClass::General);
        let ops2 = FieldOperators::new(m, cx, &a2);
        let psi2: Vec<C> = psi.iter().zip(&chi).map(|(p, c)| p * C::from_polar(1.0, *c)).collect();
        let k = ops.kinetic_energy(&psi);
        prop_assert!((k - ops2.kinetic_energy(&psi2)).abs() < 1e-10 * (1.0 + k));
        prop_assert!((ops.twist(&psi) - ops2.twist(&psi2)).abs() < 1e-10 * (1.0 + k));
        prop_assert!(ops.dbar_energy(&psi) >= -1e-12 * k);
    }
}
