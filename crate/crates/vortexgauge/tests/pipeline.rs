use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::cli::harmonic_perturbation;
use vortexgauge::gauge_fields::{Connection, PerturbationClass};
use vortexgauge::holomorphization::{kernel_transport, solve_dolbeault};
use vortexgauge::hyperbolic::{build_fuchsian_group, build_mesh, Geometry, TorusCell};
use vortexgauge::spectral::{assemble_laplacian, dbar_kernel, kernel_window, lowest_eigenpairs, LandauLevel};

#[test]
fn landau_sections_lie_in_the_discrete_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=3 {
        let cell = TorusCell::square(2.0, n);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), 20).unwrap();
        let sigma = Character::random(2, &mut rng);
        let f = AutomorphyFactor::torus(cell.clone(), sigma.clone()).unwrap();
        let sp = assemble_laplacian(&Connection::reference(&f, &mesh).unwrap(), &mesh).unwrap();
        let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h)).unwrap();
        let ll = LandauLevel::new(&cell, &sigma).unwrap();
        assert_eq!(k.sections.len(), ll.dimension(), "n {n}");
        for s in ll.sections(&mesh, &f) {
            assert!(s.boundary_residual(&mesh) < 1e-8);
            // distance from the span of the orthonormal discrete kernel
            let norm2 = s.norm(&sp.mass).powi(2);
            let captured: f64 =
                k.sections.iter().map(|e| e.inner(&s, &sp.mass).norm_sqr() / e.norm(&sp.mass).powi(2)).sum();
            let rel = ((norm2 - captured).max(0.0) / norm2).sqrt();
            assert!(rel < 10.0 * sp.h * sp.h, "n {n}: {rel}");
        }
    }
}

#[test]
fn closed_twist_keeps_flux_and_spectral_bottom() {
    let group = build_fuchsian_group(2).unwrap();
    let mesh = build_mesh(&Geometry::Hyperbolic(group), 16).unwrap();
    let f = AutomorphyFactor::hyperbolic(1, 2, Character::trivial(4)).unwrap();
    let a = Connection::reference(&f, &mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let twisted = a.with_alpha(harmonic_perturbation(&mesh, 0.7, &mut rng).unwrap(), PerturbationClass::Harmonic);
    assert!((a.total_flux(&mesh) - twisted.total_flux(&mesh)).abs() < 1e-10);
    let sp = assemble_laplacian(&twisted, &mesh).unwrap();
    let l1 = lowest_eigenpairs(&sp, 1).unwrap()[0].value;
    assert!((l1 - sp.b).abs() < 10.0 * sp.h * sp.h, "{l1} vs {}", sp.b);
}

#[test]
fn torus_kernel_becomes_holomorphic() {
    let cell = TorusCell::square(2.0, 2);
    let mesh = build_mesh(&Geometry::Torus(cell.clone()), 16).unwrap();
    let f = AutomorphyFactor::torus(cell, Character::from_turns(&[0.3, 0.7])).unwrap();
    let a = Connection::reference(&f, &mesh).unwrap();
    let g = solve_dolbeault(&a, &mesh).unwrap();
    let sp = assemble_laplacian(&a, &mesh).unwrap();
    let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h)).unwrap();
    let t = kernel_transport(&g, &mesh, &k.sections);
    assert_eq!((t.dimension_in, t.dimension_out), (2, 2));
    assert!(t.max_dbar_residual < 10.0 * sp.h * sp.h, "{t:?}");
    assert!(g.g.iter().all(|v| v.norm() > 0.0 && v.norm().is_finite()));
    assert!((g.g[g.centre] - C::new(1.0, 0.0)).norm() < 1e-8);
}
