use std::sync::OnceLock;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use vortexgauge::curve_algebra::{
    is_admissible, period_matrix, principal_divisor, theta, theta_brute_force, CurvePoint, Divisor, HyperellipticCurve,
    JacobianContext, Sheet, ThetaParams, Verdict,
};

fn ctx() -> &'static JacobianContext {
    static CTX: OnceLock<JacobianContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let pts = [C::new(-1.5, 0.1), C::new(-0.4, -0.3), C::new(0.3, 0.5), C::new(1.2, -0.1), C::new(2.0, 0.2)];
        period_matrix(&HyperellipticCurve::new(&pts).unwrap()).unwrap()
    })
}

fn complex() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn point() -> impl Strategy<Value = CurvePoint> {
    (complex(), any::<bool>()).prop_map(|(x, one)| {
        let c = ctx();
        let x = c.curve.centroid() + x * c.curve.scale() * 0.6;
        c.curve.point(x, if one { Sheet::One } else { Sheet::Two })
    })
}

fn far_from_branch_points(p: &CurvePoint) -> bool {
    ctx().curve.branch_points.iter().all(|b| (b - p.x).norm() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta_is_even(z0 in complex(), z1 in complex()) {
        let c = ctx();
        let t = theta(&ThetaParams::new(vec![z0, z1], c.tau.clone())).unwrap();
        let m = theta(&ThetaParams::new(vec![-z0, -z1], c.tau.clone())).unwrap();
        prop_assert!((t - m).norm() < 1e-9 * (1.0 + t.norm()));
    }

    #[test]
    fn theta_matches_lattice_sum(z0 in complex(), z1 in complex()) {
        let c = ctx();
        let z = vec![z0 * 0.5, z1 * 0.5];
        let t = theta(&ThetaParams::new(z.clone(), c.tau.clone())).unwrap();
        let b = theta_brute_force(&z, &c.tau, 12);
        prop_assert!((t - b).norm() < 1e-9 * (1.0 + b.norm()));
    }

    #[test]
    fn theta_integer_periods_and_quasi_periods(z0 in complex(), z1 in complex(), m in -2i64..=2, n in -1i64..=1) {
        let c = ctx();
        let z = vec![z0 * 0.5, z1 * 0.5];
        let t = theta(&ThetaParams::new(z.clone(), c.tau.clone())).unwrap();
        let shifted: Vec<C> = vec![z[0] + m as f64, z[1] - m as f64];
        let s = theta(&ThetaParams::new(shifted, c.tau.clone())).unwrap();
        prop_assert!((t - s).norm() < 1e-9 * (1.0 + t.norm()));
        prop_assert!(c.theta_quasiperiod_check(&z, &[n, -n]).unwrap() < 1e-9);
    }

    #[test]
    fn abel_theorem_on_principal_divisors(p in proptest::collection::vec(complex(), 3), q in proptest::collection::vec(complex(), 3)) {
        let c = ctx();
        let d = principal_divisor(&c.curve, &p, &q);
        prop_assume!(d.is_ok());
        let d = d.unwrap();
        prop_assume!(d.points.iter().all(|(p, _)| far_from_branch_points(p)));
        prop_assert_eq!(d.degree(), 0);
        prop_assert!(c.lattice_norm(&c.abel_jacobi_unreduced(&d).unwrap()) < 1e-6);
    }

    #[test]
    fn involution_pairs_have_constant_image(p in point(), q in point()) {
        prop_assume!(far_from_branch_points(&p) && far_from_branch_points(&q));
        let c = ctx();
        let dp = Divisor::effective(&[p, p.involution()]);
        let dq = Divisor::effective(&[q, q.involution()]);
        let diff = c.abel_jacobi_unreduced(&dp.sub(&dq)).unwrap();
        prop_assert!(c.lattice_norm(&diff) < 1e-6);
    }

    #[test]
    fn involution_pairs_are_not_admissible(p in point()) {
        prop_assume!(far_from_branch_points(&p));
        let c = ctx();
        let cert = is_admissible(c, &Divisor::effective(&[p, p.involution()])).unwrap();
        prop_assert!(cert.verdict != Verdict::Admissible);
    }

    #[test]
    fn abel_jacobi_reduction_is_idempotent(z0 in complex(), z1 in complex()) {
        let c = ctx();
        let z = vec![z0 * 3.0, z1 * 3.0];
        let r = c.reduce(&z);
        let rr = c.reduce(&r);
        prop_assert!(r.iter().zip(&rr).all(|(a, b)| (a - b).norm() < 1e-12));
        let d: Vec<C> = z.iter().zip(&r).map(|(a, b)| a - b).collect();
        let (m, n) = c.lattice_coordinates(&d);
        prop_assert!(m.iter().chain(&n).all(|v| (v - v.round()).abs() < 1e-9));
    }
}

#[test]
fn tau_is_a_riemann_matrix() {
    let c = ctx();
    assert!(c.symmetry_defect() < 1e-8);
    assert!(c.im_tau_min_eigenvalue() > 0.0);
}
