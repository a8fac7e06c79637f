//! Hyperelliptic curves: periods, the Abel-Jacobi map, theta functions,
//! admissibility of divisors and sections built from third-kind
//! differentials.
//!
//! The base point of the Abel-Jacobi map is the first branch point. The
//! Riemann constant for this base point is a half period; it is selected as
//! the unique half period `kappa` with `theta(Phi(E) + kappa) = 0` for probe
//! divisors `E` of degree `g - 1`, so that the theta divisor is
//! `W_{g-1} + kappa`. Points at infinity are not represented.

mod admissibility;
mod curve;
mod differentials;
mod paths;
mod periods;
mod quadrature;
mod theta;

pub use admissibility::{is_admissible, Certificate, Method, Verdict, NONZERO_THRESHOLD, ZERO_THRESHOLD};
pub use curve::{CurvePoint, Divisor, HyperellipticCurve, Sheet, MIN_SEPARATION};
pub use differentials::{
    baker_akhiezer_values, divisor_of_x_ratio, principal_divisor, third_kind_differential, zeros_of_y_minus,
    BakerAkhiezer, ThirdKind,
};
pub use paths::{choose_route, integrate_route, Route};
pub use periods::{agm, period_matrix, JacobianContext, JacobianExport};
pub use quadrature::gauss_legendre;
pub use theta::{quasiperiod_residual, theta, theta_brute_force, theta_full, ThetaParams, ThetaValue};

use num_complex::Complex64 as C;
use rand::Rng;

/// A random finite point with `|x - centroid| <= radius * scale`, on a
/// random sheet.
pub fn random_point(curve: &HyperellipticCurve, radius: f64, rng: &mut impl Rng) -> CurvePoint {
    let c = curve.centroid();
    let s = curve.scale();
    let r = radius * s * rng.random::<f64>().sqrt();
    let th = rng.random::<f64>() * std::f64::consts::TAU;
    let sheet = if rng.random::<bool>() { Sheet::One } else { Sheet::Two };
    curve.point(c + C::from_polar(r, th), sheet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn curve() -> HyperellipticCurve {
        HyperellipticCurve::new(&[
            C::new(-1.5, 0.1),
            C::new(-0.4, -0.3),
            C::new(0.3, 0.5),
            C::new(1.2, -0.1),
            C::new(2.0, 0.2),
        ])
        .unwrap()
    }

    #[test]
    fn admissibility_ignores_branch_point_order() {
        let a = period_matrix(&curve()).unwrap();
        let mut pts = curve().branch_points;
        pts.reverse();
        pts.swap(0, 2);
        let b = period_matrix(&HyperellipticCurve::new(&pts).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let p = random_point(&a.curve, 0.8, &mut rng);
            let q = random_point(&a.curve, 0.8, &mut rng);
            for d in [Divisor::effective(&[p, q]), Divisor::effective(&[p, p.involution()])] {
                let va = is_admissible(&a, &d).unwrap().admissible();
                let vb = is_admissible(&b, &d).unwrap().admissible();
                assert_eq!(va, vb);
            }
        }
    }

    #[test]
    fn theta_zero_set_matches_section_zeros() {
        let ctx = period_matrix(&curve()).unwrap();
        let p1 = ctx.curve.point(C::new(0.5, 0.6), Sheet::One);
        let p2 = ctx.curve.point(C::new(-0.9, -0.5), Sheet::Two);
        let d = Divisor::effective(&[p1, p2]);
        let q0 = ctx.curve.point(C::new(0.9, 0.8), Sheet::One);
        let ba = BakerAkhiezer::new(&ctx, &d, &q0).unwrap();
        let phi_d = ctx.abel_jacobi_unreduced(&d).unwrap();
        let theta_rel = |p: &CurvePoint| {
            let phi = ctx.abel_jacobi_point(p).unwrap();
            let z: Vec<C> = (0..2).map(|i| phi[i] - phi_d[i] - ctx.riemann_constant[i]).collect();
            let t = ctx.theta_at(&z).unwrap();
            t.value.norm() / t.leading
        };
        for p in [p1, p2] {
            assert!(theta_rel(&p) < 1e-9);
            let near = ctx.curve.point(p.x + 1e-4, if p == p1 { Sheet::One } else { Sheet::Two });
            assert!(ba.value(&ctx, &near).unwrap().norm() < 1e-2);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let p = random_point(&ctx.curve, 0.8, &mut rng);
            assert!(theta_rel(&p) > 1e-6);
            assert!(ba.value(&ctx, &p).unwrap().norm() > 1e-6);
        }
    }
}
