use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::curve::Divisor;
use super::periods::JacobianContext;
use crate::error::{Error, Result};

/// Below this (relative to the leading theta term) a value counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// Above this a value counts as nonzero; in between the verdict is left open.
pub const NONZERO_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Admissible,
    NotAdmissible,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Degree outside `0..=g`.
    Degree,
    /// `n = 0`.
    Trivial,
    /// `n = 1`: every point is admissible; the value is `|zeta(P)|`.
    SinglePoint,
    /// `n = g`: `|theta(Phi(D) + kappa)|`.
    Theta,
    /// `n = g - 1`: `|grad theta(Phi(D) + kappa)|`.
    ThetaGradient,
    /// Other degrees: smallest singular value of `[zeta_i(P_k)]`.
    Rank,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub degree: i64,
    pub verdict: Verdict,
    pub method: Method,
    pub value: f64,
}

impl Certificate {
    /// `Some(true/false)`, or `None` for an indeterminate verdict.
    pub fn admissible(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Admissible => Some(true),
            Verdict::NotAdmissible => Some(false),
            Verdict::Indeterminate => None,
        }
    }
}

fn classify(value: f64) -> Verdict {
    if value < ZERO_THRESHOLD {
        Verdict::NotAdmissible
    } else if value > NONZERO_THRESHOLD {
        Verdict::Admissible
    } else {
        Verdict::Indeterminate
    }
}

/// Admissibility of the degree-`n` bundle attached to an effective divisor.
pub fn is_admissible(ctx: &JacobianContext, d: &Divisor) -> Result<Certificate> {
    if !d.is_effective() && !d.points.is_empty() {
        return Err(Error::Domain("admissibility is defined for effective divisors".into()));
    }
    let n = d.degree();
    let g = ctx.genus() as i64;
    let cert = |verdict, method, value| Ok(Certificate { degree: n, verdict, method, value });
    if n < 0 || n > g {
        return cert(Verdict::NotAdmissible, Method::Degree, f64::NAN);
    }
    if n == 0 {
        return cert(Verdict::Admissible, Method::Trivial, f64::NAN);
    }
    let points = d.support_with_multiplicity();
    if n == 1 {
        let z = ctx.zeta(points[0].x, points[0].y);
        let v =
            if points[0].y.norm() == 0.0 { f64::INFINITY } else { z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() };
        return cert(Verdict::Admissible, Method::SinglePoint, v);
    }
    let phi = ctx.abel_jacobi_unreduced(d)?;
    let w: Vec<C> = phi.iter().zip(&ctx.riemann_constant).map(|(a, b)| a + b).collect();
    if n == g {
        let t = ctx.theta_at(&w)?;
        let v = t.value.norm() / t.leading;
        return cert(classify(v), Method::Theta, v);
    }
    if n == g - 1 {
        let t = ctx.theta_at(&w)?;
        let v = t.gradient.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / (2.0 * std::f64::consts::PI * t.leading);
        return cert(classify(v), Method::ThetaGradient, v);
    }
    let distinct = (0..points.len()).all(|i| {
        (0..i).all(|j| (points[i].x - points[j].x).norm() > 1e-8 || (points[i].y - points[j].y).norm() > 1e-8)
    });
    if !distinct {
        return cert(Verdict::Indeterminate, Method::Rank, f64::NAN);
    }
    let m = DMatrix::from_fn(ctx.genus(), points.len(), |i, k| {
        let z = ctx.zeta(points[k].x, points[k].y);
        let scale = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        z[i] / scale
    });
    let sv = m.singular_values();
    let v = sv.min() / sv.max();
    cert(classify(v), Method::Rank, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_algebra::curve::{HyperellipticCurve, Sheet};
    use crate::curve_algebra::periods::period_matrix;

    fn ctx() -> JacobianContext {
        let c = HyperellipticCurve::new(&[
            C::new(-1.5, 0.1),
            C::new(-0.4, -0.3),
            C::new(0.3, 0.5),
            C::new(1.2, -0.1),
            C::new(2.0, 0.2),
        ])
        .unwrap();
        period_matrix(&c).unwrap()
    }

    #[test]
    fn degree_rules() {
        let ctx = ctx();
        let p = ctx.curve.point(C::new(0.4, 0.3), Sheet::One);
        let q = ctx.curve.point(C::new(-0.2, 0.9), Sheet::Two);
        let r = ctx.curve.point(C::new(1.0, -0.6), Sheet::One);
        assert_eq!(is_admissible(&ctx, &Divisor::effective(&[p])).unwrap().admissible(), Some(true));
        assert_eq!(is_admissible(&ctx, &Divisor::effective(&[p, q, r])).unwrap().admissible(), Some(false));
        assert_eq!(is_admissible(&ctx, &Divisor::default()).unwrap().admissible(), Some(true));
        let generic = is_admissible(&ctx, &Divisor::effective(&[p, q])).unwrap();
        assert_eq!(generic.method, Method::Theta);
        assert_eq!(generic.admissible(), Some(true));
    }

    #[test]
    fn point_plus_involution_is_not_admissible() {
        let ctx = ctx();
        let p = ctx.curve.point(C::new(0.4, 0.3), Sheet::One);
        let c = is_admissible(&ctx, &Divisor::effective(&[p, p.involution()])).unwrap();
        assert_eq!(c.admissible(), Some(false), "{c:?}");
    }
}
