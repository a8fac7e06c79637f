use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of SL(2, R) acting on the upper half-plane.
///
/// Construction normalizes the determinant to one. The sign of the matrix is
/// kept, since the lifted group elements in [`GroupElement`](super::GroupElement)
/// track it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusTransform {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Domain(format!("Moebius matrix must have positive determinant, got {det}")));
        }
        let s = det.sqrt();
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub const fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self * other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// The automorphy denominator `cz + d`.
    pub fn j(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.c * z.re + self.d, self.c * z.im)
    }

    /// Applies the map without checking the half-plane condition.
    pub fn apply_unchecked(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / self.j(z)
    }

    /// Derivative of the map at `z`, `1 / (cz + d)^2`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let j = self.j(z);
        1.0 / (j * j)
    }

    /// Distance to the identity in PSL(2, R), insensitive to the overall sign.
    pub fn distance_to_identity(&self) -> f64 {
        let plus = (self.a - 1.0).abs() + self.b.abs() + self.c.abs() + (self.d - 1.0).abs();
        let minus = (self.a + 1.0).abs() + self.b.abs() + self.c.abs() + (self.d + 1.0).abs();
        plus.min(minus)
    }
}

/// Applies `g` to a point of the upper half-plane.
pub fn moebius_apply(g: &MoebiusTransform, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("point {z} is not in the upper half-plane")));
    }
    Ok(g.apply_unchecked(z))
}

/// Hyperbolic distance in the upper half-plane.
pub fn hyperbolic_distance(z1: Complex64, z2: Complex64) -> f64 {
    let num = (z1 - z2).norm_sqr();
    (1.0 + num / (2.0 * z1.im * z2.im)).acosh()
}

/// Integral of `dx / y` along the geodesic from `z1` to `z2`.
pub fn geodesic_dx_over_y(z1: Complex64, z2: Complex64) -> f64 {
    ((z1 - z2.conj()) / (z2 - z1.conj())).arg()
}

/// Area of the geodesic triangle with counter-clockwise vertices.
pub fn geodesic_triangle_area(z: [Complex64; 3]) -> f64 {
    geodesic_dx_over_y(z[0], z[1]) + geodesic_dx_over_y(z[1], z[2]) + geodesic_dx_over_y(z[2], z[0])
}

/// Cayley map from the unit disk to the upper half-plane, `0 -> i`.
pub fn disk_to_half_plane(w: Complex64) -> Complex64 {
    Complex64::i() * (1.0 + w) / (1.0 - w)
}

pub fn half_plane_to_disk(z: Complex64) -> Complex64 {
    (z - Complex64::i()) / (z + Complex64::i())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn translation_and_inversion() {
        let t = MoebiusTransform::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((moebius_apply(&t, c(0.0, 1.0)).unwrap() - c(1.0, 1.0)).norm() < 1e-15);
        let s = MoebiusTransform::new(0.0, -1.0, 1.0, 0.0).unwrap();
        assert!((moebius_apply(&s, c(0.0, 1.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        let w = moebius_apply(&s, c(0.0, 2.0)).unwrap();
        assert!((w - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rejects_lower_half_plane() {
        let s = MoebiusTransform::identity();
        assert!(moebius_apply(&s, c(0.3, 0.0)).is_err());
        assert!(moebius_apply(&s, c(0.3, -1.0)).is_err());
    }

    #[test]
    fn normalizes_determinant() {
        let g = MoebiusTransform::new(2.0, 1.0, 3.0, 4.0).unwrap();
        assert!((g.det() - 1.0).abs() < 1e-12);
        assert!(MoebiusTransform::new(1.0, 2.0, 3.0, 4.0).is_err());
    }

    #[test]
    fn geodesic_area_matches_angle_defect() {
        // Independent route: hyperbolic law of cosines for the angles.
        let z = [c(-0.3, 0.8), c(0.9, 1.1), c(0.2, 2.4)];
        let side = |p: Complex64, q: Complex64| hyperbolic_distance(p, q);
        let (a, b, cc) = (side(z[1], z[2]), side(z[2], z[0]), side(z[0], z[1]));
        let angle =
            |opp: f64, s1: f64, s2: f64| ((s1.cosh() * s2.cosh() - opp.cosh()) / (s1.sinh() * s2.sinh())).acos();
        let defect = std::f64::consts::PI - angle(a, b, cc) - angle(b, cc, a) - angle(cc, a, b);
        let area = geodesic_triangle_area(z);
        assert!((area - defect).abs() < 1e-12, "{area} vs {defect}");
    }

    #[test]
    fn geodesic_integral_on_unit_circle() {
        let t1 = 0.4f64;
        let t2 = 2.1f64;
        let v = geodesic_dx_over_y(Complex64::from_polar(1.0, t1), Complex64::from_polar(1.0, t2));
        assert!((v + (t2 - t1)).abs() < 1e-14);
        assert_eq!(geodesic_dx_over_y(c(0.5, 1.0), c(0.5, 3.0)), 0.0);
    }
}
