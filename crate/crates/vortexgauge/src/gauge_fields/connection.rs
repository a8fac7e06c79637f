use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::complex::EdgeComplex;
use crate::automorphy::{AutomorphyFactor, FactorGeometry};
use crate::error::{Error, Result};
use crate::hyperbolic::{geodesic_dx_over_y, Geometry, SurfaceMesh};
use crate::linalg::least_squares;

/// What is known about the perturbation `alpha` of a connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationClass {
    Zero,
    CoClosed,
    Harmonic,
    General,
}

/// A unitary connection `A^n + alpha` on the bundle of an automorphy factor.
///
/// `A^n` is analytic: `b dx / y` on the half-plane, `(B/2)(x dy - y dx)` on
/// the plane. The perturbation is a real cochain on quotient edges (empty
/// means zero).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Connection {
    pub factor: AutomorphyFactor,
    pub alpha: Vec<f64>,
    pub class: PerturbationClass,
}

fn check_geometry(factor: &AutomorphyFactor, mesh: &SurfaceMesh) -> Result<()> {
    match (&factor.geometry, &mesh.geometry) {
        (FactorGeometry::Hyperbolic { genus }, Geometry::Hyperbolic(g)) if *genus == g.genus => Ok(()),
        (FactorGeometry::Torus(a), Geometry::Torus(b)) if a.omega1 == b.omega1 && a.omega2 == b.omega2 => Ok(()),
        _ => Err(Error::Domain("automorphy factor does not match the mesh geometry".into())),
    }
}

impl Connection {
    /// The constant curvature connection `A^n` of the factor.
    pub fn reference(factor: &AutomorphyFactor, mesh: &SurfaceMesh) -> Result<Self> {
        check_geometry(factor, mesh)?;
        Ok(Self { factor: factor.clone(), alpha: Vec::new(), class: PerturbationClass::Zero })
    }

    pub fn with_alpha(&self, alpha: Vec<f64>, class: PerturbationClass) -> Self {
        Self { factor: self.factor.clone(), alpha, class }
    }

    pub fn check_mesh(&self, mesh: &SurfaceMesh) -> Result<()> {
        check_geometry(&self.factor, mesh)
    }

    pub fn b(&self) -> f64 {
        self.factor.b()
    }

    pub fn alpha_at(&self, e: usize) -> f64 {
        self.alpha.get(e).copied().unwrap_or(0.0)
    }

    /// Components `(A1, A2)` of the reference connection at a chart point.
    pub fn reference_components(&self, z: Complex64) -> [f64; 2] {
        match &self.factor.geometry {
            FactorGeometry::Hyperbolic { .. } => [self.b() / z.im, 0.0],
            FactorGeometry::Torus(_) => {
                let h = 0.5 * self.b();
                [-h * z.im, h * z.re]
            }
        }
    }

    /// Integral of the reference connection along the mesh edge from `z1` to
    /// `z2` (a geodesic in the hyperbolic case).
    pub fn reference_integral(&self, z1: Complex64, z2: Complex64) -> f64 {
        match &self.factor.geometry {
            FactorGeometry::Hyperbolic { .. } => self.b() * geodesic_dx_over_y(z1, z2),
            FactorGeometry::Torus(_) => 0.5 * self.b() * (z1.re * z2.im - z1.im * z2.re),
        }
    }

    /// Edge phases of the directed cell edges `c0 -> c1 -> c2 -> c0`.
    pub fn cell_phases(&self, mesh: &SurfaceMesh, cx: &EdgeComplex, t: usize) -> [f64; 3] {
        let c = mesh.cells[t];
        std::array::from_fn(|e| {
            let (a, b) = (c[e], c[(e + 1) % 3]);
            let (id, s) = cx.cell_edges[t][e];
            self.reference_integral(mesh.nodes[a], mesh.nodes[b]) + s * self.alpha_at(id)
        })
    }

    /// Flux through each cell.
    pub fn cell_flux(&self, mesh: &SurfaceMesh, cx: &EdgeComplex) -> Vec<f64> {
        (0..mesh.n_cells()).map(|t| self.cell_phases(mesh, cx, t).iter().sum()).collect()
    }

    /// The scalar curvature `*F` per cell: flux over metric cell area.
    pub fn curvature(&self, mesh: &SurfaceMesh, cx: &EdgeComplex) -> Vec<f64> {
        self.cell_flux(mesh, cx).iter().zip(&mesh.cell_areas).map(|(f, a)| f / a).collect()
    }

    /// `(1/2 pi) int F`.
    pub fn total_flux(&self, mesh: &SurfaceMesh) -> f64 {
        let cx = EdgeComplex::new(mesh);
        self.cell_flux(mesh, &cx).iter().sum::<f64>() / (2.0 * PI)
    }

    /// Largest violation of `gamma^* A = A + df` at boundary node pairs.
    pub fn equivariance_residual(&self, mesh: &SurfaceMesh) -> f64 {
        mesh.boundary_pairs
            .iter()
            .map(|p| {
                let g = mesh.geometry.generator(p.generator);
                let z = mesh.nodes[p.node];
                let pulled = g.pullback_one_form(z, self.reference_components(g.apply(z)));
                let a = self.reference_components(z);
                let df = self.factor.phase_gradient(&g, z);
                ((pulled[0] - a[0] - df[0]).powi(2) + (pulled[1] - a[1] - df[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise curvature of the reference connection from quadratic least
    /// squares fits of its components over vertex one-rings.
    pub fn curvature_pointwise(&self, mesh: &SurfaceMesh, cx: &EdgeComplex) -> Vec<f64> {
        (0..mesh.n_vertices())
            .map(|v| {
                let zc = mesh.vertices[v];
                let pts = super::pointwise::star_positions(mesh, cx, v);
                let rows: Vec<[f64; 5]> = pts.iter().map(|&z| quad_row(z - zc)).collect();
                let a0 = self.reference_components(zc);
                let mut grads = [[0.0; 2]; 2];
                for comp in 0..2 {
                    let rhs: Vec<f64> = pts.iter().map(|&z| self.reference_components(z)[comp] - a0[comp]).collect();
                    let coef = least_squares(&rows, &rhs);
                    grads[comp] = [coef[0], coef[1]];
                }
                let f12 = grads[1][0] - grads[0][1];
                f12 / mesh.geometry.metric_weight(zc)
            })
            .collect()
    }
}

/// Design row `(dx, dy, dx^2, dx dy, dy^2)` of a quadratic fit.
pub(crate) fn quad_row(d: Complex64) -> [f64; 5] {
    [d.re, d.im, d.re * d.re, d.re * d.im, d.im * d.im]
}

/// Hodge star of a one-form `a1 dx1 + a2 dx2`.
pub fn hodge_star_one_form(a: [f64; 2]) -> [f64; 2] {
    [-a[1], a[0]]
}

/// Hodge star of the function `f` as the coefficient of `dx1 ^ dx2`.
pub fn hodge_star_zero_form(f: f64, lambda: f64) -> f64 {
    f * lambda
}

/// Hodge star of the two-form `f dx1 ^ dx2`.
pub fn hodge_star_two_form(f: f64, lambda: f64) -> f64 {
    f / lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphy::Character;
    use crate::hyperbolic::{build_fuchsian_group, build_mesh, TorusCell};

    #[test]
    fn star_rules() {
        assert_eq!(hodge_star_one_form([1.0, 0.0]), [0.0, 1.0]);
        let a = [0.3, -1.2];
        let ss = hodge_star_one_form(hodge_star_one_form(a));
        assert_eq!(ss, [-a[0], -a[1]]);
        let z = Complex64::new(0.4, 2.0);
        let lambda = 1.0 / (z.im * z.im);
        assert!((hodge_star_zero_form(1.0, lambda) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reference_flux_and_curvature() {
        let group = build_fuchsian_group(2).unwrap();
        let geometry = Geometry::Hyperbolic(group);
        let mesh = build_mesh(&geometry, 8).unwrap();
        let cx = EdgeComplex::new(&mesh);
        let f = AutomorphyFactor::hyperbolic(1, 2, Character::trivial(4)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        assert!(a.curvature(&mesh, &cx).iter().all(|k| (k - 0.5).abs() < 1e-9));
        assert!((a.total_flux(&mesh) - 1.0).abs() < 1e-9);
        assert!(a.equivariance_residual(&mesh) < 1e-9);
        let z = mesh.vertices[3];
        let [a1, a2] = a.reference_components(z);
        assert!((a1 - 0.5 / z.im).abs() < 1e-15 && a2 == 0.0);
    }

    #[test]
    fn torus_curvature_is_two_pi_n_over_area() {
        let cell = TorusCell::square(1.0, 1);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), 6).unwrap();
        let cx = EdgeComplex::new(&mesh);
        let f = AutomorphyFactor::torus(cell, Character::trivial(2)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        assert!(a.curvature(&mesh, &cx).iter().all(|k| (k - 2.0 * PI).abs() < 1e-9));
        assert!(a.equivariance_residual(&mesh) < 1e-12);
    }

    #[test]
    fn closed_perturbation_keeps_curvature() {
        let mesh = build_mesh(&Geometry::Torus(TorusCell::square(1.0, 2)), 6).unwrap();
        let cx = EdgeComplex::new(&mesh);
        let f = AutomorphyFactor::for_geometry(&mesh.geometry, 2, Character::trivial(2)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        let phi: Vec<f64> = (0..mesh.n_vertices()).map(|v| (v as f64 * 0.37).sin()).collect();
        let beta = cx.d0().matvec(&phi);
        let b = a.with_alpha(beta, PerturbationClass::General);
        let k0 = a.curvature(&mesh, &cx);
        let k1 = b.curvature(&mesh, &cx);
        assert!(k0.iter().zip(&k1).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn mismatched_geometry_is_rejected() {
        let mesh = build_mesh(&Geometry::Torus(TorusCell::square(1.0, 1)), 4).unwrap();
        let f = AutomorphyFactor::hyperbolic(1, 2, Character::trivial(4)).unwrap();
        assert!(Connection::reference(&f, &mesh).is_err());
    }
}
