//! Automorphy factors `rho_{n, sigma}` and characters of the deck group.
//!
//! On a hyperbolic surface `rho(gamma, z) = sigma(gamma) exp(2 i b arg(cz + d))`
//! with `b = n / (2g - 2)`. The argument is the continuous one carried by the
//! lifted [`GroupElement`], which keeps the formula a cocycle for every `n`.
//! On a flat torus in the symmetric gauge
//! `rho(m, z) = sigma(m) (-1)^{n m1 m2} exp(i (B/2) Im(conj(w_m) z))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{DeckElement, Geometry, GroupElement, MoebiusTransform, SurfaceMesh, TorusCell};

/// A unitary character of the deck group, stored by its values on generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub values: Vec<Complex64>,
}

impl Character {
    pub fn trivial(rank: usize) -> Self {
        Self { values: vec![Complex64::new(1.0, 0.0); rank] }
    }

    /// Character with `sigma(gamma_k) = exp(2 pi i turns[k])`.
    pub fn from_turns(turns: &[f64]) -> Self {
        Self { values: turns.iter().map(|t| Complex64::from_polar(1.0, 2.0 * PI * t)).collect() }
    }

    pub fn random<R: Rng>(rank: usize, rng: &mut R) -> Self {
        let turns: Vec<f64> = (0..rank).map(|_| rng.random::<f64>()).collect();
        Self::from_turns(&turns)
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Phases in turns, each in `(-1/2, 1/2]`.
    pub fn turns(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg() / (2.0 * PI)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.values {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("character value {v} is not unimodular")));
            }
        }
        Ok(())
    }

    /// Value on an element given by its abelian image.
    pub fn evaluate(&self, abelian: &[i64]) -> Complex64 {
        let phase: f64 = self.values.iter().zip(abelian).map(|(v, &m)| v.arg() * m as f64).sum();
        Complex64::from_polar(1.0, phase)
    }

    pub fn multiply(&self, other: &Character) -> Character {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() }
    }

    pub fn conj(&self) -> Character {
        Self { values: self.values.iter().map(|a| a.conj()).collect() }
    }

    /// Largest distance between corresponding generator values.
    pub fn distance(&self, other: &Character) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FactorGeometry {
    Hyperbolic { genus: usize },
    Torus(TorusCell),
}

/// The automorphy factor of the line bundle `E_{n, sigma}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomorphyFactor {
    pub n: i64,
    pub sigma: Character,
    pub geometry: FactorGeometry,
}

impl AutomorphyFactor {
    pub fn hyperbolic(n: i64, genus: usize, sigma: Character) -> Result<Self> {
        if genus < 2 {
            return Err(Error::Domain(format!("hyperbolic factor needs genus >= 2, got {genus}")));
        }
        if sigma.rank() != 2 * genus {
            return Err(Error::Domain(format!("character has {} values, expected {}", sigma.rank(), 2 * genus)));
        }
        sigma.validate()?;
        Ok(Self { n, sigma, geometry: FactorGeometry::Hyperbolic { genus } })
    }

    pub fn torus(cell: TorusCell, sigma: Character) -> Result<Self> {
        if sigma.rank() != 2 {
            return Err(Error::Domain("torus character needs 2 values".into()));
        }
        sigma.validate()?;
        Ok(Self { n: cell.n_flux, sigma, geometry: FactorGeometry::Torus(cell) })
    }

    /// Factor matching the geometry of a mesh.
    pub fn for_geometry(geometry: &Geometry, n: i64, sigma: Character) -> Result<Self> {
        match geometry {
            Geometry::Hyperbolic(g) => Self::hyperbolic(n, g.genus, sigma),
            Geometry::Torus(cell) => {
                let mut cell = cell.clone();
                cell.n_flux = n;
                Self::torus(cell, sigma)
            }
        }
    }

    pub fn genus(&self) -> usize {
        match &self.geometry {
            FactorGeometry::Hyperbolic { genus } => *genus,
            FactorGeometry::Torus(_) => 1,
        }
    }

    /// Curvature of the associated constant curvature connection.
    pub fn b(&self) -> f64 {
        match &self.geometry {
            FactorGeometry::Hyperbolic { genus } => self.n as f64 / (2.0 * *genus as f64 - 2.0),
            FactorGeometry::Torus(cell) => 2.0 * PI * self.n as f64 / cell.area(),
        }
    }

    /// The real phase `f` with `rho = sigma exp(i f)`, so that the reference
    /// connection obeys `gamma^* A = A + df`.
    pub fn phase_function(&self, g: &DeckElement, z: Complex64) -> f64 {
        match (&self.geometry, g) {
            (FactorGeometry::Hyperbolic { .. }, DeckElement::Fuchsian(e)) => 2.0 * self.b() * e.arg_j(z),
            (FactorGeometry::Torus(cell), DeckElement::Translation { m1, m2, shift }) => {
                let parity = if (self.n * m1 * m2).rem_euclid(2) == 1 { PI } else { 0.0 };
                0.5 * cell.field() * (shift.conj() * z).im + parity
            }
            _ => panic!("deck element does not match the factor geometry"),
        }
    }

    /// Gradient `(df/dx, df/dy)` of the phase function.
    pub fn phase_gradient(&self, g: &DeckElement, z: Complex64) -> [f64; 2] {
        match (&self.geometry, g) {
            (FactorGeometry::Hyperbolic { .. }, DeckElement::Fuchsian(e)) => {
                let w = e.matrix.c / e.matrix.j(z);
                let s = 2.0 * self.b();
                [s * w.im, s * w.re]
            }
            (FactorGeometry::Torus(cell), DeckElement::Translation { shift, .. }) => {
                let h = 0.5 * cell.field();
                [-h * shift.im, h * shift.re]
            }
            _ => panic!("deck element does not match the factor geometry"),
        }
    }

    /// `rho(gamma, z)` through the continuous argument of the lift.
    pub fn evaluate(&self, g: &DeckElement, z: Complex64) -> Complex64 {
        self.sigma.evaluate(&g.abelian()) * Complex64::from_polar(1.0, self.phase_function(g, z))
    }

    /// `sigma(gamma) exp(-b [ln(c conj(z) + d) - ln(cz + d)])` with principal
    /// logarithms. Agrees with [`Self::evaluate`] when the lift of `gamma` is
    /// the principal one; a cocycle only when `2b` is an integer.
    pub fn evaluate_principal(&self, g: &GroupElement, z: Complex64) -> Complex64 {
        let j = g.matrix.j(z);
        let expo = -self.b() * (j.conj().ln() - j.ln());
        self.sigma.evaluate(&g.abelian.iter().map(|&k| k as i64).collect::<Vec<_>>()) * expo.exp()
    }

    /// `|rho(g1 g2, z) - rho(g1, g2 z) rho(g2, z)|`.
    pub fn check_cocycle(&self, g1: &DeckElement, g2: &DeckElement, z: Complex64) -> f64 {
        let lhs = self.evaluate(&g1.compose(g2), z);
        let rhs = self.evaluate(g1, g2.apply(z)) * self.evaluate(g2, z);
        (lhs - rhs).norm()
    }

    /// Chern number measured as the flux of the reference connection.
    pub fn chern_number(&self, mesh: &SurfaceMesh) -> Result<i64> {
        let a = crate::gauge_fields::Connection::reference(self, mesh)?;
        let flux = a.total_flux(mesh);
        let k = flux.round();
        if (flux - k).abs() > 0.1 {
            return Err(Error::InconsistentDiscretization(format!("flux {flux} is not near an integer")));
        }
        Ok(k as i64)
    }
}

/// `rho(g, z)` for a bare Moebius map with the principal branch and a given
/// character value.
pub fn evaluate_rho(
    factor: &AutomorphyFactor,
    g: &MoebiusTransform,
    sigma: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    if z.im <= 0.0 {
        return Err(Error::Domain(format!("point {z} is not in the upper half-plane")));
    }
    let j = g.j(z);
    Ok(sigma * (-factor.b() * (j.conj().ln() - j.ln())).exp())
}

/// An automorphy factor changed by a gauge map `g~` on the universal cover:
/// `rho'(gamma, z) = g~(gamma z) rho(gamma, z) / g~(z)`.
pub struct GaugedFactor<'a> {
    pub base: &'a AutomorphyFactor,
    gauge: Box<dyn Fn(Complex64) -> Complex64 + 'a>,
}

impl<'a> GaugedFactor<'a> {
    pub fn evaluate(&self, g: &DeckElement, z: Complex64) -> Complex64 {
        (self.gauge)(g.apply(z)) * self.base.evaluate(g, z) / (self.gauge)(z)
    }

    pub fn check_cocycle(&self, g1: &DeckElement, g2: &DeckElement, z: Complex64) -> f64 {
        let lhs = self.evaluate(&g1.compose(g2), z);
        let rhs = self.evaluate(g1, g2.apply(z)) * self.evaluate(g2, z);
        (lhs - rhs).norm()
    }

    /// Values of the new factor at every boundary pair of the mesh.
    pub fn boundary_values(&self, mesh: &SurfaceMesh) -> Vec<Complex64> {
        mesh.boundary_pairs
            .iter()
            .map(|p| self.evaluate(&mesh.geometry.generator(p.generator), mesh.nodes[p.node]))
            .collect()
    }

    /// If `rho' / rho` is constant on each generator's boundary pairs, the
    /// character that multiplies `sigma`.
    pub fn character_shift(&self, mesh: &SurfaceMesh, tol: f64) -> Option<Character> {
        let rank = mesh.geometry.generator_count();
        let mut values: Vec<Option<Complex64>> = vec![None; rank];
        for p in &mesh.boundary_pairs {
            let g = mesh.geometry.generator(p.generator);
            let z = mesh.nodes[p.node];
            let ratio = self.evaluate(&g, z) / self.base.evaluate(&g, z);
            match values[p.generator] {
                None => values[p.generator] = Some(ratio),
                Some(v) if (v - ratio).norm() > tol => return None,
                _ => {}
            }
        }
        values.into_iter().collect::<Option<Vec<_>>>().map(|values| Character { values })
    }
}

/// Applies a nowhere vanishing gauge map to an automorphy factor.
pub fn gauge_transform_rho<'a, F>(
    factor: &'a AutomorphyFactor,
    gauge: F,
    mesh: &SurfaceMesh,
) -> Result<GaugedFactor<'a>>
where
    F: Fn(Complex64) -> Complex64 + 'a,
{
    for (k, &z) in mesh.nodes.iter().enumerate() {
        let v = gauge(z);
        if !(v.norm() > 1e-14) {
            return Err(Error::SingularGauge(format!("gauge vanishes at node {k} ({z})")));
        }
    }
    Ok(GaugedFactor { base: factor, gauge: Box::new(gauge) })
}
