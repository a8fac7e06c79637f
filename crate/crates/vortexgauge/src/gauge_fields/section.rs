use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::automorphy::AutomorphyFactor;
use crate::error::{Error, Result};
use crate::hyperbolic::SurfaceMesh;

/// `rho(deck[k], z[vertex])` for every polygon node `k`: the factor relating
/// the value at the node to the value at its quotient vertex.
pub fn node_factors(mesh: &SurfaceMesh, factor: &AutomorphyFactor) -> Vec<Complex64> {
    (0..mesh.nodes.len()).map(|k| factor.evaluate(&mesh.node_deck[k], mesh.vertices[mesh.node_vertex[k]])).collect()
}

/// A section of the bundle of `factor`, stored by its values at the quotient
/// vertices (at the representative node positions).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivariantSection {
    pub values: Vec<Complex64>,
    pub factor: AutomorphyFactor,
}

impl EquivariantSection {
    pub fn new(values: Vec<Complex64>, factor: AutomorphyFactor) -> Self {
        Self { values, factor }
    }

    pub fn zeros(mesh: &SurfaceMesh, factor: &AutomorphyFactor) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); mesh.n_vertices()], factor: factor.clone() }
    }

    /// Samples a function on the cover at the representative positions.
    pub fn from_fn<F: Fn(Complex64) -> Complex64>(mesh: &SurfaceMesh, factor: &AutomorphyFactor, f: F) -> Self {
        Self { values: mesh.vertices.iter().map(|&z| f(z)).collect(), factor: factor.clone() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values at every polygon node.
    pub fn lifted(&self, mesh: &SurfaceMesh) -> Vec<Complex64> {
        let rho = node_factors(mesh, &self.factor);
        (0..mesh.nodes.len()).map(|k| rho[k] * self.values[mesh.node_vertex[k]]).collect()
    }

    /// Largest `|psi(gamma p) - rho(gamma, p) psi(p)|` over boundary pairs.
    pub fn boundary_residual(&self, mesh: &SurfaceMesh) -> f64 {
        let lifted = self.lifted(mesh);
        mesh.boundary_pairs
            .iter()
            .map(|p| {
                let g = mesh.geometry.generator(p.generator);
                (lifted[p.partner] - self.factor.evaluate(&g, mesh.nodes[p.node]) * lifted[p.node]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Mass inner product `sum m_v conj(self_v) other_v`.
    pub fn inner(&self, other: &Self, mass: &[f64]) -> Complex64 {
        self.values.iter().zip(&other.values).zip(mass).map(|((a, b), m)| a.conj() * b * *m).sum()
    }

    pub fn norm(&self, mass: &[f64]) -> f64 {
        self.inner(self, mass).re.max(0.0).sqrt()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect(), factor: self.factor.clone() }
    }

    /// `e^{i chi} psi` for a real function `chi` on the quotient.
    pub fn gauge_transform(&self, chi: &[f64]) -> Self {
        Self {
            values: self.values.iter().zip(chi).map(|(v, c)| v * Complex64::from_polar(1.0, *c)).collect(),
            factor: self.factor.clone(),
        }
    }

    pub fn ensure_compatible(&self, factor: &AutomorphyFactor) -> Result<()> {
        if &self.factor != factor {
            return Err(Error::Incompatible("section and connection carry different automorphy factors".into()));
        }
        Ok(())
    }

    /// CSV snapshot with columns `vertex, x, y, re, im`.
    pub fn write_csv(&self, mesh: &SurfaceMesh, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["vertex", "x", "y", "re", "im"])?;
        for (v, val) in self.values.iter().enumerate() {
            let z = mesh.vertices[v];
            w.write_record(&[v.to_string(), fmt(z.re), fmt(z.im), fmt(val.re), fmt(val.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(serde_json::to_string(self)?.as_bytes())?;
        Ok(())
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// A real one-form `a1 dx1 + a2 dx2` sampled at the quotient vertices.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VertexOneForm {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
}

impl VertexOneForm {
    pub fn zeros(n: usize) -> Self {
        Self { a1: vec![0.0; n], a2: vec![0.0; n] }
    }

    /// Metric L2 norm; for one-forms the conformal factors cancel.
    pub fn norm(&self, mesh: &SurfaceMesh) -> f64 {
        (0..self.a1.len())
            .map(|v| mesh.vertex_areas[v] * (self.a1[v].powi(2) + self.a2[v].powi(2)) / mesh.metric_weight[v])
            .sum::<f64>()
            .sqrt()
    }

    pub fn write_csv(&self, mesh: &SurfaceMesh, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["vertex", "x", "y", "a1", "a2"])?;
        for v in 0..self.a1.len() {
            let z = mesh.vertices[v];
            w.write_record(&[v.to_string(), fmt(z.re), fmt(z.im), fmt(self.a1[v]), fmt(self.a2[v])])?;
        }
        w.flush()?;
        Ok(())
    }
}
