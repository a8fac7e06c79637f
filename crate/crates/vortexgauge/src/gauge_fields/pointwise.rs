use num_complex::Complex64;

use super::complex::EdgeComplex;
use super::connection::{quad_row, Connection};
use super::section::{EquivariantSection, VertexOneForm};
use crate::error::Result;
use crate::hyperbolic::{DeckElement, SurfaceMesh};
use crate::linalg::least_squares;

/// A one-ring neighbour of a quotient vertex, moved into the chart frame of
/// the vertex's representative node.
#[derive(Clone, Debug)]
pub struct StencilEntry {
    pub vertex: usize,
    /// Deck element taking the neighbour's representative to `position`.
    pub deck: DeckElement,
    pub position: Complex64,
    pub edge: usize,
    /// Orientation of `edge` relative to the direction centre -> neighbour.
    pub sign: f64,
}

/// One-ring stencils of every quotient vertex.
#[derive(Clone, Debug)]
pub struct VertexStencils {
    pub entries: Vec<Vec<StencilEntry>>,
}

impl VertexStencils {
    pub fn new(mesh: &SurfaceMesh, cx: &EdgeComplex) -> Self {
        let entries = (0..mesh.n_vertices()).map(|v| stencil(mesh, cx, v)).collect();
        Self { entries }
    }
}

fn stencil(mesh: &SurfaceMesh, cx: &EdgeComplex, v: usize) -> Vec<StencilEntry> {
    let mut out: Vec<StencilEntry> = Vec::new();
    for &(t, corner) in &cx.vertex_star[v] {
        let c = mesh.cells[t];
        let back = mesh.node_deck[c[corner]].inverse();
        for (j, e, sign_dir) in [((corner + 1) % 3, corner, 1.0), ((corner + 2) % 3, (corner + 2) % 3, -1.0)] {
            let k = c[j];
            let position = back.apply(mesh.nodes[k]);
            if out.iter().any(|s| (s.position - position).norm() < 1e-10) {
                continue;
            }
            let (edge, s) = cx.cell_edges[t][e];
            out.push(StencilEntry {
                vertex: mesh.node_vertex[k],
                deck: back.compose(&mesh.node_deck[k]),
                position,
                edge,
                sign: s * sign_dir,
            });
        }
    }
    out
}

/// Chart positions of the one-ring of `v` in the frame of its representative.
pub fn star_positions(mesh: &SurfaceMesh, cx: &EdgeComplex, v: usize) -> Vec<Complex64> {
    stencil(mesh, cx, v).into_iter().map(|s| s.position).collect()
}

/// Covariant derivatives `(D1 psi, D2 psi)` at each vertex, from quadratic
/// least squares fits of the neighbours parallel transported to the centre.
pub fn covariant_gradient(
    mesh: &SurfaceMesh,
    stencils: &VertexStencils,
    conn: &Connection,
    psi: &EquivariantSection,
) -> Result<Vec<[Complex64; 2]>> {
    psi.ensure_compatible(&conn.factor)?;
    Ok((0..mesh.n_vertices())
        .map(|v| {
            let zc = mesh.vertices[v];
            let pc = psi.values[v];
            let st = &stencils.entries[v];
            let rows: Vec<[f64; 5]> = st.iter().map(|s| quad_row(s.position - zc)).collect();
            let rhs: Vec<Complex64> = st
                .iter()
                .map(|s| {
                    let w = conn.factor.evaluate(&s.deck, mesh.vertices[s.vertex]) * psi.values[s.vertex];
                    let theta = conn.reference_integral(zc, s.position) + s.sign * conn.alpha_at(s.edge);
                    Complex64::from_polar(1.0, -theta) * w - pc
                })
                .collect();
            let coef = least_squares(&rows, &rhs);
            [coef[0], coef[1]]
        })
        .collect())
}

/// `d''_A psi` as the coefficient of `d conj(z)` at each vertex.
pub fn dbar_a(
    mesh: &SurfaceMesh,
    stencils: &VertexStencils,
    conn: &Connection,
    psi: &EquivariantSection,
) -> Result<Vec<Complex64>> {
    Ok(covariant_gradient(mesh, stencils, conn, psi)?
        .into_iter()
        .map(|[p, q]| 0.5 * (p + Complex64::i() * q))
        .collect())
}

/// Metric norm of a `(0, 1)`-form given by its `d conj(z)` coefficients.
pub fn dbar_norm(mesh: &SurfaceMesh, coeff: &[Complex64]) -> f64 {
    coeff
        .iter()
        .enumerate()
        .map(|(v, c)| 2.0 * mesh.vertex_areas[v] * c.norm_sqr() / mesh.metric_weight[v])
        .sum::<f64>()
        .sqrt()
}

/// The supercurrent `Im(conj(psi) D psi)` at each vertex.
pub fn supercurrent(
    mesh: &SurfaceMesh,
    stencils: &VertexStencils,
    conn: &Connection,
    psi: &EquivariantSection,
) -> Result<VertexOneForm> {
    let grad = covariant_gradient(mesh, stencils, conn, psi)?;
    let mut j = VertexOneForm::zeros(mesh.n_vertices());
    for (v, [p, q]) in grad.into_iter().enumerate() {
        let c = psi.values[v].conj();
        j.a1[v] = (c * p).im;
        j.a2[v] = (c * q).im;
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphy::{AutomorphyFactor, Character};
    use crate::hyperbolic::{build_mesh, Geometry, TorusCell};

    #[test]
    fn constant_section_flat_torus_is_holomorphic() {
        let cell = TorusCell::square(1.0, 0);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), 8).unwrap();
        let cx = EdgeComplex::new(&mesh);
        let f = AutomorphyFactor::torus(cell, Character::trivial(2)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        let st = VertexStencils::new(&mesh, &cx);
        let psi = EquivariantSection::from_fn(&mesh, &f, |_| Complex64::new(1.0, 0.0));
        let d = dbar_a(&mesh, &st, &a, &psi).unwrap();
        assert!(d.iter().all(|c| c.norm() < 1e-12));
        assert!(st.entries.iter().all(|e| e.len() == 6));
    }

    #[test]
    fn plane_wave_current_converges_at_second_order() {
        // psi = e^{2 pi i x} on the flat torus: J = 2 pi dx
        let err = |res: usize| {
            let cell = TorusCell::square(1.0, 0);
            let mesh = build_mesh(&Geometry::Torus(cell.clone()), res).unwrap();
            let cx = EdgeComplex::new(&mesh);
            let f = AutomorphyFactor::torus(cell, Character::trivial(2)).unwrap();
            let a = Connection::reference(&f, &mesh).unwrap();
            let st = VertexStencils::new(&mesh, &cx);
            let psi = EquivariantSection::from_fn(&mesh, &f, |z| {
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * z.re)
            });
            let j = supercurrent(&mesh, &st, &a, &psi).unwrap();
            (0..mesh.n_vertices())
                .map(|v| (j.a1[v] - 2.0 * std::f64::consts::PI).abs() + j.a2[v].abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 0.5, "{e1}");
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }
}
