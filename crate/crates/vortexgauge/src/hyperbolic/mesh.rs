use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::group::{DeckElement, FuchsianGroup, GroupElement};
use super::moebius::{disk_to_half_plane, geodesic_triangle_area, half_plane_to_disk, hyperbolic_distance};
use super::torus::TorusCell;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Geometry {
    Hyperbolic(FuchsianGroup),
    Torus(TorusCell),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    Hyperbolic,
    FlatTorus,
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Hyperbolic(_) => GeometryKind::Hyperbolic,
            Geometry::Torus(_) => GeometryKind::FlatTorus,
        }
    }

    pub fn genus(&self) -> usize {
        match self {
            Geometry::Hyperbolic(g) => g.genus,
            Geometry::Torus(_) => 1,
        }
    }

    /// Metric area of the closed surface.
    pub fn area(&self) -> f64 {
        match self {
            Geometry::Hyperbolic(g) => 4.0 * PI * (g.genus as f64 - 1.0),
            Geometry::Torus(t) => t.area(),
        }
    }

    /// Curvature `b` of the constant curvature connection of degree `n`.
    pub fn field_strength(&self, n: i64) -> f64 {
        2.0 * PI * n as f64 / self.area()
    }

    pub fn generator_count(&self) -> usize {
        2 * self.genus()
    }

    /// Deck element of a single generator.
    pub fn generator(&self, k: usize) -> DeckElement {
        match self {
            Geometry::Hyperbolic(g) => DeckElement::Fuchsian(g.generator_element(k)),
            Geometry::Torus(t) => {
                let (m1, m2) = if k == 0 { (1, 0) } else { (0, 1) };
                DeckElement::Translation { m1, m2, shift: t.lattice_point(m1, m2) }
            }
        }
    }

    pub fn identity(&self) -> DeckElement {
        match self {
            Geometry::Hyperbolic(g) => DeckElement::Fuchsian(GroupElement::identity(g.rank())),
            Geometry::Torus(_) => DeckElement::Translation { m1: 0, m2: 0, shift: Complex64::new(0.0, 0.0) },
        }
    }

    /// Conformal factor of the metric at a chart point.
    pub fn metric_weight(&self, z: Complex64) -> f64 {
        match self {
            Geometry::Hyperbolic(_) => 1.0 / (z.im * z.im),
            Geometry::Torus(_) => 1.0,
        }
    }
}

/// A boundary node of the fundamental domain glued to `partner` by the
/// pairing generator `generator`: `z[partner] = g z[node]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub node: usize,
    pub partner: usize,
    pub generator: usize,
}

/// Triangulated fundamental domain together with its quotient structure.
///
/// Polygon nodes live in the chart (upper half-plane or the plane). Nodes
/// glued by the side pairings represent one quotient vertex; for every node
/// `z[node] = deck[node] z[vertex]` where `z[vertex]` is the position of the
/// representative node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub geometry: Geometry,
    pub genus: usize,
    pub resolution: usize,
    /// Chart position of each quotient vertex.
    pub vertices: Vec<Complex64>,
    /// Chart position of each polygon node.
    pub nodes: Vec<Complex64>,
    pub node_vertex: Vec<usize>,
    pub node_deck: Vec<DeckElement>,
    /// Counter-clockwise triangles of polygon nodes.
    pub cells: Vec<[usize; 3]>,
    pub boundary_pairs: Vec<BoundaryPair>,
    /// Conformal factor at each quotient vertex.
    pub metric_weight: Vec<f64>,
    /// Metric area of each cell (exact for geodesic triangles).
    pub cell_areas: Vec<f64>,
    /// Lumped metric area of each quotient vertex.
    pub vertex_areas: Vec<f64>,
}

impl SurfaceMesh {
    pub fn kind(&self) -> GeometryKind {
        self.geometry.kind()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Corners of cell `t` in the conformal chart used for cotangent and
    /// Whitney weights: the disk model for hyperbolic meshes, where the
    /// polygon's rotations are Euclidean.
    pub fn weight_chart(&self, t: usize) -> [Complex64; 3] {
        let z = self.cells[t].map(|k| self.nodes[k]);
        match self.geometry {
            Geometry::Hyperbolic(_) => z.map(half_plane_to_disk),
            Geometry::Torus(_) => z,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cell_areas.iter().sum()
    }

    /// Area from one-point quadrature of the conformal factor on straight
    /// chart triangles; converges to the exact area as the mesh is refined.
    pub fn quadrature_area(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let z = c.map(|k| self.nodes[k]);
                let lam: f64 = z.iter().map(|&p| self.geometry.metric_weight(p)).sum::<f64>() / 3.0;
                lam * euclidean_area(z)
            })
            .sum()
    }

    /// Metric distance between two chart points joined by a mesh edge.
    pub fn edge_length(&self, z1: Complex64, z2: Complex64) -> f64 {
        match self.geometry {
            Geometry::Hyperbolic(_) => hyperbolic_distance(z1, z2),
            Geometry::Torus(_) => (z1 - z2).norm(),
        }
    }

    /// Largest metric edge length `h`.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in &self.cells {
            for e in 0..3 {
                h = h.max(self.edge_length(self.nodes[c[e]], self.nodes[c[(e + 1) % 3]]));
            }
        }
        h
    }

    /// Largest deviation of `deck[node] z[vertex]` from the node position.
    pub fn deck_residual(&self) -> f64 {
        (0..self.nodes.len())
            .map(|k| (self.node_deck[k].apply(self.vertices[self.node_vertex[k]]) - self.nodes[k]).norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of a pairing generator image from its partner node.
    pub fn pairing_residual(&self) -> f64 {
        self.boundary_pairs
            .iter()
            .map(|p| (self.geometry.generator(p.generator).apply(self.nodes[p.node]) - self.nodes[p.partner]).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn euclidean_area(z: [Complex64; 3]) -> f64 {
    0.5 * ((z[1] - z[0]).conj() * (z[2] - z[0])).im
}

/// Meshes the fundamental domain of `geometry` with `resolution` subdivisions
/// per polygon side (per lattice direction on a torus).
pub fn build_mesh(geometry: &Geometry, resolution: usize) -> Result<SurfaceMesh> {
    if resolution < 4 {
        return Err(Error::Refinement(format!(
            "resolution {resolution} cannot resolve the polygon corners; need at least 4"
        )));
    }
    match geometry {
        Geometry::Hyperbolic(group) => hyperbolic_mesh(group, resolution),
        Geometry::Torus(cell) => torus_mesh(cell, resolution),
    }
}

fn geodesic_point_disk(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    // Move a to the origin, interpolate along the diameter, move back.
    let to0 = |w: Complex64| (w - a) / (1.0 - a.conj() * w);
    let back = |u: Complex64| (u + a) / (1.0 + a.conj() * u);
    let wb = to0(b);
    let dist = 2.0 * wb.norm().atanh();
    if dist == 0.0 {
        return a;
    }
    back(wb / wb.norm() * (t * dist / 2.0).tanh())
}

fn hyperbolic_mesh(group: &FuchsianGroup, m: usize) -> Result<SurfaceMesh> {
    let n_sides = group.sides();
    let mut nodes_disk: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut node_at = |k: usize, j_global: usize, pos: &dyn Fn() -> Complex64, nodes: &mut Vec<Complex64>| -> usize {
        if k == 0 {
            return 0;
        }
        let key = (k, j_global % (n_sides * k));
        *index.entry(key).or_insert_with(|| {
            nodes.push(pos());
            nodes.len() - 1
        })
    };

    let mut cells = Vec::new();
    for j in 0..n_sides {
        let va = group.disk_vertices[j];
        let vb = group.disk_vertices[(j + 1) % n_sides];
        let point = |k: usize, q: usize| -> Complex64 {
            if k == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let s = geodesic_point_disk(va, vb, q as f64 / k as f64);
            let r = 2.0 * s.norm().atanh();
            s / s.norm() * (0.5 * r * k as f64 / m as f64).tanh()
        };
        let mut id = vec![vec![0usize; m + 1]; m + 1];
        for k in 0..=m {
            for q in 0..=k {
                id[k][q] = node_at(k, j * k + q, &|| point(k, q), &mut nodes_disk);
            }
        }
        for k in 0..m {
            for q in 0..=k {
                cells.push([id[k][q], id[k + 1][q], id[k + 1][q + 1]]);
                if q < k {
                    cells.push([id[k][q], id[k + 1][q + 1], id[k][q + 1]]);
                }
            }
        }
    }
    let nodes: Vec<Complex64> = nodes_disk.iter().map(|&w| disk_to_half_plane(w)).collect();
    for c in &cells {
        if euclidean_area(c.map(|k| nodes[k])) <= 0.0 {
            return Err(Error::Refinement("mesh produced an inverted triangle".into()));
        }
    }

    let mut boundary_pairs = Vec::new();
    for (gen, p) in group.pairings.iter().enumerate() {
        for q in 0..=m {
            let from = index[&(m, (p.from_side * m + q) % (n_sides * m))];
            let to = index[&(m, (p.to_side * m + (m - q)) % (n_sides * m))];
            boundary_pairs.push(BoundaryPair { node: from, partner: to, generator: gen });
        }
    }

    let geometry = Geometry::Hyperbolic(group.clone());
    let gens: Vec<DeckElement> = (0..group.rank()).map(|k| geometry.generator(k)).collect();
    finish_mesh(geometry, group.genus, m, nodes, cells, boundary_pairs, &gens)
}

fn torus_mesh(cell: &TorusCell, n: usize) -> Result<SurfaceMesh> {
    let idx = |i: usize, j: usize| i + j * (n + 1);
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push((cell.omega1 * i as f64 + cell.omega2 * j as f64) / n as f64);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            cells.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut boundary_pairs = Vec::new();
    for j in 0..=n {
        boundary_pairs.push(BoundaryPair { node: idx(0, j), partner: idx(n, j), generator: 0 });
    }
    for i in 0..=n {
        boundary_pairs.push(BoundaryPair { node: idx(i, 0), partner: idx(i, n), generator: 1 });
    }
    let geometry = Geometry::Torus(cell.clone());
    let gens = vec![geometry.generator(0), geometry.generator(1)];
    finish_mesh(geometry, 1, n, nodes, cells, boundary_pairs, &gens)
}

/// Identifies glued nodes, assigns deck elements and computes areas.
fn finish_mesh(
    geometry: Geometry,
    genus: usize,
    resolution: usize,
    nodes: Vec<Complex64>,
    cells: Vec<[usize; 3]>,
    boundary_pairs: Vec<BoundaryPair>,
    gens: &[DeckElement],
) -> Result<SurfaceMesh> {
    let n_nodes = nodes.len();
    let mut adjacency: Vec<Vec<(usize, DeckElement)>> = vec![Vec::new(); n_nodes];
    for p in &boundary_pairs {
        let g = &gens[p.generator];
        adjacency[p.node].push((p.partner, g.clone()));
        adjacency[p.partner].push((p.node, g.inverse()));
    }

    let mut node_vertex = vec![usize::MAX; n_nodes];
    let mut node_deck: Vec<Option<DeckElement>> = vec![None; n_nodes];
    let mut vertices = Vec::new();
    for start in 0..n_nodes {
        if node_vertex[start] != usize::MAX {
            continue;
        }
        let v = vertices.len();
        vertices.push(nodes[start]);
        node_vertex[start] = v;
        node_deck[start] = Some(geometry.identity());
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            let ga = node_deck[a].clone().unwrap();
            for (b, g) in &adjacency[a] {
                if node_vertex[*b] == usize::MAX {
                    node_vertex[*b] = v;
                    node_deck[*b] = Some(g.compose(&ga));
                    queue.push_back(*b);
                }
            }
        }
    }
    let node_deck: Vec<DeckElement> = node_deck.into_iter().map(Option::unwrap).collect();

    let cell_areas: Vec<f64> = cells
        .iter()
        .map(|c| {
            let z = c.map(|k| nodes[k]);
            match geometry {
                Geometry::Hyperbolic(_) => geodesic_triangle_area(z),
                Geometry::Torus(_) => euclidean_area(z),
            }
        })
        .collect();
    let mut vertex_areas = vec![0.0; vertices.len()];
    for (c, a) in cells.iter().zip(&cell_areas) {
        for &k in c {
            vertex_areas[node_vertex[k]] += a / 3.0;
        }
    }
    let metric_weight = vertices.iter().map(|&z| geometry.metric_weight(z)).collect();

    let mesh = SurfaceMesh {
        geometry,
        genus,
        resolution,
        vertices,
        nodes,
        node_vertex,
        node_deck,
        cells,
        boundary_pairs,
        metric_weight,
        cell_areas,
        vertex_areas,
    };
    let deck = mesh.deck_residual();
    if deck > 1e-8 {
        return Err(Error::InconsistentDiscretization(format!("deck identification residual {deck:e}")));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::build_fuchsian_group;

    #[test]
    fn genus_two_area_and_pairings() {
        let group = build_fuchsian_group(2).unwrap();
        let mesh = build_mesh(&Geometry::Hyperbolic(group), 8).unwrap();
        assert!((mesh.total_area() - 4.0 * PI).abs() < 1e-10);
        assert!(mesh.pairing_residual() < 1e-9);
        assert!(mesh.deck_residual() < 1e-9);
        // Euler characteristic of the quotient complex
        let mut edges = std::collections::HashSet::new();
        for c in &mesh.cells {
            for e in 0..3 {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let boundary_edges = 8 * 8;
        let quotient_edges = edges.len() - boundary_edges / 2;
        let chi = mesh.n_vertices() as i64 - quotient_edges as i64 + mesh.n_cells() as i64;
        assert_eq!(chi, -2);
    }

    #[test]
    fn all_corners_are_one_vertex() {
        let group = build_fuchsian_group(3).unwrap();
        let mesh = build_mesh(&Geometry::Hyperbolic(group.clone()), 4).unwrap();
        let corner_nodes: Vec<usize> = (0..mesh.nodes.len())
            .filter(|&k| (0..group.sides()).any(|j| (mesh.nodes[k] - group.corner(j)).norm() < 1e-9))
            .collect();
        assert_eq!(corner_nodes.len(), 12);
        let v = mesh.node_vertex[corner_nodes[0]];
        assert!(corner_nodes.iter().all(|&k| mesh.node_vertex[k] == v));
    }

    #[test]
    fn torus_unit_square() {
        let mesh = build_mesh(&Geometry::Torus(TorusCell::square(1.0, 0)), 16).unwrap();
        assert_eq!(mesh.n_vertices(), 256);
        assert!((mesh.total_area() - 1.0).abs() < 1e-14);
        assert!(mesh.pairing_residual() < 1e-14);
    }

    #[test]
    fn coarse_resolution_is_refused() {
        let group = build_fuchsian_group(2).unwrap();
        assert!(matches!(build_mesh(&Geometry::Hyperbolic(group), 2), Err(Error::Refinement(_))));
    }

    #[test]
    fn json_round_trip() {
        let mesh = build_mesh(&Geometry::Torus(TorusCell::square(1.0, 1)), 4).unwrap();
        let back = SurfaceMesh::from_json(&mesh.to_json().unwrap()).unwrap();
        assert_eq!(back.cells, mesh.cells);
        assert_eq!(back.node_vertex, mesh.node_vertex);
    }
}
