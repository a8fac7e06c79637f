use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hyperbolic::SurfaceMesh;
use crate::linalg::{CsrMatrix, TripletBuilder};

/// Vertices, edges and faces of the quotient surface with the incidence
/// matrices `d0` (vertices to edges) and `d1` (edges to faces).
///
/// Each quotient edge has a representative polygon edge `a -> b` fixing its
/// orientation. Polygon edges on paired sides are identified node to node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeComplex {
    pub n_vertices: usize,
    /// `(tail, head)` quotient vertices.
    pub edges: Vec<[usize; 2]>,
    /// Representative directed polygon edge of each quotient edge.
    pub edge_rep: Vec<[usize; 2]>,
    /// For the directed cell edges `c0 -> c1`, `c1 -> c2`, `c2 -> c0`:
    /// quotient edge and orientation sign.
    pub cell_edges: Vec<[(usize, f64); 3]>,
    /// Cells and corner index around each quotient vertex.
    pub vertex_star: Vec<Vec<(usize, usize)>>,
}

impl EdgeComplex {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut partner: HashMap<(usize, usize), usize> = HashMap::new();
        for p in &mesh.boundary_pairs {
            partner.insert((p.generator, p.node), p.partner);
        }
        let mut generators_of: HashMap<usize, Vec<usize>> = HashMap::new();
        for p in &mesh.boundary_pairs {
            generators_of.entry(p.node).or_default().push(p.generator);
        }

        let mut undirected: Vec<(usize, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for c in &mesh.cells {
            for e in 0..3 {
                let k = key(c[e], c[(e + 1) % 3]);
                if seen.insert(k) {
                    undirected.push(k);
                }
            }
        }
        // Quotient edge id and orientation for every undirected polygon edge.
        // Side edges on a from-side come first and claim their glued image.
        let mut polygon_edge: HashMap<(usize, usize), (usize, f64)> = HashMap::new();
        let mut edge_rep: Vec<[usize; 2]> = Vec::new();
        for &(ka, kb) in &undirected {
            let shared: Vec<usize> = match (generators_of.get(&ka), generators_of.get(&kb)) {
                (Some(ga), Some(gb)) => ga.iter().filter(|g| gb.contains(g)).copied().collect(),
                _ => Vec::new(),
            };
            for g in shared {
                let id = edge_rep.len();
                edge_rep.push([ka, kb]);
                polygon_edge.insert((ka, kb), (id, 1.0));
                let (pa, pb) = (partner[&(g, ka)], partner[&(g, kb)]);
                let sign = if pa < pb { 1.0 } else { -1.0 };
                polygon_edge.insert(key(pa, pb), (id, sign));
            }
        }
        for &(ka, kb) in &undirected {
            if !polygon_edge.contains_key(&(ka, kb)) {
                polygon_edge.insert((ka, kb), (edge_rep.len(), 1.0));
                edge_rep.push([ka, kb]);
            }
        }
        let edges: Vec<[usize; 2]> =
            edge_rep.iter().map(|&[a, b]| [mesh.node_vertex[a], mesh.node_vertex[b]]).collect();
        let cell_edges: Vec<[(usize, f64); 3]> = mesh
            .cells
            .iter()
            .map(|c| {
                std::array::from_fn(|e| {
                    let (a, b) = (c[e], c[(e + 1) % 3]);
                    let (id, s) = polygon_edge[&key(a, b)];
                    (id, if a < b { s } else { -s })
                })
            })
            .collect();
        let mut vertex_star = vec![Vec::new(); mesh.n_vertices()];
        for (t, c) in mesh.cells.iter().enumerate() {
            for (corner, &k) in c.iter().enumerate() {
                vertex_star[mesh.node_vertex[k]].push((t, corner));
            }
        }
        Self { n_vertices: mesh.n_vertices(), edges, edge_rep, cell_edges, vertex_star }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_edges() as i64 + self.n_cells() as i64
    }

    /// Coboundary on functions: `(d0 f)_e = f(head) - f(tail)`.
    pub fn d0(&self) -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(self.n_edges(), self.n_vertices);
        for (e, &[t, h]) in self.edges.iter().enumerate() {
            b.push(e, h, 1.0);
            b.push(e, t, -1.0);
        }
        b.build()
    }

    /// Coboundary on edge cochains: signed sum around each cell.
    pub fn d1(&self) -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(self.n_cells(), self.n_edges());
        for (t, ce) in self.cell_edges.iter().enumerate() {
            for &(e, s) in ce {
                b.push(t, e, s);
            }
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{build_fuchsian_group, build_mesh, Geometry, TorusCell};

    #[test]
    fn euler_characteristic_and_dd() {
        for (geometry, chi) in [
            (Geometry::Hyperbolic(build_fuchsian_group(2).unwrap()), -2),
            (Geometry::Hyperbolic(build_fuchsian_group(3).unwrap()), -4),
            (Geometry::Torus(TorusCell::square(1.0, 0)), 0),
        ] {
            let mesh = build_mesh(&geometry, 5).unwrap();
            let cx = EdgeComplex::new(&mesh);
            assert_eq!(cx.euler_characteristic(), chi);
            let dd = cx.d1().matmul(&cx.d0());
            assert!(dd.values.iter().all(|v| *v == 0.0));
            // every quotient edge bounds exactly two cell sides
            let mut count = vec![0; cx.n_edges()];
            for ce in &cx.cell_edges {
                for &(e, _) in ce {
                    count[e] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 2));
        }
    }
}
