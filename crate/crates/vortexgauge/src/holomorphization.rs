//! The Dolbeault gauge `g` with `d-bar g = i g A^{0,1}` on the chart of the
//! fundamental polygon, and the weight bookkeeping of `E (x) F`.
//!
//! Writing `g = e^kappa` the equation is linear, `d-bar kappa = i A^{0,1}`.
//! It is solved in the least squares sense over piecewise linear `kappa` on
//! the lifted polygon (the minimizer solves the equation exactly in the
//! continuum since the polygon is simply connected). Linear holomorphic
//! functions are the exact null space of the discrete problem; they are
//! fixed by `kappa = 0` and `d kappa = 0` at the node nearest the centre.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::automorphy::{AutomorphyFactor, Character};
use crate::error::{Error, Result};
use crate::gauge_fields::{Connection, EdgeComplex, EquivariantSection};
use crate::hyperbolic::{build_mesh, Geometry, GroupElement, MoebiusTransform, SurfaceMesh};
use crate::linalg::{least_squares, TripletBuilder};

/// Solved gauge on the polygon nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DolbeaultGauge {
    pub kappa: Vec<C>,
    pub g: Vec<C>,
    /// Node where `g = 1` and `d log g = 0`.
    pub centre: usize,
    pub n: i64,
    pub b: f64,
    pub sigma: Character,
    /// Induced factor `rho'(gamma, z) = rho(gamma, z) g(z) / g(gamma z)` at
    /// the boundary node pairs `(node, partner, generator)`.
    pub induced_factor: Vec<(usize, usize, usize, C)>,
}

/// `(A1, A2)` of the connection on each polygon cell, constant per cell.
fn cell_connection(conn: &Connection, mesh: &SurfaceMesh, cx: &EdgeComplex) -> Vec<[f64; 2]> {
    (0..mesh.n_cells())
        .map(|t| {
            let z = mesh.cells[t].map(|k| mesh.nodes[k]);
            let centroid = (z[0] + z[1] + z[2]) / 3.0;
            let [r1, r2] = conn.reference_components(centroid);
            if conn.alpha.is_empty() {
                return [r1, r2];
            }
            let rows: Vec<[f64; 2]> = (0..3)
                .map(|e| {
                    let d = z[(e + 1) % 3] - z[e];
                    [d.re, d.im]
                })
                .collect();
            let rhs: Vec<f64> = (0..3)
                .map(|e| {
                    let (id, s) = cx.cell_edges[t][e];
                    s * conn.alpha_at(id)
                })
                .collect();
            let [a1, a2] = least_squares(&rows, &rhs);
            [r1 + a1, r2 + a2]
        })
        .collect()
}

/// `i A^{0,1}` as a coefficient of `d conj(z)`.
fn source(a: [f64; 2]) -> C {
    C::i() * 0.5 * C::new(a[0], a[1])
}

/// `d-bar` of the three hat functions of a chart triangle.
fn dbar_hats(z: [C; 3]) -> ([C; 3], f64) {
    let area = 0.5 * ((z[1] - z[0]).conj() * (z[2] - z[0])).im;
    (std::array::from_fn(|j| C::i() * (z[(j + 2) % 3] - z[(j + 1) % 3]) / (4.0 * area)), area)
}

fn centre_node(mesh: &SurfaceMesh) -> usize {
    let target = match mesh.geometry {
        Geometry::Hyperbolic(_) => C::i(),
        Geometry::Torus(_) => mesh.nodes.iter().sum::<C>() / mesh.nodes.len() as f64,
    };
    (0..mesh.nodes.len())
        .min_by(|&a, &b| (mesh.nodes[a] - target).norm().total_cmp(&(mesh.nodes[b] - target).norm()))
        .expect("mesh has nodes")
}

/// Neighbour lists over polygon nodes and the polygon boundary flag.
fn node_rings(mesh: &SurfaceMesh) -> (Vec<Vec<usize>>, Vec<bool>) {
    let n = mesh.nodes.len();
    let mut ring = vec![Vec::new(); n];
    let mut edge_count = std::collections::HashMap::new();
    for c in &mesh.cells {
        for e in 0..3 {
            let (a, b) = (c[e], c[(e + 1) % 3]);
            if !ring[a].contains(&b) {
                ring[a].push(b);
            }
            if !ring[b].contains(&a) {
                ring[b].push(a);
            }
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut boundary = vec![false; n];
    for ((a, b), k) in edge_count {
        if k == 1 {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    (ring, boundary)
}

/// Nodal `(d u, d-bar u)` from quadratic least squares fits on the one-ring.
fn nodal_derivatives(mesh: &SurfaceMesh, ring: &[Vec<usize>], u: &[C], k: usize) -> (C, C) {
    let zc = mesh.nodes[k];
    let rows: Vec<[f64; 5]> = ring[k]
        .iter()
        .map(|&j| {
            let d = mesh.nodes[j] - zc;
            [d.re, d.im, d.re * d.re, d.re * d.im, d.im * d.im]
        })
        .collect();
    let rhs: Vec<C> = ring[k].iter().map(|&j| u[j] - u[k]).collect();
    let c = least_squares(&rows, &rhs);
    (0.5 * (c[0] - C::i() * c[1]), 0.5 * (c[0] + C::i() * c[1]))
}

fn node_chart_areas(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut a = vec![0.0; mesh.nodes.len()];
    for c in &mesh.cells {
        let (_, area) = dbar_hats(c.map(|k| mesh.nodes[k]));
        for k in c {
            a[*k] += area / 3.0;
        }
    }
    a
}

/// Solves for the Dolbeault gauge of `conn`.
pub fn solve_dolbeault(conn: &Connection, mesh: &SurfaceMesh) -> Result<DolbeaultGauge> {
    conn.check_mesh(mesh)?;
    let cx = EdgeComplex::new(mesh);
    let a = cell_connection(conn, mesh, &cx);
    let n = mesh.nodes.len();
    let centre = centre_node(mesh);
    let (ring, _) = node_rings(mesh);
    let pinned = [centre, ring[centre][0]];

    let mut nb = TripletBuilder::<C>::new(n, n);
    let mut rhs = vec![C::new(0.0, 0.0); n];
    let mut scale: f64 = 0.0;
    for (t, c) in mesh.cells.iter().enumerate() {
        let (gr, area) = dbar_hats(c.map(|k| mesh.nodes[k]));
        let f = source(a[t]);
        for i in 0..3 {
            for j in 0..3 {
                let v = gr[i].conj() * gr[j] * area;
                scale = scale.max(v.norm());
                nb.push(c[i], c[j], v);
            }
            rhs[c[i]] += gr[i].conj() * f * area;
        }
    }
    for &p in &pinned {
        nb.push(p, p, C::new(scale, 0.0));
    }
    let normal = nb.build();
    let lu = normal.lu().map_err(|e| Error::Solver(format!("d-bar normal equations: {e}")))?;
    let mut kappa = lu.solve(&rhs);
    let residual = {
        let nk = normal.matvec(&kappa);
        let r: f64 = nk.iter().zip(&rhs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        r / rhs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(1e-300)
    };
    if !(residual < 1e-6) {
        return Err(Error::Solver(format!("d-bar solve did not converge (relative residual {residual:e})")));
    }

    // Remove the linear holomorphic part at the centre.
    let (dk, _) = nodal_derivatives(mesh, &ring, &kappa, centre);
    let (k0, z0) = (kappa[centre], mesh.nodes[centre]);
    for (k, z) in kappa.iter_mut().zip(&mesh.nodes) {
        *k -= k0 + dk * (z - z0);
    }
    let g: Vec<C> = kappa.iter().map(|k| k.exp()).collect();

    let factor = &conn.factor;
    let induced_factor = mesh
        .boundary_pairs
        .iter()
        .map(|p| {
            let gamma = mesh.geometry.generator(p.generator);
            let rho = factor.evaluate(&gamma, mesh.nodes[p.node]);
            (p.node, p.partner, p.generator, rho * g[p.node] / g[p.partner])
        })
        .collect();
    Ok(DolbeaultGauge { kappa, g, centre, n: factor.n, b: factor.b(), sigma: factor.sigma.clone(), induced_factor })
}

/// Chart-area weighted norm over interior nodes.
fn interior_norm(boundary: &[bool], weights: &[f64], v: &[C]) -> f64 {
    (0..v.len()).filter(|&k| !boundary[k]).map(|k| weights[k] * v[k].norm_sqr()).sum::<f64>().sqrt()
}

impl DolbeaultGauge {
    /// `|d-bar g - i g A^{0,1}| / |g|`, from one-ring quadratic fits at the
    /// interior polygon nodes.
    pub fn residual(&self, conn: &Connection, mesh: &SurfaceMesh) -> f64 {
        let (ring, boundary) = node_rings(mesh);
        let w = node_chart_areas(mesh);
        let mut r = vec![C::new(0.0, 0.0); self.g.len()];
        let mut gn = vec![C::new(0.0, 0.0); self.g.len()];
        for k in 0..self.g.len() {
            if boundary[k] {
                continue;
            }
            let (_, db) = nodal_derivatives(mesh, &ring, &self.g, k);
            let a = conn.reference_components(mesh.nodes[k]);
            r[k] = db - self.g[k] * source(a);
            gn[k] = self.g[k];
        }
        interior_norm(&boundary, &w, &r) / interior_norm(&boundary, &w, &gn)
    }

    /// `|d-bar r| / |r|` for the ratio `r = g / y^b` (hyperbolic) or
    /// `r = g exp(B |z|^2 / 4)` (torus), which is holomorphic in the continuum.
    pub fn ratio_residual(&self, mesh: &SurfaceMesh) -> f64 {
        let r: Vec<C> = mesh
            .nodes
            .iter()
            .zip(&self.g)
            .map(|(z, g)| match &mesh.geometry {
                Geometry::Hyperbolic(_) => g / z.im.powf(self.b),
                Geometry::Torus(_) => g * (self.b * z.norm_sqr() / 4.0).exp(),
            })
            .collect();
        dbar_relative(mesh, &r)
    }

    /// Transports sections to functions `u = psi / g` on the polygon.
    pub fn transport(&self, psi: &EquivariantSection, mesh: &SurfaceMesh) -> Vec<C> {
        psi.lifted(mesh).iter().zip(&self.g).map(|(p, g)| p / g).collect()
    }

    /// `|g^{-1} d''_a (g u) - d-bar u| / |u|` for a test function `u`.
    pub fn conjugation_residual(&self, conn: &Connection, mesh: &SurfaceMesh, u: &dyn Fn(C) -> C) -> f64 {
        let (ring, boundary) = node_rings(mesh);
        let w = node_chart_areas(mesh);
        let uv: Vec<C> = mesh.nodes.iter().map(|&z| u(z)).collect();
        let gu: Vec<C> = uv.iter().zip(&self.g).map(|(u, g)| u * g).collect();
        let mut r = vec![C::new(0.0, 0.0); uv.len()];
        for k in 0..uv.len() {
            if boundary[k] {
                continue;
            }
            let (_, dgu) = nodal_derivatives(mesh, &ring, &gu, k);
            let (_, du) = nodal_derivatives(mesh, &ring, &uv, k);
            let a = conn.reference_components(mesh.nodes[k]);
            r[k] = (dgu - gu[k] * source(a)) / self.g[k] - du;
        }
        interior_norm(&boundary, &w, &r) / interior_norm(&boundary, &w, &uv)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// `|d-bar u| / |u|` over interior polygon nodes.
pub fn dbar_relative(mesh: &SurfaceMesh, u: &[C]) -> f64 {
    let (ring, boundary) = node_rings(mesh);
    let w = node_chart_areas(mesh);
    let d: Vec<C> = (0..u.len())
        .map(|k| if boundary[k] { C::new(0.0, 0.0) } else { nodal_derivatives(mesh, &ring, u, k).1 })
        .collect();
    interior_norm(&boundary, &w, &d) / interior_norm(&boundary, &w, u)
}

/// Result of moving the `d''` kernel through the gauge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelTransport {
    pub dimension_in: usize,
    /// Numerical rank of the transported functions.
    pub dimension_out: usize,
    pub max_dbar_residual: f64,
    /// Smallest singular value of the normalized transported Gram matrix.
    pub min_singular_value: f64,
}

pub fn kernel_transport(gauge: &DolbeaultGauge, mesh: &SurfaceMesh, kernel: &[EquivariantSection]) -> KernelTransport {
    let us: Vec<Vec<C>> = kernel.iter().map(|s| gauge.transport(s, mesh)).collect();
    let max_dbar_residual = us.iter().map(|u| dbar_relative(mesh, u)).fold(0.0, f64::max);
    let w = node_chart_areas(mesh);
    let k = us.len();
    let gram = nalgebra::DMatrix::<C>::from_fn(k, k, |i, j| {
        let ip = |a: &[C], b: &[C]| (0..a.len()).map(|m| w[m] * a[m].conj() * b[m]).sum::<C>();
        ip(&us[i], &us[j]) / (ip(&us[i], &us[i]).norm() * ip(&us[j], &us[j]).norm()).sqrt()
    });
    let sv = if k > 0 { gram.singular_values() } else { nalgebra::DVector::zeros(0) };
    let min_singular_value = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let dimension_out = sv.iter().filter(|&&s| s > 1e-8).count();
    KernelTransport { dimension_in: k, dimension_out, max_dbar_residual, min_singular_value }
}

fn weight_b(n: i64, genus: usize) -> Result<f64> {
    if genus < 2 {
        return Err(Error::Domain(format!("tilde automorphy needs genus >= 2, got {genus}")));
    }
    Ok(n as f64 / (2.0 * genus as f64 - 2.0))
}

/// `|cz + d|^{-2b}` with `b = n / (2g - 2)`.
pub fn tilde_automorphy(n: i64, genus: usize, g: &MoebiusTransform, z: C) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("{z} is not in the upper half-plane")));
    }
    Ok(g.j(z).norm().powf(-2.0 * weight_b(n, genus)?))
}

/// `(cz + d)^{2b}` on the branch carried by the lift of `g`.
pub fn holomorphic_weight_factor(b: f64, g: &GroupElement, z: C) -> C {
    let j = g.matrix.j(z);
    C::from_polar(j.norm().powf(2.0 * b), 2.0 * b * g.arg_j(z))
}

/// Arithmetic and numerical degree bookkeeping of `E (x) F`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EfDegreeReport {
    pub n: i64,
    pub genus: usize,
    pub b: f64,
    /// Power of `(cz + d)` in `rho_n / rho~`.
    pub weight: f64,
    /// `weight (g - 1)`.
    pub degree_ef: f64,
    /// Winding of the positive factor `rho~`, always zero.
    pub degree_f: f64,
    /// Flux of `A^n` on a mesh, in units of `2 pi`.
    pub flux_ef: f64,
    /// Largest `|rho_n rho~^{-1} - (cz + d)^{2b}|` over sampled generators and points.
    pub product_residual: f64,
    pub resolution: usize,
}

pub fn ef_bundle_degree_check(n: i64, genus: usize, resolution: usize) -> Result<EfDegreeReport> {
    let b = weight_b(n, genus)?;
    let weight = 2.0 * b;
    let group = crate::hyperbolic::build_fuchsian_group(genus)?;
    let factor = AutomorphyFactor::hyperbolic(n, genus, Character::trivial(2 * genus))?;
    let mut product_residual: f64 = 0.0;
    let mut degree_f: f64 = 0.0;
    for k in 0..group.rank() {
        let gk = group.generator_element(k);
        let deck = crate::hyperbolic::DeckElement::Fuchsian(gk.clone());
        for s in 0..8 {
            let z = C::new(0.3 * (s as f64 - 3.5) / 3.5, 0.6 + 0.1 * s as f64);
            let rho = factor.evaluate(&deck, z);
            let tilde = tilde_automorphy(n, genus, &gk.matrix, z)?;
            let prod = rho / tilde;
            product_residual = product_residual.max((prod - holomorphic_weight_factor(b, &gk, z)).norm());
            degree_f = degree_f.max(C::new(tilde, 0.0).arg().abs() / (2.0 * PI));
        }
    }
    let mesh = build_mesh(&Geometry::Hyperbolic(group), resolution)?;
    let flux_ef = Connection::reference(&factor, &mesh)?.total_flux(&mesh);
    Ok(EfDegreeReport {
        n,
        genus,
        b,
        weight,
        degree_ef: weight * (genus as f64 - 1.0),
        degree_f,
        flux_ef,
        product_residual,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{build_fuchsian_group, TorusCell};

    fn hyperbolic(n: i64, res: usize) -> (SurfaceMesh, Connection) {
        let group = build_fuchsian_group(2).unwrap();
        let mesh = build_mesh(&Geometry::Hyperbolic(group), res).unwrap();
        let f = AutomorphyFactor::hyperbolic(n, 2, Character::trivial(4)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        (mesh, a)
    }

    #[test]
    fn hat_function_dbar() {
        let z = [C::new(0.1, 0.2), C::new(1.3, 0.1), C::new(0.4, 1.1)];
        let (g, _) = dbar_hats(z);
        let f = |w: C| 2.0 * w.conj() + C::new(0.5, -1.0) * w;
        let d: C = (0..3).map(|j| g[j] * f(z[j])).sum();
        assert!((d - 2.0).norm() < 1e-12);
    }

    #[test]
    fn zero_connection_gives_constant_gauge() {
        let (mesh, a) = hyperbolic(0, 8);
        let g = solve_dolbeault(&a, &mesh).unwrap();
        assert!(g.g.iter().all(|v| (v - 1.0).norm() < 1e-10));
    }

    #[test]
    fn hyperbolic_gauge_matches_power_of_y() {
        let errs: Vec<f64> = [8, 16]
            .iter()
            .map(|&res| {
                let (mesh, a) = hyperbolic(1, res);
                let g = solve_dolbeault(&a, &mesh).unwrap();
                let h = mesh.max_edge_length();
                let r = g.ratio_residual(&mesh);
                assert!(r < 10.0 * h * h, "res {res}: {r} vs {}", 10.0 * h * h);
                assert!(g.residual(&a, &mesh) < 10.0 * h * h);
                r
            })
            .collect();
        assert!(errs[1] < errs[0] / 2.5, "{errs:?}");
    }

    #[test]
    fn torus_gauge_is_gaussian() {
        let cell = TorusCell::square(2.0, 1);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), 16).unwrap();
        let f = AutomorphyFactor::torus(cell, Character::trivial(2)).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        let g = solve_dolbeault(&a, &mesh).unwrap();
        let h = mesh.max_edge_length();
        assert!(g.ratio_residual(&mesh) < 10.0 * h * h);
    }

    #[test]
    fn conjugation_identity() {
        let (mesh, a) = hyperbolic(1, 12);
        let g = solve_dolbeault(&a, &mesh).unwrap();
        let h = mesh.max_edge_length();
        let u = |z: C| (z * 0.7).sin() + z.conj() * z;
        assert!(g.conjugation_residual(&a, &mesh, &u) < 10.0 * h * h);
    }

    #[test]
    fn kernel_becomes_holomorphic_functions() {
        let (mesh, a) = hyperbolic(3, 16);
        let g = solve_dolbeault(&a, &mesh).unwrap();
        let sp = crate::spectral::assemble_laplacian(&a, &mesh).unwrap();
        let k = crate::spectral::dbar_kernel(&sp, &mesh, crate::spectral::kernel_window(sp.h)).unwrap();
        let t = kernel_transport(&g, &mesh, &k.sections);
        assert_eq!(t.dimension_in, 2);
        assert_eq!(t.dimension_out, 2);
        assert!(t.max_dbar_residual < 10.0 * sp.h * sp.h, "{t:?}");
        assert!(t.min_singular_value > 0.1);
    }

    #[test]
    fn tilde_factor_properties() {
        let id = MoebiusTransform::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(tilde_automorphy(1, 2, &id, C::new(0.2, 0.5)).unwrap(), 1.0);
        assert!(tilde_automorphy(1, 2, &id, C::new(0.2, -0.5)).is_err());
        let gm = MoebiusTransform::new(2.0, 1.0, 3.0, 2.0).unwrap();
        let b = 0.5;
        for z in [C::new(0.1, 0.7), C::new(-1.2, 0.3)] {
            let w = gm.apply_unchecked(z);
            let lhs = w.im.powf(b);
            let rhs = z.im.powf(b) * tilde_automorphy(1, 2, &gm, z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_bookkeeping() {
        for (n, g, deg) in [(1, 2, 1.0), (2, 3, 2.0), (0, 2, 0.0), (4, 3, 4.0)] {
            let r = ef_bundle_degree_check(n, g, 8).unwrap();
            assert!((r.degree_ef - deg).abs() < 1e-12);
            assert_eq!(r.degree_f, 0.0);
            assert!(r.product_residual < 1e-10, "{r:?}");
            assert!((r.flux_ef - deg).abs() < 0.05, "{r:?}");
        }
    }
}
