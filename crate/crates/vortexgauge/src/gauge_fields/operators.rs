use num_complex::Complex64;

use super::complex::EdgeComplex;
use super::connection::Connection;
use super::section::{node_factors, EquivariantSection};
use crate::hyperbolic::SurfaceMesh;
use crate::linalg::{CsrMatrix, TripletBuilder};

/// Per-cell data of a connection on a mesh, and the quadratic forms built
/// from it.
///
/// In each cell the edge phases `theta` are split as `phi + Flux / 3`. The
/// curl-free part `phi` defines a local gauge `u` in which the section is
/// interpolated linearly. This gives the magnetic Dirichlet form
/// `K(psi) = sum_T int_T |grad u|^2` (cotangent weights) and the twist
/// `Tw(psi) = sum_T sum_cyc Im(conj(u_k) u_{k+1})`, with the exact identity
/// `2 |d''psi|^2 = K - Tw` for the piecewise linear interpolant.
#[derive(Clone, Debug)]
pub struct FieldOperators {
    pub n_vertices: usize,
    pub cell_vertices: Vec<[usize; 3]>,
    /// Half-cotangent weight of edge `e` (corners `e`, `e + 1`).
    pub weights: Vec<[f64; 3]>,
    pub phases: Vec<[f64; 3]>,
    pub flux: Vec<f64>,
    /// Unimodular factor taking the vertex value to the local gauge value.
    pub gauge: Vec<[Complex64; 3]>,
    pub cell_edges: Vec<[(usize, f64); 3]>,
    /// Lumped metric mass per vertex.
    pub mass: Vec<f64>,
}

pub(crate) fn cot_weights(z: [Complex64; 3]) -> [f64; 3] {
    std::array::from_fn(|e| {
        let o = z[(e + 2) % 3];
        let (u, v) = (z[e] - o, z[(e + 1) % 3] - o);
        let w = u.conj() * v;
        0.5 * w.re / w.im
    })
}

impl FieldOperators {
    pub fn new(mesh: &SurfaceMesh, cx: &EdgeComplex, conn: &Connection) -> Self {
        let rho = node_factors(mesh, &conn.factor);
        let n_cells = mesh.n_cells();
        let mut weights = Vec::with_capacity(n_cells);
        let mut phases = Vec::with_capacity(n_cells);
        let mut flux = Vec::with_capacity(n_cells);
        let mut gauge = Vec::with_capacity(n_cells);
        let mut cell_vertices = Vec::with_capacity(n_cells);
        for (t, c) in mesh.cells.iter().enumerate() {
            weights.push(cot_weights(mesh.weight_chart(t)));
            let theta = conn.cell_phases(mesh, cx, t);
            let f: f64 = theta.iter().sum();
            let phi = theta.map(|th| th - f / 3.0);
            let local = [
                Complex64::new(1.0, 0.0),
                Complex64::from_polar(1.0, -phi[0]),
                Complex64::from_polar(1.0, -phi[0] - phi[1]),
            ];
            gauge.push(std::array::from_fn(|j| local[j] * rho[c[j]]));
            phases.push(theta);
            flux.push(f);
            cell_vertices.push(c.map(|k| mesh.node_vertex[k]));
        }
        Self {
            n_vertices: mesh.n_vertices(),
            cell_vertices,
            weights,
            phases,
            flux,
            gauge,
            cell_edges: cx.cell_edges.clone(),
            mass: mesh.vertex_areas.clone(),
        }
    }

    /// Cell values in the local gauge.
    pub fn local_values(&self, t: usize, psi: &[Complex64]) -> [Complex64; 3] {
        std::array::from_fn(|j| self.gauge[t][j] * psi[self.cell_vertices[t][j]])
    }

    /// Hermitian matrix of the magnetic Dirichlet form.
    pub fn kinetic_matrix(&self) -> CsrMatrix<Complex64> {
        let mut b = TripletBuilder::new(self.n_vertices, self.n_vertices);
        for t in 0..self.cell_vertices.len() {
            let (v, u) = (self.cell_vertices[t], self.gauge[t]);
            for e in 0..3 {
                let (i, j) = (e, (e + 1) % 3);
                let w = self.weights[t][e];
                b.push(v[i], v[i], Complex64::new(w, 0.0));
                b.push(v[j], v[j], Complex64::new(w, 0.0));
                b.push(v[i], v[j], -w * u[i].conj() * u[j]);
                b.push(v[j], v[i], -w * u[j].conj() * u[i]);
            }
        }
        b.build()
    }

    /// `L psi` without assembling the matrix.
    pub fn apply_kinetic(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_vertices];
        for t in 0..self.cell_vertices.len() {
            let (v, u) = (self.cell_vertices[t], self.gauge[t]);
            for e in 0..3 {
                let (i, j) = (e, (e + 1) % 3);
                let w = self.weights[t][e];
                let d = u[j] * psi[v[j]] - u[i] * psi[v[i]];
                out[v[i]] -= w * u[i].conj() * d;
                out[v[j]] += w * u[j].conj() * d;
            }
        }
        out
    }

    /// Hermitian matrix of the twist form.
    pub fn twist_matrix(&self) -> CsrMatrix<Complex64> {
        let half_i = Complex64::new(0.0, 0.5);
        let mut b = TripletBuilder::new(self.n_vertices, self.n_vertices);
        for t in 0..self.cell_vertices.len() {
            let (v, u) = (self.cell_vertices[t], self.gauge[t]);
            for e in 0..3 {
                let (i, j) = (e, (e + 1) % 3);
                // Im(conj(x) y) = (conj(x) y - x conj(y)) / 2i
                b.push(v[i], v[j], -half_i * u[i].conj() * u[j]);
                b.push(v[j], v[i], half_i * u[j].conj() * u[i]);
            }
        }
        b.build()
    }

    /// Diagonal mass matrix.
    pub fn mass_matrix(&self) -> CsrMatrix<Complex64> {
        let d: Vec<Complex64> = self.mass.iter().map(|&m| Complex64::new(m, 0.0)).collect();
        CsrMatrix::from_diagonal(&d)
    }

    /// Curvature lumped to vertices: one third of each cell flux.
    pub fn flux_mass(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices];
        for (t, v) in self.cell_vertices.iter().enumerate() {
            for &k in v {
                out[k] += self.flux[t] / 3.0;
            }
        }
        out
    }

    pub fn kinetic_energy(&self, psi: &[Complex64]) -> f64 {
        let mut k = 0.0;
        for t in 0..self.cell_vertices.len() {
            let u = self.local_values(t, psi);
            for e in 0..3 {
                k += self.weights[t][e] * (u[(e + 1) % 3] - u[e]).norm_sqr();
            }
        }
        k
    }

    pub fn twist(&self, psi: &[Complex64]) -> f64 {
        let mut s = 0.0;
        for t in 0..self.cell_vertices.len() {
            let u = self.local_values(t, psi);
            for e in 0..3 {
                s += (u[e].conj() * u[(e + 1) % 3]).im;
            }
        }
        s
    }

    /// `|d''psi|^2` of the piecewise linear interpolant.
    pub fn dbar_energy(&self, psi: &[Complex64]) -> f64 {
        0.5 * (self.kinetic_energy(psi) - self.twist(psi))
    }

    /// Derivative of the kinetic energy with respect to the edge cochain.
    pub fn alpha_gradient(&self, psi: &[Complex64], n_edges: usize) -> Vec<f64> {
        let mut grad = vec![0.0; n_edges];
        for t in 0..self.cell_vertices.len() {
            let u = self.local_values(t, psi);
            let g: [f64; 3] = std::array::from_fn(|e| 2.0 * self.weights[t][e] * (u[(e + 1) % 3].conj() * u[e]).im);
            let mean = (g[0] + g[1] + g[2]) / 3.0;
            for e in 0..3 {
                let (id, s) = self.cell_edges[t][e];
                grad[id] += s * (g[e] - mean);
            }
        }
        grad
    }

    /// The supercurrent as a cochain dual to edge perturbations,
    /// `J = -1/2 dK/d alpha`.
    pub fn supercurrent_cochain(&self, psi: &[Complex64], n_edges: usize) -> Vec<f64> {
        self.alpha_gradient(psi, n_edges).into_iter().map(|g| -0.5 * g).collect()
    }

    /// `<psi, K psi>` through the section type.
    pub fn section_energy(&self, psi: &EquivariantSection) -> f64 {
        self.kinetic_energy(&psi.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphy::{AutomorphyFactor, Character};
    use crate::gauge_fields::PerturbationClass;
    use crate::hyperbolic::{build_fuchsian_group, build_mesh, Geometry};
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (SurfaceMesh, EdgeComplex, Connection) {
        let mesh = build_mesh(&Geometry::Hyperbolic(build_fuchsian_group(2).unwrap()), 5).unwrap();
        let cx = EdgeComplex::new(&mesh);
        let f = AutomorphyFactor::hyperbolic(1, 2, Character::from_turns(&[0.1, 0.4, -0.2, 0.3])).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        (mesh, cx, a)
    }

    fn random_psi(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn matrices_match_forms() {
        let (mesh, cx, a) = setup();
        let ops = FieldOperators::new(&mesh, &cx, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_psi(mesh.n_vertices(), &mut rng);
        let l = ops.kinetic_matrix();
        let tw = ops.twist_matrix();
        assert!(l.hermitian_defect() < 1e-12 && tw.hermitian_defect() < 1e-12);
        let k = ops.kinetic_energy(&psi);
        assert!((dot(&psi, &l.matvec(&psi)).re - k).abs() < 1e-10 * k);
        assert!((dot(&psi, &tw.matvec(&psi)).re - ops.twist(&psi)).abs() < 1e-10 * k);
        assert!(ops.dbar_energy(&psi) >= 0.0);
        let lm = l.matvec(&psi);
        let la = ops.apply_kinetic(&psi);
        assert!(lm.iter().zip(&la).all(|(x, y)| (x - y).norm() < 1e-12 * (1.0 + x.norm())));
    }

    #[test]
    fn alpha_gradient_matches_finite_differences() {
        let (mesh, cx, a) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_psi(mesh.n_vertices(), &mut rng);
        let alpha: Vec<f64> = (0..cx.n_edges()).map(|_| 0.1 * (rng.random::<f64>() - 0.5)).collect();
        let a = a.with_alpha(alpha.clone(), PerturbationClass::General);
        let grad = FieldOperators::new(&mesh, &cx, &a).alpha_gradient(&psi, cx.n_edges());
        for e in [0, 17, cx.n_edges() - 1] {
            let h = 1e-6;
            let mut ap = alpha.clone();
            ap[e] += h;
            let mut am = alpha.clone();
            am[e] -= h;
            let kp =
                FieldOperators::new(&mesh, &cx, &a.with_alpha(ap, PerturbationClass::General)).kinetic_energy(&psi);
            let km =
                FieldOperators::new(&mesh, &cx, &a.with_alpha(am, PerturbationClass::General)).kinetic_energy(&psi);
            assert!(((kp - km) / (2.0 * h) - grad[e]).abs() < 1e-6, "edge {e}");
        }
    }

    #[test]
    fn gauge_invariance_of_forms() {
        let (mesh, cx, a) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_psi(mesh.n_vertices(), &mut rng);
        let chi: Vec<f64> = (0..mesh.n_vertices()).map(|_| 6.0 * rng.random::<f64>()).collect();
        let ops = FieldOperators::new(&mesh, &cx, &a);
        let a2 = a.with_alpha(cx.d0().matvec(&chi), PerturbationClass::General);
        let ops2 = FieldOperators::new(&mesh, &cx, &a2);
        let psi2: Vec<Complex64> = psi.iter().zip(&chi).map(|(p, c)| p * Complex64::from_polar(1.0, *c)).collect();
        assert!((ops.kinetic_energy(&psi) - ops2.kinetic_energy(&psi2)).abs() < 1e-10);
        assert!((ops.twist(&psi) - ops2.twist(&psi2)).abs() < 1e-10);
        let j1 = ops.supercurrent_cochain(&psi, cx.n_edges());
        let j2 = ops2.supercurrent_cochain(&psi2, cx.n_edges());
        assert!(j1.iter().zip(&j2).all(|(x, y)| (x - y).abs() < 1e-10));
    }
}
