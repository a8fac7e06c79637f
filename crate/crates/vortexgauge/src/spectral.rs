//! The magnetic Laplacian `-Delta_a = nabla_a^* nabla_a`, its low spectrum,
//! the Weitzenboeck identity and the kernel of `d''_a`.
//!
//! Discretely `-Delta_a = M^{-1} L` with `L` the Hermitian matrix of the
//! magnetic Dirichlet form and `M` the lumped metric mass, so eigenpairs solve
//! `L x = lambda M x`. The twist form `Tw` plays the role of `int *F |psi|^2`:
//! `2 d''^* d'' = L - Tw` holds exactly, and `Tw` approaches the lumped
//! curvature `F_M` on smooth sections.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automorphy::{AutomorphyFactor, Character};
use crate::error::{Error, Result};
use crate::gauge_fields::{
    dbar_a, dbar_norm, Connection, EdgeComplex, EquivariantSection, FieldOperators, VertexStencils,
};
use crate::hyperbolic::{SurfaceMesh, TorusCell};
use crate::linalg::{dot, shift_invert_eigen, CsrMatrix, EigenOptions};

/// Calibration constant of the kernel window `5 C h^2`, measured on flat tori
/// where lowest Landau level multiplicities are known.
pub const KERNEL_CALIBRATION: f64 = 0.8;

/// The generalized Hermitian problem `L x = lambda M x` of a connection.
pub struct SpectralProblem {
    pub operator: CsrMatrix<Complex64>,
    pub twist: CsrMatrix<Complex64>,
    pub mass: Vec<f64>,
    pub mass_matrix: CsrMatrix<Complex64>,
    pub flux_mass: Vec<f64>,
    pub connection: Connection,
    pub b: f64,
    pub h: f64,
}

/// One eigenpair with its residual `|L x - lambda M x| / |M x|`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub section: EquivariantSection,
    pub residual: f64,
}

pub fn assemble_laplacian(conn: &Connection, mesh: &SurfaceMesh) -> Result<SpectralProblem> {
    let cx = EdgeComplex::new(mesh);
    assemble_with_complex(conn, mesh, &cx)
}

pub fn assemble_with_complex(conn: &Connection, mesh: &SurfaceMesh, cx: &EdgeComplex) -> Result<SpectralProblem> {
    conn.check_mesh(mesh)?;
    let ops = FieldOperators::new(mesh, cx, conn);
    Ok(SpectralProblem {
        operator: ops.kinetic_matrix(),
        twist: ops.twist_matrix(),
        mass_matrix: ops.mass_matrix(),
        flux_mass: ops.flux_mass(),
        mass: ops.mass,
        connection: conn.clone(),
        b: conn.b(),
        h: mesh.max_edge_length(),
    })
}

impl SpectralProblem {
    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `<psi, -Delta psi>` in the metric inner product.
    pub fn quadratic_form(&self, psi: &[Complex64]) -> f64 {
        dot(psi, &self.operator.matvec(psi)).re
    }

    pub fn mass_norm(&self, psi: &[Complex64]) -> f64 {
        psi.iter().zip(&self.mass).map(|(p, m)| p.norm_sqr() * m).sum::<f64>().sqrt()
    }

    /// Default shift just below the bottom of the spectrum.
    pub fn default_shift(&self) -> f64 {
        self.b.abs().min(self.b) - 0.05 * self.b.abs().max(1.0)
    }

    pub fn section(&self, values: Vec<Complex64>) -> EquivariantSection {
        EquivariantSection::new(values, self.connection.factor.clone())
    }
}

/// The `k` smallest eigenpairs, ascending and mass-orthonormal.
pub fn lowest_eigenpairs(problem: &SpectralProblem, k: usize) -> Result<Vec<EigenPair>> {
    lowest_eigenpairs_with(problem, k, &EigenOptions { shift: problem.default_shift(), ..Default::default() })
}

pub fn lowest_eigenpairs_with(problem: &SpectralProblem, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    if k == 0 {
        return Err(Error::Domain("need at least one eigenpair".into()));
    }
    let r = shift_invert_eigen(&problem.operator, &problem.mass_matrix, k, opts)?;
    Ok(r.values
        .into_iter()
        .zip(r.vectors)
        .zip(r.residuals)
        .take(k)
        .map(|((value, v), residual)| EigenPair { value, section: problem.section(v), residual })
        .collect())
}

/// Smooth random sections: random combinations of low eigenvectors.
pub fn smooth_random_sections(problem: &SpectralProblem, trials: usize, seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let pool = lowest_eigenpairs(problem, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..trials)
        .map(|_| {
            let mut psi = vec![Complex64::new(0.0, 0.0); problem.n()];
            for p in &pool {
                let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                for (x, y) in psi.iter_mut().zip(&p.section.values) {
                    *x += c * y;
                }
            }
            psi
        })
        .collect())
}

/// Largest relative residual of `d''^* d'' = 1/2 (-Delta - *F)` over smooth
/// random sections: `1/2 |M^{-1} (Tw - F_M) psi| / |psi|` in the mass norm.
pub fn weitzenbock_residual(problem: &SpectralProblem, trials: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for psi in smooth_random_sections(problem, trials, seed)? {
        let tw = problem.twist.matvec(&psi);
        let diff: Vec<Complex64> = tw
            .iter()
            .zip(&psi)
            .zip(problem.flux_mass.iter().zip(&problem.mass))
            .map(|((t, p), (f, m))| 0.5 * (t - p * f) / m)
            .collect();
        worst = worst.max(problem.mass_norm(&diff) / problem.mass_norm(&psi));
    }
    Ok(worst)
}

/// Largest relative residual of the Weitzenboeck identity in weak form,
/// `|<phi, (Tw - F_M) psi>| / (2 |phi| |psi|)` over smooth random pairs.
pub fn weitzenbock_weak_residual(problem: &SpectralProblem, trials: usize, seed: u64) -> Result<f64> {
    let sections = smooth_random_sections(problem, 2 * trials, seed)?;
    let mut worst: f64 = 0.0;
    for pair in sections.chunks(2) {
        let (phi, psi) = (&pair[0], &pair[1]);
        let tw = problem.twist.matvec(psi);
        let fm: Vec<Complex64> = psi.iter().zip(&problem.flux_mass).map(|(p, f)| p * f).collect();
        let d = (dot(phi, &tw) - dot(phi, &fm)).norm();
        worst = worst.max(0.5 * d / (problem.mass_norm(phi) * problem.mass_norm(psi)));
    }
    Ok(worst)
}

/// Default kernel window `5 C h^2`.
pub fn kernel_window(h: f64) -> f64 {
    5.0 * KERNEL_CALIBRATION * h * h
}

/// Kernel of `d''_a`: eigenvectors of `-Delta_a` with eigenvalue within
/// `window` of `b`.
pub struct DbarKernel {
    pub sections: Vec<EquivariantSection>,
    pub eigenvalues: Vec<f64>,
    /// `|d'' psi| / |psi|` from one-ring derivatives, per kernel element.
    pub dbar_residuals: Vec<f64>,
    /// The first eigenvalue outside the window.
    pub next_eigenvalue: f64,
}

pub fn dbar_kernel(problem: &SpectralProblem, mesh: &SurfaceMesh, window: f64) -> Result<DbarKernel> {
    let b = problem.b;
    let mut k = (problem.connection.factor.n.max(0) as usize) + 2;
    loop {
        let pairs = lowest_eigenpairs(problem, k.min(problem.n()))?;
        let inside: Vec<&EigenPair> = pairs.iter().filter(|p| (p.value - b).abs() <= window).collect();
        if inside.len() < pairs.len() || k >= problem.n() {
            let next = pairs.iter().find(|p| (p.value - b).abs() > window).map_or(f64::INFINITY, |p| p.value);
            let cx = EdgeComplex::new(mesh);
            let st = VertexStencils::new(mesh, &cx);
            let mut dbar_residuals = Vec::new();
            for p in &inside {
                let d = dbar_a(mesh, &st, &problem.connection, &p.section)?;
                dbar_residuals.push(dbar_norm(mesh, &d) / p.section.norm(&problem.mass));
            }
            return Ok(DbarKernel {
                sections: inside.iter().map(|p| p.section.clone()).collect(),
                eigenvalues: inside.iter().map(|p| p.value).collect(),
                dbar_residuals,
                next_eigenvalue: next,
            });
        }
        k *= 2;
    }
}

/// Writes `index, eigenvalue, residual` rows.
pub fn write_spectrum_csv(pairs: &[EigenPair], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "eigenvalue", "residual"])?;
    for (i, p) in pairs.iter().enumerate() {
        w.write_record(&[i.to_string(), format!("{:.12e}", p.value), format!("{:.3e}", p.residual)])?;
    }
    w.flush()?;
    Ok(())
}

/// Lowest Landau level sections on a flat torus in the symmetric gauge.
///
/// Holomorphic sections are `e^{-B|z|^2/4} f(z)` with `f` entire; writing
/// `f(z) = e^{k z^2} G(z / w1)` with `k = B conj(w1) / (4 w1)` turns the
/// automorphy into `G(u + 1) = sigma_1 G(u)` and
/// `G(u + tau) = C e^{-2 pi i n u} G(u)`, solved by theta functions with
/// characteristics. There are exactly `n` independent solutions.
pub struct LandauLevel {
    cell: TorusCell,
    kappa: Complex64,
    field: f64,
    n: i64,
    shifts: Vec<Complex64>,
    d: Complex64,
    terms: i64,
}

impl LandauLevel {
    pub fn new(cell: &TorusCell, sigma: &Character) -> Result<Self> {
        let n = cell.n_flux;
        if n <= 0 {
            return Err(Error::Domain("lowest Landau level needs positive flux".into()));
        }
        let (w1, w2) = (cell.omega1, cell.omega2);
        let field = cell.field();
        let tau = cell.tau();
        let kappa = field * w1.conj() / (4.0 * w1);
        let alpha = sigma.values[0].arg() / (2.0 * PI);
        let log_c = sigma.values[1].ln() + field * w2.norm_sqr() / 4.0 - field * w1.conj() * w2 * w2 / (4.0 * w1);
        let beta = log_c / (2.0 * PI * Complex64::i());
        let d = (-beta - n as f64 * tau / 2.0) / n as f64;
        let shifts = (0..n).map(|j| Complex64::new((alpha + j as f64) / n as f64, 0.0)).collect();
        Ok(Self { cell: cell.clone(), kappa, field, n, shifts, d, terms: 40 })
    }

    pub fn dimension(&self) -> usize {
        self.n as usize
    }

    /// Value of the `j`-th basis section at `z`.
    pub fn evaluate(&self, j: usize, z: Complex64) -> Complex64 {
        let u = z / self.cell.omega1;
        let tau = self.cell.tau();
        let n = self.n as f64;
        let c = self.shifts[j];
        let mut g = Complex64::new(0.0, 0.0);
        for k in -self.terms..=self.terms {
            let kc = c + k as f64;
            let e = PI * Complex64::i() * n * tau * kc * kc + 2.0 * PI * Complex64::i() * n * kc * (u + self.d);
            g += e.exp();
        }
        let gauss = -self.field * z.norm_sqr() / 4.0 + self.kappa * z * z;
        g * gauss.exp()
    }

    /// Sampled basis sections on a mesh.
    pub fn sections(&self, mesh: &SurfaceMesh, factor: &AutomorphyFactor) -> Vec<EquivariantSection> {
        (0..self.dimension()).map(|j| EquivariantSection::from_fn(mesh, factor, |z| self.evaluate(j, z))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{build_mesh, Geometry};

    fn torus(n: i64, side: f64, res: usize, sigma: &[f64]) -> (SurfaceMesh, Connection) {
        let cell = TorusCell::square(side, n);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), res).unwrap();
        let f = AutomorphyFactor::torus(cell, Character::from_turns(sigma)).unwrap();
        (mesh.clone(), Connection::reference(&f, &mesh).unwrap())
    }

    #[test]
    fn flat_torus_bottom_is_constant() {
        let (mesh, a) = torus(0, 1.0, 8, &[0.0, 0.0]);
        let p = assemble_laplacian(&a, &mesh).unwrap();
        let pairs = lowest_eigenpairs(&p, 1).unwrap();
        assert!(pairs[0].value.abs() < 1e-10);
        let v = &pairs[0].section.values;
        assert!(v.iter().all(|x| (x - v[0]).norm() < 1e-8));
    }

    #[test]
    fn hermitian_and_quadratic_form() {
        let (mesh, a) = torus(2, 1.0, 8, &[0.2, 0.7]);
        let p = assemble_laplacian(&a, &mesh).unwrap();
        assert!(p.operator.hermitian_defect() < 1e-12);
        let ops = FieldOperators::new(&mesh, &EdgeComplex::new(&mesh), &a);
        let psi: Vec<Complex64> =
            (0..p.n()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        assert!((p.quadratic_form(&psi) - ops.kinetic_energy(&psi)).abs() < 1e-10 * p.quadratic_form(&psi));
    }

    #[test]
    fn landau_sections_are_equivariant() {
        let cell = TorusCell::new(Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.9), 2).unwrap();
        let sigma = Character::from_turns(&[0.3, -0.15]);
        let f = AutomorphyFactor::torus(cell.clone(), sigma.clone()).unwrap();
        let ll = LandauLevel::new(&cell, &sigma).unwrap();
        let z = Complex64::new(0.31, 0.27);
        for j in 0..2 {
            for (m1, m2) in [(1, 0), (0, 1), (1, 1), (-1, 2)] {
                let g = crate::hyperbolic::DeckElement::Translation { m1, m2, shift: cell.lattice_point(m1, m2) };
                let lhs = ll.evaluate(j, g.apply(z));
                let rhs = f.evaluate(&g, z) * ll.evaluate(j, z);
                assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1e-3), "{j} {m1} {m2}");
            }
        }
    }

    #[test]
    fn lowest_landau_level_multiplicity_two() {
        let (mesh, a) = torus(2, 2.0, 24, &[0.0, 0.0]);
        let p = assemble_laplacian(&a, &mesh).unwrap();
        let pairs = lowest_eigenpairs(&p, 3).unwrap();
        assert!((pairs[0].value - p.b).abs() < 0.05 * p.b);
        assert!((pairs[1].value - p.b).abs() < 0.05 * p.b);
        assert!(pairs[2].value > 2.0 * p.b);
    }
}
