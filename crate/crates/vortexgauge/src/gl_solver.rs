//! Ginzburg-Landau equations on a fixed bundle, their Lyapunov-Schmidt
//! reduction at the bottom of the normal branch and branch continuation.
//!
//! Unknowns are `psi` (vertex values) and an edge cochain `alpha` perturbing
//! the constant curvature connection. In weak form the equations read
//!
//! ```text
//! R1 = L_alpha psi + kappa^2 M |psi|^2 psi - mu M psi = 0
//! R2 = K1 alpha - J(psi, alpha)                       = 0
//! ```
//!
//! where `J = -1/2 dK/d alpha` and `K1` is the one-form Hodge Laplacian.
//! Discrete gauge invariance makes `J` co-closed whenever `R1 = 0`, and then
//! `R2 = 0` forces `alpha` co-closed with `d*d alpha = J`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge_fields::{Connection, EquivariantSection, FieldOperators, PerturbationClass};
use crate::hodge::{harmonic_basis, harmonic_form, project_coclosed, HarmonicBasis, HodgeOperators};
use crate::hyperbolic::SurfaceMesh;
use crate::linalg::{dot, CsrMatrix, SparseCholesky, SparseLu};
use crate::spectral::{assemble_with_complex, kernel_window, lowest_eigenpairs};

type C = Complex64;

/// Mesh, reference connection and coupling of a Ginzburg-Landau problem.
pub struct GlProblem {
    pub mesh: SurfaceMesh,
    pub hodge: HodgeOperators,
    pub reference: Connection,
    pub kappa: f64,
    k1: CsrMatrix<f64>,
    maxwell: CsrMatrix<f64>,
    m1_chol: SparseCholesky<f64>,
}

impl GlProblem {
    pub fn new(reference: &Connection, mesh: &SurfaceMesh, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        reference.check_mesh(mesh)?;
        let hodge = HodgeOperators::new(mesh)?;
        Ok(Self {
            k1: hodge.hodge_laplacian(),
            maxwell: hodge.maxwell_operator(),
            m1_chol: hodge.m1.cholesky()?,
            mesh: mesh.clone(),
            reference: reference.clone(),
            kappa,
            hodge,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_edges(&self) -> usize {
        self.hodge.n_edges()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mesh.vertex_areas
    }

    pub fn operators(&self, alpha: &[f64]) -> FieldOperators {
        let conn = self.reference.with_alpha(alpha.to_vec(), PerturbationClass::General);
        FieldOperators::new(&self.mesh, &self.hodge.complex, &conn)
    }

    /// Weak residuals `(R1, R2)` used by the solver.
    fn weak_residual(&self, psi: &[C], alpha: &[f64], mu: f64) -> (Vec<C>, Vec<f64>) {
        let ops = self.operators(alpha);
        let k2 = self.kappa * self.kappa;
        let mut r1 = ops.apply_kinetic(psi);
        for ((r, p), m) in r1.iter_mut().zip(psi).zip(self.mass()) {
            *r += *m * (k2 * p.norm_sqr() - mu) * p;
        }
        let j = ops.supercurrent_cochain(psi, self.n_edges());
        let r2 = self.k1.matvec(alpha).iter().zip(&j).map(|(a, b)| a - b).collect();
        (r1, r2)
    }

    /// Riesz representative `M1^{-1} c` of a covector.
    pub fn riesz(&self, covector: &[f64]) -> Vec<f64> {
        self.m1_chol.solve(covector)
    }
}

/// A configuration `(psi, a^n + alpha, mu)` on the metric `metric_scale * h`.
#[derive(Clone, Debug, Serialize)]
pub struct GlState {
    pub psi: EquivariantSection,
    pub alpha: Vec<f64>,
    pub mu: f64,
    pub kappa: f64,
    pub metric_scale: f64,
}

impl GlState {
    /// The normal branch point `(0, a^n, mu)`.
    pub fn normal(problem: &GlProblem, mu: f64) -> Self {
        Self {
            psi: EquivariantSection::zeros(&problem.mesh, &problem.reference.factor),
            alpha: vec![0.0; problem.n_edges()],
            mu,
            kappa: problem.kappa,
            metric_scale: 1.0,
        }
    }

    /// `(e^{i chi} psi, alpha + d chi)`.
    pub fn gauge_transform(&self, problem: &GlProblem, chi: &[f64]) -> Self {
        let dchi = problem.hodge.d0.matvec(chi);
        Self {
            psi: self.psi.gauge_transform(chi),
            alpha: self.alpha.iter().zip(&dchi).map(|(a, d)| a + d).collect(),
            ..self.clone()
        }
    }
}

/// Metric norms of the two components of the map `F`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GlResidual {
    pub section: f64,
    pub one_form: f64,
}

impl GlResidual {
    pub fn total(&self) -> f64 {
        self.section + self.one_form
    }
}

/// `F = (-Delta psi + (kappa^2 |psi|^2 - mu) psi, d*d alpha - P_coclo J)` in
/// the metric of the state.
pub fn gl_residual(problem: &GlProblem, state: &GlState) -> Result<GlResidual> {
    state.psi.ensure_compatible(&problem.reference.factor)?;
    let r = state.metric_scale;
    if !(r > 0.0) {
        return Err(Error::Domain("metric scale must be positive".into()));
    }
    let ops = problem.operators(&state.alpha);
    let psi = &state.psi.values;
    let lpsi = ops.apply_kinetic(psi);
    let k2 = state.kappa * state.kappa;
    let section = lpsi
        .iter()
        .zip(psi)
        .zip(problem.mass())
        .map(|((l, p), m)| {
            let f = l / (r * m) + (k2 * p.norm_sqr() - state.mu) * p;
            r * m * f.norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    let j = ops.supercurrent_cochain(psi, problem.n_edges());
    let pj = project_coclosed(&problem.riesz(&j), &problem.hodge)?;
    let dda = problem.riesz(&problem.maxwell.matvec(&state.alpha));
    let f2: Vec<f64> = dda.iter().zip(&pj).map(|(a, b)| a / r - b).collect();
    Ok(GlResidual { section, one_form: problem.hodge.norm(&f2) })
}

/// Energy of the state minus that of the normal branch at the same `mu`:
/// `|grad psi|^2 + |d alpha|^2 + kappa^2/2 |psi|^4 - mu |psi|^2`.
pub fn gl_energy(problem: &GlProblem, state: &GlState) -> f64 {
    let ops = problem.operators(&state.alpha);
    let psi = &state.psi.values;
    let r = state.metric_scale;
    let k2 = state.kappa * state.kappa;
    let pot: f64 = psi
        .iter()
        .zip(problem.mass())
        .map(|(p, m)| r * m * (0.5 * k2 * p.norm_sqr().powi(2) - state.mu * p.norm_sqr()))
        .sum();
    ops.kinetic_energy(psi) + dot(&state.alpha, &problem.maxwell.matvec(&state.alpha)) / r + pot
}

/// Maps a solution on the metric `r h` with parameter `mu` to the equivalent
/// solution on `h` with parameter `r mu` and `psi -> sqrt(r) psi`.
pub fn rescale_metric(state: &GlState, r: f64) -> Result<GlState> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("metric rescaling factor must be positive, got {r}")));
    }
    Ok(GlState {
        psi: state.psi.scaled(C::new(r.sqrt(), 0.0)),
        alpha: state.alpha.clone(),
        mu: state.mu * r,
        kappa: state.kappa,
        metric_scale: state.metric_scale / r,
    })
}

/// Data of the Lyapunov-Schmidt reduction at `(psi, alpha, mu) = (0, 0, b)`.
pub struct ReducedSystem {
    pub problem: GlProblem,
    /// Mass-normalized kernel section, largest entry real and positive.
    pub phi: EquivariantSection,
    pub basis: HarmonicBasis,
    /// The continuum value `n / (2g - 2)` or `2 pi n / |X|`.
    pub b: f64,
    /// The discrete bifurcation value: the eigenvalue of `phi`.
    pub lambda1: f64,
    pub gap: f64,
    /// `B_ij = <omega_j, |phi|^2 omega_i>` from the discrete energy.
    pub b_matrix: Vec<Vec<f64>>,
    /// The same matrix from Whitney forms weighted by cell averages of `|phi|^2`.
    pub b_matrix_whitney: Vec<Vec<f64>>,
    pub b_min_eigenvalue: f64,
    /// Amplitude bound `0.1 sqrt(gap)`.
    pub neighborhood: f64,
    section_block: SparseLu<C>,
    form_block: SparseCholesky<f64>,
    a_phi: Vec<C>,
    m1_omega: Vec<Vec<f64>>,
}

fn normalize_phase(values: &mut [C]) {
    let k = (0..values.len()).max_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm())).unwrap_or(0);
    if let Some(p) = values.get(k).copied() {
        let u = p.conj() / p.norm();
        values.iter_mut().for_each(|v| *v *= u);
    }
}

fn symmetric_min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let d = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(d).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn build_reduced_system(a_n: &Connection, mesh: &SurfaceMesh, kappa: f64) -> Result<ReducedSystem> {
    let problem = GlProblem::new(a_n, mesh, kappa)?;
    let sp = assemble_with_complex(a_n, mesh, &problem.hodge.complex)?;
    let window = kernel_window(sp.h);
    let n = a_n.factor.n.max(0) as usize;
    let pairs = lowest_eigenpairs(&sp, n + 2)?;
    let dim = pairs.iter().filter(|p| (p.value - sp.b).abs() <= window).count();
    if dim != 1 {
        return Err(Error::NonAdmissible(format!(
            "kernel of d'' has dimension {dim} (eigenvalues {:?}, b = {})",
            pairs.iter().map(|p| p.value).collect::<Vec<_>>(),
            sp.b
        )));
    }
    let lambda1 = pairs[0].value;
    let gap = pairs[1].value - lambda1;
    let mut phi = pairs[0].section.clone();
    let nrm = phi.norm(problem.mass());
    phi.values.iter_mut().for_each(|v| *v /= nrm);
    normalize_phase(&mut phi.values);

    let basis = harmonic_basis(&problem.hodge)?;
    let ng = basis.dimension();
    let m1_omega: Vec<Vec<f64>> = basis.forms.iter().map(|w| problem.hodge.m1.matvec(w)).collect();

    // B from the second derivative of the kinetic energy in harmonic directions
    let eps = 1e-4;
    let ne = problem.n_edges();
    let mut b_matrix = vec![vec![0.0; ng]; ng];
    for j in 0..ng {
        let shift = |sgn: f64| -> Vec<f64> {
            let a: Vec<f64> = basis.forms[j].iter().map(|x| sgn * eps * x).collect();
            problem.operators(&a).alpha_gradient(&phi.values, ne)
        };
        let (gp, gm) = (shift(1.0), shift(-1.0));
        for i in 0..ng {
            b_matrix[i][j] = 0.25 * (dot(&basis.forms[i], &gp) - dot(&basis.forms[i], &gm)) / eps;
        }
    }
    for i in 0..ng {
        for j in 0..i {
            let s = 0.5 * (b_matrix[i][j] + b_matrix[j][i]);
            b_matrix[i][j] = s;
            b_matrix[j][i] = s;
        }
    }
    let b_matrix_whitney = whitney_b_matrix(&problem, &basis, &phi.values);
    let b_min_eigenvalue = symmetric_min_eigenvalue(&b_matrix);

    // frozen linearization at s = 0, mu = lambda1, shifted slightly so the
    // kernel directions are invertible; they are projected out after solving
    let shift = 1e-6 * gap.max(1e-3);
    let mass_c: Vec<C> = problem.mass().iter().map(|&m| C::new(m, 0.0)).collect();
    let a0 = sp.operator.add_scaled(&CsrMatrix::from_diagonal(&mass_c), C::new(-lambda1, 0.0));
    let a_phi = a0.matvec(&phi.values);
    let section_block = a0.add_scaled(&CsrMatrix::from_diagonal(&mass_c), C::new(shift, 0.0)).lu()?;
    let form_shift = 1e-6 * basis.gap.min(1.0);
    let form_block = problem.k1.add_scaled(&problem.hodge.m1, form_shift).cholesky()?;
    Ok(ReducedSystem {
        b: sp.b,
        lambda1,
        gap,
        neighborhood: 0.1 * gap.sqrt(),
        problem,
        phi,
        basis,
        b_matrix,
        b_matrix_whitney,
        b_min_eigenvalue,
        section_block,
        form_block,
        a_phi,
        m1_omega,
    })
}

fn whitney_b_matrix(problem: &GlProblem, basis: &HarmonicBasis, phi: &[C]) -> Vec<Vec<f64>> {
    let ng = basis.dimension();
    let mesh = &problem.mesh;
    let cx = &problem.hodge.complex;
    let mut b = vec![vec![0.0; ng]; ng];
    for (t, c) in mesh.cells.iter().enumerate() {
        let rho2: f64 = c.iter().map(|&k| phi[mesh.node_vertex[k]].norm_sqr()).sum::<f64>() / 3.0;
        let w = crate::hodge::whitney_cell_mass(mesh.weight_chart(t));
        let ce = cx.cell_edges[t];
        for i in 0..ng {
            for j in 0..ng {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += ce[p].1 * basis.forms[i][ce[p].0] * w[p][q] * ce[q].1 * basis.forms[j][ce[q].0];
                    }
                }
                b[i][j] += rho2 * s;
            }
        }
    }
    b
}

impl ReducedSystem {
    pub fn genus(&self) -> usize {
        self.problem.mesh.genus
    }

    /// `P(psi, alpha) = (<phi, psi>, harmonic coefficients of alpha)`.
    pub fn project(&self, psi: &[C], alpha: &[f64]) -> (C, Vec<f64>) {
        let s: C = self.phi.values.iter().zip(psi).zip(self.problem.mass()).map(|((p, x), m)| p.conj() * x * *m).sum();
        let t = self.m1_omega.iter().map(|mw| dot(mw, alpha)).collect();
        (s, t)
    }

    /// Approximate solution of the bordered system
    /// `[A, -M phi; phi^* M, 0] (x, y) = (r, c)` with `A = L - lambda1 M`.
    fn solve_section(&self, r: &[C], c: C) -> (Vec<C>, C) {
        let phi = &self.phi.values;
        let mass = self.problem.mass();
        let rr: Vec<C> = r.iter().zip(&self.a_phi).map(|(x, a)| x - c * a).collect();
        let y = -phi.iter().zip(&rr).map(|(p, x)| p.conj() * x).sum::<C>();
        let rhs: Vec<C> = rr.iter().zip(phi).zip(mass).map(|((x, p), m)| x + *m * p * y).collect();
        let z = self.section_block.solve(&rhs);
        let zc: C = phi.iter().zip(&z).zip(mass).map(|((p, x), m)| p.conj() * x * *m).sum();
        (z.iter().zip(phi).map(|(x, p)| x + (c - zc) * p).collect(), y)
    }

    /// Approximate solution of `[K1, -M1 W; W^T M1, 0] (x, y) = (r, c)`.
    fn solve_form(&self, r: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let y: Vec<f64> = self.basis.forms.iter().map(|w| -dot(w, r)).collect();
        let mut rhs = r.to_vec();
        for (k, mw) in self.m1_omega.iter().enumerate() {
            rhs.iter_mut().zip(mw).for_each(|(a, b)| *a += y[k] * b);
        }
        let mut x = self.form_block.solve(&rhs);
        for (k, (w, mw)) in self.basis.forms.iter().zip(&self.m1_omega).enumerate() {
            let coef = c[k] - dot(mw, &x);
            x.iter_mut().zip(w).for_each(|(a, b)| *a += coef * b);
        }
        (x, y)
    }

    /// `P_perp (psi, alpha)`.
    pub fn project_perp(&self, psi: &[C], alpha: &[f64]) -> (Vec<C>, Vec<f64>) {
        let (s, t) = self.project(psi, alpha);
        let p = psi.iter().zip(&self.phi.values).map(|(x, f)| x - s * f).collect();
        let h = harmonic_form(&t, &self.basis);
        (p, alpha.iter().zip(&h).map(|(a, b)| a - b).collect())
    }
}

/// Solution `w = (psi_perp, alpha_perp)` of `P_perp F(v + w, mu) = 0`
/// together with the reduced map `P F`.
#[derive(Clone, Debug)]
pub struct Corrector {
    pub psi: Vec<C>,
    pub alpha: Vec<f64>,
    pub psi_perp: Vec<C>,
    pub alpha_perp: Vec<f64>,
    /// `<phi, F1>`.
    pub lambda: C,
    /// Minus the harmonic coefficients of the supercurrent.
    pub eta: Vec<f64>,
    pub iterations: usize,
}

const CHORD_MAX_ITER: usize = 200;

pub fn solve_corrector(red: &ReducedSystem, s: f64, t: &[f64], mu: f64) -> Result<Corrector> {
    corrector_from(red, s, t, mu, None)
}

fn corrector_from(red: &ReducedSystem, s: f64, t: &[f64], mu: f64, warm: Option<&Corrector>) -> Result<Corrector> {
    if s.abs() > red.neighborhood {
        return Err(Error::StepSize {
            s,
            msg: format!("amplitude beyond the neighborhood bound {:.4}", red.neighborhood),
        });
    }
    if t.len() != red.basis.dimension() {
        return Err(Error::Domain(format!("expected {} harmonic coefficients", red.basis.dimension())));
    }
    let pb = &red.problem;
    let (nv, ne, ng) = (pb.n_vertices(), pb.n_edges(), red.basis.dimension());
    let (mut psi, mut alpha, mut lambda, mut eta) = match warm {
        Some(w) => (w.psi.clone(), w.alpha.clone(), w.lambda, w.eta.clone()),
        None => (
            red.phi.values.iter().map(|p| p * s).collect::<Vec<C>>(),
            harmonic_form(t, &red.basis),
            C::new(0.0, 0.0),
            vec![0.0; ng],
        ),
    };
    let scale = s.abs().max(1e-300);
    let mut prev = f64::INFINITY;
    let mut stalled = 0;
    for it in 0..CHORD_MAX_ITER {
        let (mut r1, mut r2) = pb.weak_residual(&psi, &alpha, mu);
        for ((r, m), p) in r1.iter_mut().zip(pb.mass()).zip(&red.phi.values) {
            *r -= *m * p * lambda;
        }
        for (k, mw) in red.m1_omega.iter().enumerate() {
            r2.iter_mut().zip(mw).for_each(|(r, x)| *r -= eta[k] * x);
        }
        let (proj_s, proj_t) = red.project(&psi, &alpha);
        let c4: Vec<f64> = proj_t.iter().zip(t).map(|(a, b)| a - b).collect();
        let (dpsi, dlambda) = red.solve_section(&r1, proj_s - s);
        let (dalpha, deta) = red.solve_form(&r2, &c4);
        for i in 0..nv {
            psi[i] -= dpsi[i];
        }
        lambda -= dlambda;
        for e in 0..ne {
            alpha[e] -= dalpha[e];
        }
        for k in 0..ng {
            eta[k] -= deta[k];
        }
        let step = (dpsi.iter().map(|x| x.norm_sqr()).sum::<f64>()
            + dlambda.norm_sqr()
            + dalpha.iter().map(|x| x * x).sum::<f64>()
            + deta.iter().map(|x| x * x).sum::<f64>())
        .sqrt();
        if !step.is_finite() || (it > 3 && step > 2.0 * prev && step > 1e-10 * scale) {
            return Err(Error::StepSize { s, msg: format!("corrector diverged (step {step:.3e})") });
        }
        if step <= 1e-14 * scale || (step <= 1e-12 * scale && step >= 0.5 * prev) {
            let (psi_perp, alpha_perp) = red.project_perp(&psi, &alpha);
            return Ok(Corrector { psi, alpha, psi_perp, alpha_perp, lambda, eta, iterations: it + 1 });
        }
        stalled = if step >= prev { stalled + 1 } else { 0 };
        if stalled > 5 {
            return Err(Error::StepSize { s, msg: format!("corrector stagnated at step {step:.3e}") });
        }
        prev = step;
    }
    Err(Error::StepSize { s, msg: "corrector did not converge".into() })
}

/// Reduced equations scaled to be order one: `(Re lambda / s, eta / s^2)`.
fn reduced_map(red: &ReducedSystem, s: f64, x: &[f64], warm: Option<&Corrector>) -> Result<(Vec<f64>, Corrector)> {
    let c = corrector_from(red, s, &x[1..], x[0], warm)?;
    let mut g = vec![c.lambda.re / s];
    g.extend(c.eta.iter().map(|e| e / (s * s)));
    Ok((g, c))
}

/// Singular values below this fraction of the largest mark neutral directions
/// of the reduced Jacobian.
const NEUTRAL_RCOND: f64 = 1e-6;

/// Minimum-norm solution of `J dx = g`, dropping numerically neutral
/// directions. On the torus magnetic translations make the flat twists an
/// exact family of solutions; the step then leaves `t` where the guess put it.
fn solve_dense(j: &[Vec<f64>], g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let m = DMatrix::from_fn(n, n, |a, b| j[a][b]);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || !smax.is_finite() {
        return None;
    }
    svd.solve(&DVector::from_column_slice(g), NEUTRAL_RCOND * smax).ok().map(|v| v.iter().cloned().collect())
}

/// Solution `(mu, t, corrector)` of the reduced equations at amplitude `s`.
fn solve_reduced(red: &ReducedSystem, s: f64, guess: &[f64]) -> Result<(Vec<f64>, Corrector)> {
    let n = guess.len();
    let mut x = guess.to_vec();
    let (mut g, mut c) = reduced_map(red, s, &x, None)?;
    let size = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut jac: Option<Vec<Vec<f64>>> = None;
    for _ in 0..40 {
        let gn = size(&g);
        if gn * s < 1e-13 {
            return Ok((x, c));
        }
        if jac.is_none() {
            let mut jm = vec![vec![0.0; n]; n];
            for k in 0..n {
                let h = 1e-6 * (1.0 + x[k].abs());
                let mut xp = x.clone();
                xp[k] += h;
                let (gp, _) = reduced_map(red, s, &xp, Some(&c))?;
                let mut xm = x.clone();
                xm[k] -= h;
                let (gm, _) = reduced_map(red, s, &xm, Some(&c))?;
                for i in 0..n {
                    jm[i][k] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            jac = Some(jm);
        }
        let dx = solve_dense(jac.as_ref().unwrap(), &g)
            .ok_or_else(|| Error::Bifurcation(format!("singular reduced Jacobian at s = {s}")))?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - damping * d).collect();
            if let Ok((gt, ct)) = reduced_map(red, s, &xt, Some(&c)) {
                if size(&gt) < gn {
                    x = xt;
                    g = gt;
                    c = ct;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            if gn * s < 1e-11 {
                return Ok((x, c));
            }
            return Err(Error::Bifurcation(format!("reduced Newton stagnated at s = {s} (|G| = {gn:.3e})")));
        }
        if damping < 1.0 {
            jac = None;
        }
    }
    Err(Error::Bifurcation(format!("reduced Newton did not converge at s = {s}")))
}

/// `(mu(s), t(s))` solving the bifurcation equations `P F = 0`.
pub fn solve_bifurcation_equation(red: &ReducedSystem, s: f64) -> Result<(f64, Vec<f64>)> {
    let ng = red.basis.dimension();
    if s == 0.0 {
        return Ok((red.lambda1, vec![0.0; ng]));
    }
    let mut guess = vec![red.lambda1 + leading_mu_coefficient(red) * s * s];
    guess.extend(std::iter::repeat_n(0.0, ng));
    let (x, _) = solve_reduced(red, s, &guess)?;
    Ok((x[0], x[1..].to_vec()))
}

/// `kappa^2 sum M |phi|^4`, the quartic part of `(mu - lambda1) / s^2`.
pub fn leading_mu_coefficient(red: &ReducedSystem) -> f64 {
    let k2 = red.problem.kappa * red.problem.kappa;
    k2 * red.phi.values.iter().zip(red.problem.mass()).map(|(p, m)| m * p.norm_sqr().powi(2)).sum::<f64>()
}

/// One solution on the bifurcating branch.
#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub s: f64,
    pub state: GlState,
    pub t: Vec<f64>,
    pub residual: GlResidual,
    /// Energy relative to the normal branch at the same `mu`.
    pub energy: f64,
    /// `|psi - s phi|` and `|alpha|` in the metric norms.
    pub psi_perp_norm: f64,
    pub alpha_norm: f64,
    /// `<phi, psi>` as computed from the state.
    pub projection: C,
    /// `|d* J|` of the supercurrent.
    pub current_codifferential: f64,
}

pub fn continue_branch(red: &ReducedSystem, s_values: &[f64]) -> Result<Vec<BranchPoint>> {
    let ng = red.basis.dimension();
    let pb = &red.problem;
    let mut out: Vec<BranchPoint> = Vec::with_capacity(s_values.len());
    let mut coef = leading_mu_coefficient(red);
    let mut t_coef = vec![0.0; ng];
    for &s in s_values {
        if s <= 0.0 {
            return Err(Error::StepSize { s, msg: "branch amplitudes must be positive".into() });
        }
        let mut guess = vec![red.lambda1 + coef * s * s];
        guess.extend(t_coef.iter().map(|c| c * s * s));
        let (x, c) = solve_reduced(red, s, &guess)?;
        coef = (x[0] - red.lambda1) / (s * s);
        t_coef = x[1..].iter().map(|v| v / (s * s)).collect();
        let state = GlState {
            psi: EquivariantSection::new(c.psi.clone(), pb.reference.factor.clone()),
            alpha: c.alpha.clone(),
            mu: x[0],
            kappa: pb.kappa,
            metric_scale: 1.0,
        };
        let residual = gl_residual(pb, &state)?;
        let j = pb.operators(&state.alpha).supercurrent_cochain(&state.psi.values, pb.n_edges());
        let (projection, _) = red.project(&c.psi, &c.alpha);
        let psi_perp_norm = c.psi_perp.iter().zip(pb.mass()).map(|(p, m)| m * p.norm_sqr()).sum::<f64>().sqrt();
        out.push(BranchPoint {
            s,
            energy: gl_energy(pb, &state),
            t: x[1..].to_vec(),
            residual,
            psi_perp_norm,
            alpha_norm: pb.hodge.norm(&state.alpha),
            projection,
            current_codifferential: pb.hodge.codifferential_norm(&pb.riesz(&j)),
            state,
        });
    }
    Ok(out)
}

/// Power laws along a branch.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    /// Least squares slope of `log(mu - lambda1)` against `log s`.
    pub mu_exponent: f64,
    /// The same slope with the continuum `b` in place of `lambda1`.
    pub mu_exponent_continuum: f64,
    /// `(max - min) / min` of `|alpha| / s^2` and `|psi - s phi| / s^3`.
    pub alpha_ratio_drift: f64,
    pub psi_ratio_drift: f64,
    pub max_t_over_s2: f64,
    pub max_residual: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn drift(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / min
}

pub fn scaling_report(red: &ReducedSystem, points: &[BranchPoint]) -> ScalingReport {
    let ls: Vec<f64> = points.iter().map(|p| p.s.ln()).collect();
    let lm: Vec<f64> = points.iter().map(|p| (p.state.mu - red.lambda1).abs().ln()).collect();
    let lc: Vec<f64> = points.iter().map(|p| (p.state.mu - red.b).abs().ln()).collect();
    ScalingReport {
        mu_exponent: slope(&ls, &lm),
        mu_exponent_continuum: slope(&ls, &lc),
        alpha_ratio_drift: drift(&points.iter().map(|p| p.alpha_norm / p.s.powi(2)).collect::<Vec<_>>()),
        psi_ratio_drift: drift(&points.iter().map(|p| p.psi_perp_norm / p.s.powi(3)).collect::<Vec<_>>()),
        max_t_over_s2: points
            .iter()
            .map(|p| p.t.iter().map(|x| x * x).sum::<f64>().sqrt() / p.s.powi(2))
            .fold(0.0, f64::max),
        max_residual: points.iter().map(|p| p.residual.total()).fold(0.0, f64::max),
    }
}

/// Writes `s, mu, t_1.., residual, energy` rows.
pub fn write_branch_csv(points: &[BranchPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let ng = points.first().map_or(0, |p| p.t.len());
    let mut header = vec!["s".to_string(), "mu".to_string()];
    header.extend((1..=ng).map(|i| format!("t{i}")));
    header.extend(["residual".to_string(), "energy".to_string()]);
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![format!("{:.12e}", p.s), format!("{:.12e}", p.state.mu)];
        row.extend(p.t.iter().map(|t| format!("{t:.12e}")));
        row.push(format!("{:.3e}", p.residual.total()));
        row.push(format!("{:.12e}", p.energy));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphy::{AutomorphyFactor, Character};
    use crate::hyperbolic::{build_mesh, Geometry, TorusCell};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn torus_reduced(res: usize) -> ReducedSystem {
        let cell = TorusCell::square(2.0, 1);
        let mesh = build_mesh(&Geometry::Torus(cell.clone()), res).unwrap();
        let f = AutomorphyFactor::torus(cell, Character::from_turns(&[0.15, 0.4])).unwrap();
        let a = Connection::reference(&f, &mesh).unwrap();
        build_reduced_system(&a, &mesh, 1.0).unwrap()
    }

    #[test]
    fn normal_branch_has_zero_residual() {
        let red = torus_reduced(12);
        let st = GlState::normal(&red.problem, 0.7);
        let r = gl_residual(&red.problem, &st).unwrap();
        assert_eq!(r.total(), 0.0);
        let st2 = rescale_metric(&st, 2.0).unwrap();
        assert_eq!(st2.mu, 1.4);
        assert_eq!(gl_residual(&red.problem, &st2).unwrap().total(), 0.0);
        assert!(rescale_metric(&st, 0.0).is_err());
    }

    #[test]
    fn b_matrix_is_positive_and_routes_agree() {
        let red = torus_reduced(16);
        assert!(red.b_min_eigenvalue > 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((red.b_matrix[i][j] - red.b_matrix_whitney[i][j]).abs() < 0.05 * red.b_matrix[0][0]);
            }
        }
    }

    #[test]
    fn zero_amplitude_corrector_vanishes() {
        let red = torus_reduced(12);
        let c = solve_corrector(&red, 0.0, &[0.0, 0.0], red.lambda1).unwrap();
        assert!(c.psi.iter().all(|x| x.norm() == 0.0));
        assert!(c.alpha.iter().all(|x| *x == 0.0));
        assert_eq!(solve_bifurcation_equation(&red, 0.0).unwrap().0, red.lambda1);
    }

    #[test]
    fn branch_point_solves_the_equations() {
        let red = torus_reduced(16);
        let pts = continue_branch(&red, &[0.05, 0.1]).unwrap();
        for p in &pts {
            assert!(p.residual.total() < 1e-8, "{:?}", p.residual);
            assert!((p.projection - p.s).norm() < 1e-10);
            assert!(p.current_codifferential < 1e-8);
        }
        // gauge covariance of the residual
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chi: Vec<f64> = (0..red.problem.n_vertices()).map(|_| rng.random::<f64>() * 6.0).collect();
        let g = pts[0].state.gauge_transform(&red.problem, &chi);
        let r0 = gl_residual(&red.problem, &pts[0].state).unwrap();
        let r1 = gl_residual(&red.problem, &g).unwrap();
        assert!((r0.total() - r1.total()).abs() < 1e-9);
        // the rescaled state solves the equations on the rescaled metric
        let st = rescale_metric(&pts[0].state, 1.1).unwrap();
        assert!(gl_residual(&red.problem, &st).unwrap().total() < 1e-8);
    }

    #[test]
    fn torus_branch_does_not_depend_on_the_sweep() {
        let red = torus_reduced(16);
        let a = continue_branch(&red, &[0.0125, 0.1]).unwrap();
        let b = continue_branch(&red, &[0.0125, 0.025, 0.05, 0.1]).unwrap();
        let (pa, pb) = (a.last().unwrap(), b.last().unwrap());
        assert!((pa.alpha_norm - pb.alpha_norm).abs() < 1e-8 * pa.alpha_norm.max(1e-12));
        assert!((pa.state.mu - pb.state.mu).abs() < 1e-12);
        assert!(pa.t.iter().chain(&pb.t).all(|t| t.abs() < 1e-6));
    }

    #[test]
    fn beyond_neighborhood_is_a_step_size_error() {
        let red = torus_reduced(12);
        let s = 2.0 * red.neighborhood;
        assert!(matches!(solve_corrector(&red, s, &[0.0, 0.0], red.lambda1), Err(Error::StepSize { .. })));
    }
}
