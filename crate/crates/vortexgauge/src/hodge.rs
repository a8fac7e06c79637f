//! Discrete Hodge theory for real one-forms stored as edge cochains.
//!
//! Inner products: lumped vertex areas on zero-forms, Whitney elements on
//! one-forms (conformally invariant, so computed in the chart) and inverse cell
//! areas on two-forms. Since `d1 d0 = 0` exactly, the discrete harmonic space
//! has dimension `2g` exactly.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge_fields::EdgeComplex;
use crate::hyperbolic::SurfaceMesh;
use crate::linalg::{
    dot, principal_cosines, shift_invert_eigen, CsrMatrix, EigenOptions, SparseCholesky, TripletBuilder,
};

/// Exterior derivatives and Hodge stars of a mesh.
pub struct HodgeOperators {
    pub complex: EdgeComplex,
    pub d0: CsrMatrix<f64>,
    pub d1: CsrMatrix<f64>,
    pub m0: Vec<f64>,
    pub m1: CsrMatrix<f64>,
    /// Inverse metric cell areas.
    pub s2: Vec<f64>,
    genus: usize,
    l0: SparseCholesky<f64>,
}

/// Whitney mass matrix of one cell; entry `(i, j)` pairs side `i -> i + 1`
/// with side `j -> j + 1`.
pub fn whitney_cell_mass(z: [Complex64; 3]) -> [[f64; 3]; 3] {
    let area = 0.5 * ((z[1] - z[0]).conj() * (z[2] - z[0])).im;
    // grad of barycentric coordinate a is the rotated opposite side / 2A
    let grad: [[f64; 2]; 3] = std::array::from_fn(|a| {
        let e = z[(a + 2) % 3] - z[(a + 1) % 3];
        [-e.im / (2.0 * area), e.re / (2.0 * area)]
    });
    let g = |a: usize, b: usize| grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1];
    let ll = |a: usize, b: usize| if a == b { area / 6.0 } else { area / 12.0 };
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (a, b) = (i, (i + 1) % 3);
            let (c, d) = (j, (j + 1) % 3);
            ll(a, c) * g(b, d) - ll(a, d) * g(b, c) - ll(b, c) * g(a, d) + ll(b, d) * g(a, c)
        })
    })
}

impl HodgeOperators {
    pub fn new(mesh: &SurfaceMesh) -> Result<Self> {
        let cx = EdgeComplex::new(mesh);
        let ne = cx.n_edges();
        let mut b = TripletBuilder::new(ne, ne);
        for t in 0..mesh.n_cells() {
            let w = whitney_cell_mass(mesh.weight_chart(t));
            let ce = cx.cell_edges[t];
            for i in 0..3 {
                for j in 0..3 {
                    b.push(ce[i].0, ce[j].0, ce[i].1 * ce[j].1 * w[i][j]);
                }
            }
        }
        let m1 = b.build();
        let d0 = cx.d0();
        let d1 = cx.d1();
        let m0 = mesh.vertex_areas.clone();
        let s2 = mesh.cell_areas.iter().map(|a| 1.0 / a).collect();
        // L0 = d0^T M1 d0 with the first vertex pinned
        let l0 = d0.transpose().matmul(&m1.matmul(&d0));
        let mut pb = TripletBuilder::new(l0.rows, l0.cols);
        for (i, j, v) in l0.triplets() {
            if i != 0 && j != 0 {
                pb.push(i, j, v);
            }
        }
        pb.push(0, 0, 1.0);
        let l0 = pb.build().cholesky()?;
        Ok(Self { complex: cx, d0, d1, m0, m1, s2, genus: mesh.genus, l0 })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn n_edges(&self) -> usize {
        self.complex.n_edges()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.m1.matvec(b))
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Metric norm of `d alpha`.
    pub fn d_norm(&self, a: &[f64]) -> f64 {
        self.d1.matvec(a).iter().zip(&self.s2).map(|(f, s)| f * f * s).sum::<f64>().sqrt()
    }

    /// `d* alpha = M0^{-1} d0^T M1 alpha` as a vertex function.
    pub fn codifferential(&self, a: &[f64]) -> Vec<f64> {
        let r = self.d0.transpose().matvec(&self.m1.matvec(a));
        r.iter().zip(&self.m0).map(|(x, m)| x / m).collect()
    }

    pub fn codifferential_norm(&self, a: &[f64]) -> f64 {
        self.codifferential(a).iter().zip(&self.m0).map(|(f, m)| f * f * m).sum::<f64>().sqrt()
    }

    /// Potential `f` (zero at vertex 0) of the exact part of `alpha`.
    pub fn exact_potential(&self, a: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.d0.transpose().matvec(&self.m1.matvec(a));
        rhs[0] = 0.0;
        let f = self.l0.solve(&rhs);
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("Poisson solve produced non-finite values".into()));
        }
        Ok(f)
    }

    /// The one-form Hodge Laplacian `(M1 d0) M0^{-1} (M1 d0)^T + d1^T S2 d1`.
    pub fn hodge_laplacian(&self) -> CsrMatrix<f64> {
        let md0 = self.m1.matmul(&self.d0);
        let inv_m0: Vec<f64> = self.m0.iter().map(|m| 1.0 / m).collect();
        let a = md0.matmul(&CsrMatrix::from_diagonal(&inv_m0)).matmul(&md0.transpose());
        let b = self.d1.transpose().matmul(&CsrMatrix::from_diagonal(&self.s2)).matmul(&self.d1);
        a.add_scaled(&b, 1.0)
    }

    /// The Maxwell operator `d^T S2 d` on edge cochains.
    pub fn maxwell_operator(&self) -> CsrMatrix<f64> {
        self.d1.transpose().matmul(&CsrMatrix::from_diagonal(&self.s2)).matmul(&self.d1)
    }
}

/// A metric-orthonormal basis of discrete harmonic one-forms.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicBasis {
    pub forms: Vec<Vec<f64>>,
    /// Max entry of `G - I` for the Gram matrix `G`.
    pub gram_residual: f64,
    /// Hodge Laplacian eigenvalues of the basis and the first one above it.
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
}

impl HarmonicBasis {
    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn gram(&self, ops: &HodgeOperators) -> Vec<Vec<f64>> {
        self.forms.iter().map(|a| self.forms.iter().map(|b| ops.inner(a, b)).collect()).collect()
    }

    /// Field JSON export with a Gram-matrix block.
    pub fn write_json(&self, ops: &HodgeOperators, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Out<'a> {
            kind: &'static str,
            dimension: usize,
            forms: &'a [Vec<f64>],
            gram: Vec<Vec<f64>>,
            gram_residual: f64,
        }
        let out = Out {
            kind: "harmonic_basis",
            dimension: self.dimension(),
            forms: &self.forms,
            gram: self.gram(ops),
            gram_residual: self.gram_residual,
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(serde_json::to_string_pretty(&out)?.as_bytes())?;
        Ok(())
    }
}

fn gram_residual(ops: &HodgeOperators, forms: &[Vec<f64>]) -> f64 {
    let mut r: f64 = 0.0;
    for (i, a) in forms.iter().enumerate() {
        for (j, b) in forms.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            r = r.max((ops.inner(a, b) - target).abs());
        }
    }
    r
}

/// Eigenvalues of the Hodge Laplacian below this count as harmonic.
const HARMONIC_THRESHOLD: f64 = 1e-7;

/// Harmonic one-forms as the near-null eigenvectors of the Hodge Laplacian.
pub fn harmonic_basis(ops: &HodgeOperators) -> Result<HarmonicBasis> {
    let k = 2 * ops.genus + 2;
    let opts = EigenOptions { shift: -1e-2, ..Default::default() };
    let r = shift_invert_eigen(&ops.hodge_laplacian(), &ops.m1, k, &opts)?;
    let count = r.values.iter().filter(|v| v.abs() < HARMONIC_THRESHOLD).count();
    let gap = r.values.get(count).copied().unwrap_or(f64::INFINITY);
    if gap < 1e3 * HARMONIC_THRESHOLD {
        return Err(Error::Resolution(format!("no spectral gap above the harmonic modes (next eigenvalue {gap:.3e})")));
    }
    let forms: Vec<Vec<f64>> = r.vectors.into_iter().take(count).collect();
    Ok(HarmonicBasis { gram_residual: gram_residual(ops, &forms), eigenvalues: r.values[..count].to_vec(), gap, forms })
}

/// Closed cochains spanning cohomology, one per edge outside a spanning
/// tree and a dual spanning cotree.
pub fn cohomology_generators(ops: &HodgeOperators) -> Vec<Vec<f64>> {
    let cx = &ops.complex;
    let ne = cx.n_edges();
    let nc = cx.n_cells();
    let mut in_tree = vec![false; ne];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cx.n_vertices];
    for (e, &[a, b]) in cx.edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut seen = vec![false; cx.n_vertices];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }
    let mut edge_cells: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for (t, ce) in cx.cell_edges.iter().enumerate() {
        for &(e, _) in ce {
            edge_cells[e].push(t);
        }
    }
    // dual tree: BFS over cells through non-tree edges
    let mut parent_edge = vec![usize::MAX; nc];
    let mut in_cotree = vec![false; ne];
    let mut order = Vec::with_capacity(nc);
    let mut seen = vec![false; nc];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(t) = queue.pop_front() {
        order.push(t);
        for &(e, _) in &cx.cell_edges[t] {
            if in_tree[e] {
                continue;
            }
            for &u in &edge_cells[e] {
                if !seen[u] {
                    seen[u] = true;
                    in_cotree[e] = true;
                    parent_edge[u] = e;
                    queue.push_back(u);
                }
            }
        }
    }
    let free: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
    free.iter()
        .map(|&g| {
            let mut h = vec![0.0; ne];
            h[g] = 1.0;
            // leaves first: each cell fixes its parent edge so that d h = 0 there
            for &t in order.iter().rev() {
                let pe = parent_edge[t];
                if pe == usize::MAX {
                    continue;
                }
                let mut sum = 0.0;
                let mut sp = 0.0;
                for &(e, s) in &cx.cell_edges[t] {
                    if e == pe {
                        sp = s;
                    } else {
                        sum += s * h[e];
                    }
                }
                h[pe] = -sum / sp;
            }
            h
        })
        .collect()
}

/// Harmonic basis by a second route: cohomology generators made co-closed
/// and orthonormalized.
pub fn harmonic_basis_from_cohomology(ops: &HodgeOperators) -> Result<HarmonicBasis> {
    let mut forms: Vec<Vec<f64>> = Vec::new();
    for h in cohomology_generators(ops) {
        let mut v = project_coclosed(&h, ops)?;
        for _ in 0..2 {
            for q in &forms {
                let c = ops.inner(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = ops.norm(&v);
        if n < 1e-12 {
            return Err(Error::InconsistentDiscretization("dependent cohomology generator".into()));
        }
        forms.push(v.into_iter().map(|x| x / n).collect());
    }
    Ok(HarmonicBasis { gram_residual: gram_residual(ops, &forms), eigenvalues: Vec::new(), gap: f64::NAN, forms })
}

/// Metric inner products of `alpha` with each basis form. `alpha` is an
/// edge cochain.
pub fn project_harmonic(alpha: &[f64], basis: &HarmonicBasis, ops: &HodgeOperators) -> Vec<f64> {
    let ma = ops.m1.matvec(alpha);
    basis.forms.iter().map(|w| dot(w, &ma)).collect()
}

/// Harmonic coefficients of a covector, i.e. a derivative of an energy with
/// respect to edge values, such as the supercurrent cochain.
pub fn project_harmonic_dual(covector: &[f64], basis: &HarmonicBasis) -> Vec<f64> {
    basis.forms.iter().map(|w| dot(w, covector)).collect()
}

/// `sum t_i omega_i`.
pub fn harmonic_form(t: &[f64], basis: &HarmonicBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.forms.first().map_or(0, Vec::len)];
    for (c, w) in t.iter().zip(&basis.forms) {
        out.iter_mut().zip(w).for_each(|(o, x)| *o += c * x);
    }
    out
}

/// Removes the exact part of `alpha`.
pub fn project_coclosed(alpha: &[f64], ops: &HodgeOperators) -> Result<Vec<f64>> {
    let f = ops.exact_potential(alpha)?;
    let df = ops.d0.matvec(&f);
    Ok(alpha.iter().zip(&df).map(|(a, d)| a - d).collect())
}

/// Exact, co-exact and harmonic parts of a one-form.
#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub exact: Vec<f64>,
    pub coexact: Vec<f64>,
    pub harmonic: Vec<f64>,
    pub potential: Vec<f64>,
}

impl HodgeDecomposition {
    /// Largest normalized pairwise inner product of the three parts.
    pub fn orthogonality_residual(&self, ops: &HodgeOperators) -> f64 {
        let parts = [&self.exact, &self.coexact, &self.harmonic];
        let mut r: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let n = ops.norm(parts[i]) * ops.norm(parts[j]);
                if n > 0.0 {
                    r = r.max(ops.inner(parts[i], parts[j]).abs() / n);
                }
            }
        }
        r
    }

    pub fn reconstruction_residual(&self, alpha: &[f64], ops: &HodgeOperators) -> f64 {
        let diff: Vec<f64> =
            (0..alpha.len()).map(|e| alpha[e] - self.exact[e] - self.coexact[e] - self.harmonic[e]).collect();
        ops.norm(&diff) / ops.norm(alpha).max(f64::MIN_POSITIVE)
    }
}

pub fn hodge_decomposition(alpha: &[f64], basis: &HarmonicBasis, ops: &HodgeOperators) -> Result<HodgeDecomposition> {
    let potential = ops.exact_potential(alpha)?;
    let exact = ops.d0.matvec(&potential);
    let harmonic = harmonic_form(&project_harmonic(alpha, basis, ops), basis);
    let coexact = (0..alpha.len()).map(|e| alpha[e] - exact[e] - harmonic[e]).collect();
    Ok(HodgeDecomposition { exact, coexact, harmonic, potential })
}

/// Comparison of the co-closed Maxwell kernel with the harmonic space.
#[derive(Clone, Debug, Serialize)]
pub struct MaxwellReport {
    pub dimension: usize,
    pub expected_dimension: usize,
    /// Sines of the principal angles between the two subspaces.
    pub angles: Vec<f64>,
    pub max_closed_residual: f64,
    pub max_coclosed_residual: f64,
}

impl MaxwellReport {
    pub fn max_angle(&self) -> f64 {
        self.angles.iter().cloned().fold(0.0, f64::max)
    }
}

/// Builds the kernel of `d* d` on co-closed forms from cohomology generators
/// and compares it with the eigen-route harmonic basis.
pub fn maxwell_kernel_check(ops: &HodgeOperators) -> Result<MaxwellReport> {
    let eig = harmonic_basis(ops)?;
    let coh = harmonic_basis_from_cohomology(ops)?;
    let mut closed: f64 = 0.0;
    let mut coclosed: f64 = 0.0;
    for w in &coh.forms {
        closed = closed.max(ops.d_norm(w));
        coclosed = coclosed.max(ops.codifferential_norm(w));
    }
    let angles = if eig.dimension() == coh.dimension() {
        principal_cosines(&ops.m1, &eig.forms, &coh.forms).iter().map(|c| (1.0 - c.min(1.0).powi(2)).sqrt()).collect()
    } else {
        vec![1.0]
    };
    Ok(MaxwellReport {
        dimension: coh.dimension(),
        expected_dimension: 2 * ops.genus,
        angles,
        max_closed_residual: closed,
        max_coclosed_residual: coclosed,
    })
}
