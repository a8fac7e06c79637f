//! Sparse matrices, direct solvers and a shift-invert eigensolver.
//!
//! Matrices are assembled as CSR through [`TripletBuilder`]; factorizations
//! are delegated to `faer`, small dense Rayleigh-Ritz problems to `nalgebra`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Field of matrix entries: `f64` or `Complex64`.
pub trait Scalar: nalgebra::ComplexField<RealField = f64> + Copy + Default {
    type LuFactor;
    type LltFactor;

    fn factor_lu(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Self::LuFactor>;
    fn solve_lu(f: &Self::LuFactor, b: &mut [Self]);
    fn factor_llt(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Self::LltFactor>;
    fn solve_llt(f: &Self::LltFactor, b: &mut [Self]);
    fn random(rng: &mut ChaCha8Rng) -> Self;
}

macro_rules! faer_scalar {
    ($t:ty, $rand:expr) => {
        impl Scalar for $t {
            type LuFactor = Lu<usize, $t>;
            type LltFactor = Llt<usize, $t>;

            fn factor_lu(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Self::LuFactor> {
                let t: Vec<_> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
                let a = SparseColMat::<usize, $t>::try_new_from_triplets(n, n, &t)
                    .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
                a.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))
            }

            fn solve_lu(f: &Self::LuFactor, b: &mut [Self]) {
                let mut m = Mat::<$t>::from_fn(b.len(), 1, |i, _| b[i]);
                f.solve_in_place(m.as_mut());
                for (i, v) in b.iter_mut().enumerate() {
                    *v = m[(i, 0)];
                }
            }

            fn factor_llt(n: usize, triplets: &[(usize, usize, Self)]) -> Result<Self::LltFactor> {
                let t: Vec<_> = triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
                let a = SparseColMat::<usize, $t>::try_new_from_triplets(n, n, &t)
                    .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
                a.sp_cholesky(Side::Lower).map_err(|e| Error::Solver(format!("sparse Cholesky failed: {e:?}")))
            }

            fn solve_llt(f: &Self::LltFactor, b: &mut [Self]) {
                let mut m = Mat::<$t>::from_fn(b.len(), 1, |i, _| b[i]);
                f.solve_in_place(m.as_mut());
                for (i, v) in b.iter_mut().enumerate() {
                    *v = m[(i, 0)];
                }
            }

            fn random(rng: &mut ChaCha8Rng) -> Self {
                $rand(rng)
            }
        }
    };
}

faer_scalar!(f64, |rng: &mut ChaCha8Rng| rng.random::<f64>() - 0.5);
faer_scalar!(Complex64, |rng: &mut ChaCha8Rng| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));

/// Collects `(row, col, value)` entries; duplicates are summed on build.
#[derive(Clone, Debug)]
pub struct TripletBuilder<T> {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                let k = values.len() - 1;
                values[k] += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { rows: self.rows, cols: self.cols, row_ptr, col_idx, values }
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_diagonal(d: &[T]) -> Self {
        let mut b = TripletBuilder::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.col_idx[k], self.values[k]));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.values[k] * x[self.col_idx[k]];
                }
                s
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut b = TripletBuilder::new(self.cols, self.rows);
        for (i, j, v) in self.triplets() {
            b.push(j, i, v.conjugate());
        }
        b.build()
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::new(self.cols, self.rows);
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut b = TripletBuilder::new(self.rows, other.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.col_idx[k], self.values[k]);
                for l in other.row_ptr[j]..other.row_ptr[j + 1] {
                    b.push(i, other.col_idx[l], v * other.values[l]);
                }
            }
        }
        b.build()
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: T) -> Self {
        let mut b = TripletBuilder::new(self.rows, self.cols);
        b.entries = self.triplets();
        for (i, j, v) in other.triplets() {
            b.push(i, j, alpha * v);
        }
        b.build()
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.add_scaled(&adj, -T::one()).values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.matvec(x))
    }

    pub fn lu(&self) -> Result<SparseLu<T>> {
        assert_eq!(self.rows, self.cols);
        Ok(SparseLu { n: self.rows, factor: T::factor_lu(self.rows, &self.triplets())? })
    }

    pub fn cholesky(&self) -> Result<SparseCholesky<T>> {
        assert_eq!(self.rows, self.cols);
        Ok(SparseCholesky { n: self.rows, factor: T::factor_llt(self.rows, &self.triplets())? })
    }
}

pub struct SparseLu<T: Scalar> {
    n: usize,
    factor: T::LuFactor,
}

impl<T: Scalar> SparseLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        T::solve_lu(&self.factor, &mut x);
        x
    }
}

pub struct SparseCholesky<T: Scalar> {
    n: usize,
    factor: T::LltFactor,
}

impl<T: Scalar> SparseCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        T::solve_llt(&self.factor, &mut x);
        x
    }
}

/// `sum conj(a_i) b_i`.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + x.conjugate() * *y)
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt()
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Eigenpairs of `A x = lambda M x` nearest a shift.
#[derive(Clone, Debug)]
pub struct EigenResult<T> {
    pub values: Vec<f64>,
    /// `M`-orthonormal eigenvectors.
    pub vectors: Vec<Vec<T>>,
    /// `|A x - lambda M x| / |M x|` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub shift: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub buffer: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { shift: 0.0, tol: 1e-10, max_iter: 400, buffer: 6, seed: 0x5eed }
    }
}

fn m_orthonormalize<T: Scalar>(m: &CsrMatrix<T>, block: &mut Vec<Vec<T>>) {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(block.len());
    let mut out_m: Vec<Vec<T>> = Vec::with_capacity(block.len());
    for mut v in block.drain(..) {
        for _ in 0..2 {
            for (q, mq) in out.iter().zip(&out_m) {
                let c = dot(mq, &v);
                axpy(-c, q, &mut v);
            }
        }
        let mv = m.matvec(&v);
        let nrm = dot(&v, &mv).real().max(0.0).sqrt();
        if nrm < 1e-300 {
            continue;
        }
        let inv = T::from_real(1.0 / nrm);
        v.iter_mut().for_each(|x| *x *= inv);
        out_m.push(mv.into_iter().map(|x| x * inv).collect());
        out.push(v);
    }
    *block = out;
}

/// The `k` eigenpairs of the Hermitian pencil `(A, M)` closest to
/// `opts.shift`, ascending. `M` must be Hermitian positive definite.
pub fn shift_invert_eigen<T: Scalar>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenResult<T>> {
    let n = a.rows;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("requested {k} eigenpairs of a {n} x {n} problem")));
    }
    let p = (k + opts.buffer).min(n);
    let shifted = a.add_scaled(m, T::from_real(-opts.shift));
    let lu = shifted.lu()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<T>> = (0..p).map(|_| (0..n).map(|_| T::random(&mut rng)).collect()).collect();
    m_orthonormalize(m, &mut block);

    let mut last = EigenResult { values: vec![], vectors: vec![], residuals: vec![f64::INFINITY; k], iterations: 0 };
    for it in 1..=opts.max_iter {
        let mut y: Vec<Vec<T>> = block.iter().map(|x| lu.solve(&m.matvec(x))).collect();
        m_orthonormalize(m, &mut y);
        let q = y.len();
        let ay: Vec<Vec<T>> = y.iter().map(|v| a.matvec(v)).collect();
        let mut h = DMatrix::<T>::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                h[(i, j)] = dot(&y[i], &ay[j]);
            }
        }
        let h = (&h + h.adjoint()) * T::from_real(0.5);
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&i, &j| {
            let di = (eig.eigenvalues[i] - opts.shift).abs();
            let dj = (eig.eigenvalues[j] - opts.shift).abs();
            di.partial_cmp(&dj).unwrap()
        });
        let mut new_block = Vec::with_capacity(q);
        let mut values = Vec::with_capacity(q);
        for &c in &order {
            let mut x = vec![T::zero(); n];
            for (i, yi) in y.iter().enumerate() {
                axpy(eig.eigenvectors[(i, c)], yi, &mut x);
            }
            new_block.push(x);
            values.push(eig.eigenvalues[c]);
        }
        let mut residuals = Vec::with_capacity(k);
        for i in 0..k.min(q) {
            let ax = a.matvec(&new_block[i]);
            let mx = m.matvec(&new_block[i]);
            let mut r = ax;
            axpy(T::from_real(-values[i]), &mx, &mut r);
            residuals.push(norm(&r) / norm(&mx).max(1e-300));
        }
        let scale = values.iter().take(k).fold(1.0f64, |s, v| s.max(v.abs()));
        let done = residuals.len() == k && residuals.iter().all(|&r| r < opts.tol * scale);
        block = new_block;
        last = EigenResult { values: values.clone(), vectors: block.clone(), residuals, iterations: it };
        if done {
            break;
        }
    }
    let scale = last.values.iter().take(k).fold(1.0f64, |s, v| s.max(v.abs()));
    let worst = last.residuals.iter().cloned().fold(0.0, f64::max);
    if worst >= opts.tol * scale {
        return Err(Error::IterationLimit(format!(
            "eigensolver stopped after {} iterations with residual {worst:e}",
            last.iterations
        )));
    }
    let mut pairs: Vec<(f64, Vec<T>, f64)> =
        last.values.into_iter().zip(last.vectors).zip(last.residuals).map(|((v, x), r)| (v, x, r)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(EigenResult {
        values: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.2).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
        iterations: last.iterations,
    })
}

/// Least squares solution of a small dense system with real design rows.
pub fn least_squares<T: Scalar, const K: usize>(rows: &[[f64; K]], rhs: &[T]) -> [T; K] {
    let a = DMatrix::<T>::from_fn(rows.len(), K, |i, j| T::from_real(rows[i][j]));
    let b = DMatrix::<T>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = a.svd(true, true).solve(&b, 1e-13).expect("svd with both factors");
    std::array::from_fn(|j| x[(j, 0)])
}

/// Cosines of the principal angles between two `M`-orthonormal bases.
pub fn principal_cosines<T: Scalar>(m: &CsrMatrix<T>, u: &[Vec<T>], v: &[Vec<T>]) -> Vec<f64> {
    let mv: Vec<Vec<T>> = v.iter().map(|x| m.matvec(x)).collect();
    let mut c = DMatrix::<T>::zeros(u.len(), v.len());
    for i in 0..u.len() {
        for j in 0..v.len() {
            c[(i, j)] = dot(&u[i], &mv[j]);
        }
    }
    let mut s: Vec<f64> = c.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}
