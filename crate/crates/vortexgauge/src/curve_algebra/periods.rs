//! Periods of `x^k dx / y` over a canonical homology basis and the Jacobian.
//!
//! Cycle `a_j` encircles cut `j`; cycle `b_j` runs from cut `j` to the last
//! cut above the cuts in between on sheet one and returns below them on sheet
//! two. Both reduce to twice sheet-one integrals between branch points, where
//! Gauss-Chebyshev absorbs the square-root endpoints.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::curve::{CurvePoint, Divisor, HyperellipticCurve};
use super::paths;
use super::quadrature::{chebyshev_integral, ChebyshevNode};
use super::theta::{self, ThetaParams, ThetaValue};
use crate::error::{Error, Result};

const CHEB_TOL: f64 = 1e-14;

/// `y` at a Chebyshev node of the segment `[e_ia, e_ib]`, using sheet one
/// (off the cuts) or the boundary value on side `side` of cut `cut`.
fn node_y(curve: &HyperellipticCurve, ia: usize, ib: usize, cut: Option<(usize, f64)>, node: &ChebyshevNode) -> (C, C) {
    let e = &curve.branch_points;
    let (a, b) = (e[ia], e[ib]);
    let m = (a + b) / 2.0;
    let h = (b - a) / 2.0;
    let x = m + h * node.t;
    let d: Vec<C> = (0..e.len())
        .map(|k| {
            if k == ia {
                h * node.one_plus
            } else if k == ib {
                -h * node.one_minus
            } else {
                (m - e[k]) + h * node.t
            }
        })
        .collect();
    let y = match cut {
        None => curve.sheet_one_from_differences(&d),
        Some((j, sigma)) => {
            let mut y = C::new(1.0, 0.0);
            let n = e.len();
            for i in 0..n / 2 {
                if i == j {
                    y *= -C::i() * h * (sigma * node.sqrt_one_minus_sq);
                } else {
                    y *= d[2 * i + 1] * (d[2 * i] / d[2 * i + 1]).sqrt();
                }
            }
            if n % 2 == 1 {
                y *= C::i() * (-d[n - 1]).sqrt();
            }
            y
        }
    };
    (x, y)
}

/// Sign `sigma` of the boundary value `-sigma i h sqrt(1 - t^2)` of the
/// sheet-one factor of cut `j` on the side `side` (+1 left of `e_2j -> e_2j+1`).
fn cut_side_sign(curve: &HyperellipticCurve, j: usize, side: f64) -> f64 {
    let e = &curve.branch_points;
    let (a, b) = (e[2 * j], e[2 * j + 1]);
    let h = (b - a) / 2.0;
    let x = (a + b) / 2.0 + C::i() * h * (side * 1e-9);
    let f = (x - b) * ((x - a) / (x - b)).sqrt();
    if (f / (-C::i() * h)).re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `int F(x, y) dx` from `e_ia` to `e_ib` along the straight segment.
fn segment_integral(
    curve: &HyperellipticCurve,
    ia: usize,
    ib: usize,
    cut: Option<(usize, f64)>,
    dim: usize,
    f: &paths::Integrand,
) -> Result<Vec<C>> {
    let h = (curve.branch_points[ib] - curve.branch_points[ia]) / 2.0;
    chebyshev_integral(dim, CHEB_TOL, |node| {
        let (x, y) = node_y(curve, ia, ib, cut, node);
        f(x, y).into_iter().map(|v| v * h).collect()
    })
}

/// `int_{a_j} F dx` for `F` odd in `y`.
pub fn a_cycle(curve: &HyperellipticCurve, j: usize, dim: usize, f: &paths::Integrand) -> Result<Vec<C>> {
    let sigma = cut_side_sign(curve, j, -1.0);
    let v = segment_integral(curve, 2 * j, 2 * j + 1, Some((j, sigma)), dim, f)?;
    Ok(v.into_iter().map(|z| z * 2.0).collect())
}

/// `int_{b_j} F dx` for `F` odd in `y`. Over an intermediate cut the arc on
/// sheet one (above) and the returning arc on sheet two (below) cancel, so
/// only the gaps between cuts contribute.
pub fn b_cycle(curve: &HyperellipticCurve, j: usize, dim: usize, f: &paths::Integrand) -> Result<Vec<C>> {
    let mut total = vec![C::new(0.0, 0.0); dim];
    for k in j..curve.genus {
        for (t, x) in total.iter_mut().zip(segment_integral(curve, 2 * k + 1, 2 * k + 2, None, dim, f)?) {
            *t += x * 2.0;
        }
    }
    Ok(total)
}

/// Period data of a hyperelliptic curve.
#[derive(Clone, Debug)]
pub struct JacobianContext {
    pub curve: HyperellipticCurve,
    /// `A[k][j] = int_{a_j} x^k dx / y`.
    pub a_periods: DMatrix<C>,
    /// `B[k][j] = int_{b_j} x^k dx / y`.
    pub b_periods: DMatrix<C>,
    /// Normalized differentials `zeta_i = sum_k normalization[i][k] x^k dx / y`.
    pub normalization: DMatrix<C>,
    pub tau: DMatrix<C>,
    pub base_point: CurvePoint,
    pub riemann_constant: Vec<C>,
}

/// JSON view of a [`JacobianContext`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JacobianExport {
    pub genus: usize,
    pub branch_points: Vec<C>,
    pub tau: Vec<Vec<C>>,
    pub base_point: CurvePoint,
    pub riemann_constant: Vec<C>,
}

fn raw_basis(g: usize) -> impl Fn(C, C) -> Vec<C> {
    move |x: C, y: C| {
        let mut v = Vec::with_capacity(g);
        let mut p = C::new(1.0, 0.0) / y;
        for _ in 0..g {
            v.push(p);
            p *= x;
        }
        v
    }
}

/// Computes periods, normalized differentials, `tau` and the Riemann constant.
pub fn period_matrix(curve: &HyperellipticCurve) -> Result<JacobianContext> {
    let g = curve.genus;
    let basis = raw_basis(g);
    let mut a = DMatrix::<C>::zeros(g, g);
    let mut b = DMatrix::<C>::zeros(g, g);
    for j in 0..g {
        let ca = a_cycle(curve, j, g, &basis)?;
        let cb = b_cycle(curve, j, g, &basis)?;
        for k in 0..g {
            a[(k, j)] = ca[k];
            b[(k, j)] = cb[k];
        }
    }
    let normalization =
        a.clone().try_inverse().ok_or_else(|| Error::Conditioning("a-period matrix is singular".into()))?;
    let mut tau = &normalization * &b;
    let y = tau.map(|z| z.im);
    let eig = ((&y + y.transpose()) * 0.5).symmetric_eigenvalues();
    if eig.max() < 0.0 {
        tau = -tau;
        b = -b;
    } else if eig.min() <= 0.0 {
        return Err(Error::Conditioning("Im tau is indefinite; cycle construction failed".into()));
    }
    let tau = (&tau + tau.transpose()) * C::new(0.5, 0.0);
    let mut ctx = JacobianContext {
        curve: curve.clone(),
        a_periods: a,
        b_periods: b,
        normalization,
        tau,
        base_point: curve.branch_point(0),
        riemann_constant: vec![C::new(0.0, 0.0); g],
    };
    ctx.riemann_constant = ctx.calibrate_riemann_constant()?;
    Ok(ctx)
}

impl JacobianContext {
    pub fn genus(&self) -> usize {
        self.curve.genus
    }

    /// `max |tau - tau^T|` of the unsymmetrized period matrix.
    pub fn symmetry_defect(&self) -> f64 {
        let t = &self.normalization * &self.b_periods;
        (&t - t.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `Im tau`.
    pub fn im_tau_min_eigenvalue(&self) -> f64 {
        self.tau.map(|z| z.im).symmetric_eigenvalues().min()
    }

    /// Normalized holomorphic differentials at `(x, y)`, as coefficients of `dx`.
    pub fn zeta(&self, x: C, y: C) -> Vec<C> {
        let raw = raw_basis(self.genus())(x, y);
        (0..self.genus()).map(|i| (0..self.genus()).map(|k| self.normalization[(i, k)] * raw[k]).sum()).collect()
    }

    fn zeta_integrand(&self) -> impl Fn(C, C) -> Vec<C> + '_ {
        move |x, y| self.zeta(x, y)
    }

    /// `int_{P0}^{P} zeta` along an automatically chosen route.
    pub fn abel_jacobi_point(&self, p: &CurvePoint) -> Result<Vec<C>> {
        if self.curve.residual(p) > 1e-8 {
            return Err(Error::Domain("point is not on the curve".into()));
        }
        let f = self.zeta_integrand();
        paths::integrate(&self.curve, &self.base_point, p, &[], self.genus(), &f)
    }

    /// `sum_k m_k int_{P0}^{P_k} zeta`, not reduced.
    pub fn abel_jacobi_unreduced(&self, d: &Divisor) -> Result<Vec<C>> {
        let mut total = vec![C::new(0.0, 0.0); self.genus()];
        for (p, m) in &d.points {
            let v = self.abel_jacobi_point(p)?;
            for (t, x) in total.iter_mut().zip(v) {
                *t += x * (*m as f64);
            }
        }
        Ok(total)
    }

    /// Abel-Jacobi image of the divisor, reduced modulo the period lattice.
    pub fn abel_jacobi(&self, d: &Divisor) -> Result<Vec<C>> {
        Ok(self.reduce(&self.abel_jacobi_unreduced(d)?))
    }

    /// Real lattice coordinates `(m, n)` with `z = m + tau n`.
    pub fn lattice_coordinates(&self, z: &[C]) -> (Vec<f64>, Vec<f64>) {
        let g = self.genus();
        let y = self.tau.map(|t| t.im);
        let x = self.tau.map(|t| t.re);
        let imz = nalgebra::DVector::from_iterator(g, z.iter().map(|v| v.im));
        let n = y.clone().lu().solve(&imz).expect("Im tau is invertible");
        let m: Vec<f64> = (0..g).map(|i| z[i].re - (0..g).map(|j| x[(i, j)] * n[j]).sum::<f64>()).collect();
        (m, n.iter().copied().collect())
    }

    /// `z - M - tau N`.
    pub fn shift(&self, z: &[C], m: &[i64], n: &[i64]) -> Vec<C> {
        let g = self.genus();
        (0..g).map(|i| z[i] - m[i] as f64 - (0..g).map(|j| self.tau[(i, j)] * n[j] as f64).sum::<C>()).collect()
    }

    /// The lattice translate of `z` of smallest norm, searching integer
    /// shifts within 3 of the rounded lattice coordinates.
    pub fn reduce(&self, z: &[C]) -> Vec<C> {
        let g = self.genus();
        let (_, n) = self.lattice_coordinates(z);
        let base: Vec<i64> = n.iter().map(|v| v.round() as i64).collect();
        let mut best: Option<(f64, Vec<C>)> = None;
        let mut off = vec![-3i64; g];
        loop {
            let nn: Vec<i64> = (0..g).map(|i| base[i] + off[i]).collect();
            let w = self.shift(z, &vec![0; g], &nn);
            let mm: Vec<i64> = w.iter().map(|v| v.re.round() as i64).collect();
            let w = self.shift(&w, &mm, &vec![0; g]);
            let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| norm < *b) {
                best = Some((norm, w));
            }
            let mut i = 0;
            loop {
                if i == g {
                    return best.unwrap().1;
                }
                off[i] += 1;
                if off[i] <= 3 {
                    break;
                }
                off[i] = -3;
                i += 1;
            }
        }
    }

    /// Norm of the reduced representative.
    pub fn lattice_norm(&self, z: &[C]) -> f64 {
        self.reduce(z).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn theta_at(&self, z: &[C]) -> Result<ThetaValue> {
        theta::theta_full(&ThetaParams::new(self.reduce(z), self.tau.clone()))
    }

    /// Quasi-periodicity residual of theta at `z` for the lattice vector `tau N`.
    pub fn theta_quasiperiod_check(&self, z: &[C], n: &[i64]) -> Result<f64> {
        theta::quasiperiod_residual(&self.tau, z, n)
    }

    /// Half periods `(mu + tau nu) / 2` with `mu, nu in {0, 1}^g`.
    pub fn half_periods(&self) -> Vec<Vec<C>> {
        let g = self.genus();
        (0..1usize << (2 * g))
            .map(|bits| {
                let mu: Vec<f64> = (0..g).map(|i| (bits >> i & 1) as f64).collect();
                let nu: Vec<f64> = (0..g).map(|i| (bits >> (g + i) & 1) as f64).collect();
                (0..g).map(|i| (mu[i] + (0..g).map(|j| self.tau[(i, j)] * nu[j]).sum::<C>()) * 0.5).collect()
            })
            .collect()
    }

    /// Deterministic sample points in general position for calibration.
    pub fn probe_points(&self, count: usize) -> Vec<CurvePoint> {
        let c = self.curve.centroid();
        let s = self.curve.scale();
        (0..count)
            .map(|k| {
                let angle = 0.9 + 2.3 * k as f64;
                let r = s * (0.37 + 0.11 * k as f64);
                let x = c + C::from_polar(r, angle) + C::new(0.013, 0.021) * s;
                let sheet = if k % 2 == 0 { super::curve::Sheet::One } else { super::curve::Sheet::Two };
                self.curve.point(x, sheet)
            })
            .collect()
    }

    /// The Riemann constant for base point `P0 = e_0`: among the half periods,
    /// the one for which `theta(Phi(E) + kappa)` vanishes for effective
    /// divisors `E` of degree `g - 1`. Since `P0` is a branch point the
    /// constant is a half period; we test all `4^g` of them on three probe
    /// divisors and require a unique winner.
    fn calibrate_riemann_constant(&self) -> Result<Vec<C>> {
        let g = self.genus();
        let probes = self.probe_points(3 * (g - 1).max(1));
        let mut images = Vec::new();
        if g == 1 {
            images.push(vec![C::new(0.0, 0.0)]);
        } else {
            for set in probes.chunks(g - 1).take(3) {
                images.push(self.abel_jacobi_unreduced(&Divisor::effective(set))?);
            }
        }
        let mut scores: Vec<(f64, Vec<C>)> = Vec::new();
        for kappa in self.half_periods() {
            let mut worst: f64 = 0.0;
            for w in &images {
                let z: Vec<C> = w.iter().zip(&kappa).map(|(a, b)| a + b).collect();
                let t = self.theta_at(&z)?;
                worst = worst.max(t.value.norm() / t.leading);
            }
            scores.push((worst, kappa));
        }
        scores.sort_by(|a, b| a.0.total_cmp(&b.0));
        if scores[0].0 > 1e-8 || scores[1].0 < 1e-4 {
            return Err(Error::Conditioning(format!(
                "Riemann constant calibration is ambiguous (best {:e}, next {:e})",
                scores[0].0, scores[1].0
            )));
        }
        Ok(scores.swap_remove(0).1)
    }

    pub fn export(&self) -> JacobianExport {
        let g = self.genus();
        JacobianExport {
            genus: g,
            branch_points: self.curve.branch_points.clone(),
            tau: (0..g).map(|i| (0..g).map(|j| self.tau[(i, j)]).collect()).collect(),
            base_point: self.base_point,
            riemann_constant: self.riemann_constant.clone(),
        }
    }
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-16 * a.abs() {
        let an = (a + b) / 2.0;
        b = (a * b).sqrt();
        a = an;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_algebra::curve::Sheet;
    use std::f64::consts::PI;

    fn real_curve(e: &[f64]) -> HyperellipticCurve {
        HyperellipticCurve::new(&e.iter().map(|&v| C::new(v, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lemniscatic_tau_is_i() {
        let ctx = period_matrix(&real_curve(&[-1.0, 0.0, 1.0])).unwrap();
        assert!((ctx.tau[(0, 0)] - C::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn genus_one_periods_match_agm() {
        // real roots e1 < e2 < e3: |int_{e1}^{e2} dx/y| = pi / AGM(sqrt(e3-e1), sqrt(e3-e2)),
        // |int_{e2}^{e3} dx/y| = pi / AGM(sqrt(e3-e1), sqrt(e2-e1))
        let (e1, e2, e3) = (-1.3, 0.2, 2.1);
        let ctx = period_matrix(&real_curve(&[e1, e2, e3])).unwrap();
        let i12 = PI / agm((e3 - e1).sqrt(), (e3 - e2).sqrt());
        let i23 = PI / agm((e3 - e1).sqrt(), (e2 - e1).sqrt());
        assert!((ctx.a_periods[(0, 0)].norm() - 2.0 * i12).abs() < 1e-12);
        assert!((ctx.b_periods[(0, 0)].norm() - 2.0 * i23).abs() < 1e-12);
        assert!((ctx.tau[(0, 0)].im - i23 / i12).abs() < 1e-12);
    }

    #[test]
    fn genus_two_invariants() {
        let curve = real_curve(&[-1.0, 0.0, 1.0]);
        assert_eq!(curve.genus, 1);
        let curve = HyperellipticCurve::new(&[
            C::new(0.0, 0.0),
            C::new(1.0, 0.0),
            C::new(-1.0, 0.0),
            C::new(0.0, 1.0),
            C::new(0.0, -1.0),
        ])
        .unwrap();
        let ctx = period_matrix(&curve).unwrap();
        assert!(ctx.symmetry_defect() < 1e-10);
        assert!(ctx.im_tau_min_eigenvalue() > 0.0);
    }

    #[test]
    fn base_point_maps_to_zero_and_involution_negates() {
        let ctx = period_matrix(&real_curve(&[-1.0, 0.3, 1.7, 2.5, 4.0])).unwrap();
        assert!(ctx.abel_jacobi(&Divisor::effective(&[ctx.base_point])).unwrap().iter().all(|z| z.norm() < 1e-12));
        let p = ctx.curve.point(C::new(0.7, 0.8), Sheet::One);
        let d = Divisor::effective(&[p, p.involution()]);
        assert!(ctx.lattice_norm(&ctx.abel_jacobi_unreduced(&d).unwrap()) < 1e-10);
    }

    #[test]
    fn reduction_removes_lattice_vectors() {
        let ctx = period_matrix(&real_curve(&[-1.0, 0.3, 1.7, 2.5, 4.0])).unwrap();
        let z = vec![C::new(0.1, 0.05), C::new(-0.07, 0.02)];
        let shifted = ctx.shift(&z, &[2, -1], &[-1, 3]);
        let r = ctx.reduce(&shifted);
        assert!(r.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
