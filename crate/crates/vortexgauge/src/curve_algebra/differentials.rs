use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use super::curve::{CurvePoint, Divisor, HyperellipticCurve};
use super::paths;
use super::periods::{a_cycle, b_cycle, JacobianContext};
use crate::error::{Error, Result};

/// Normalized differential of the third kind with residue `-1` at `p` and
/// `+1` at `q`:
/// `omega_0 = ((y + y_q)/(x - x_q) - (y + y_p)/(x - x_p)) dx / (2y)` minus the
/// combination of normalized holomorphic differentials cancelling its
/// a-periods.
#[derive(Clone, Debug)]
pub struct ThirdKind {
    pub p: CurvePoint,
    pub q: CurvePoint,
    /// `correction[j] = int_{a_j} omega_0`.
    pub correction: Vec<C>,
}

impl ThirdKind {
    /// Coefficient of `dx` at `(x, y)`.
    pub fn eval(&self, ctx: &JacobianContext, x: C, y: C) -> C {
        let (p, q) = (self.p, self.q);
        let w0 = ((y + q.y) / (x - q.x) - (y + p.y) / (x - p.x)) / (2.0 * y);
        let z = ctx.zeta(x, y);
        w0 - self.correction.iter().zip(&z).map(|(c, z)| c * z).sum::<C>()
    }

    /// Odd part in `y`, the only part with nonzero cycle integrals.
    fn odd_part(&self, ctx: &JacobianContext, x: C, y: C) -> C {
        let (p, q) = (self.p, self.q);
        let w0 = (q.y / (x - q.x) - p.y / (x - p.x)) / (2.0 * y);
        let z = ctx.zeta(x, y);
        w0 - self.correction.iter().zip(&z).map(|(c, z)| c * z).sum::<C>()
    }

    /// `int_{a_j}` for every `j`.
    pub fn a_periods(&self, ctx: &JacobianContext) -> Result<Vec<C>> {
        let f = |x: C, y: C| vec![self.odd_part(ctx, x, y)];
        (0..ctx.genus()).map(|j| Ok(a_cycle(&ctx.curve, j, 1, &f)?[0])).collect()
    }

    /// `int_{b_j}` for every `j`, modulo `2 pi i`.
    pub fn b_periods(&self, ctx: &JacobianContext) -> Result<Vec<C>> {
        let f = |x: C, y: C| vec![self.odd_part(ctx, x, y)];
        (0..ctx.genus()).map(|j| Ok(b_cycle(&ctx.curve, j, 1, &f)?[0])).collect()
    }

    /// `(1 / 2 pi i) * contour integral` on a circle of radius `r` about the
    /// `x` coordinate of `centre`, on the sheet of `centre`.
    pub fn residue(&self, ctx: &JacobianContext, centre: &CurvePoint, r: f64) -> C {
        let curve = &ctx.curve;
        let f0 = curve.f(centre.x);
        let n = 512;
        let mut sum = C::new(0.0, 0.0);
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let dx = C::from_polar(r, th);
            let x = centre.x + dx;
            let y = centre.y * (curve.f(x) / f0).sqrt();
            sum += self.eval(ctx, x, y) * C::i() * dx;
        }
        sum * (2.0 * PI / n as f64) / (C::new(0.0, 2.0 * PI))
    }
}

/// Builds the normalized third-kind differential with residues `-1` at `p`
/// and `+1` at `q`.
pub fn third_kind_differential(ctx: &JacobianContext, p: &CurvePoint, q: &CurvePoint) -> Result<ThirdKind> {
    let curve = &ctx.curve;
    if (p.x - q.x).norm() <= 1e-12 * curve.scale() && (p.y - q.y).norm() <= 1e-12 * curve.scale() {
        return Err(Error::Domain("third-kind differential needs two distinct points".into()));
    }
    for pt in [p, q] {
        if curve.residual(pt) > 1e-8 {
            return Err(Error::Domain("point is not on the curve".into()));
        }
        if pt.y.norm() <= 1e-10 * curve.scale().powf(curve.branch_points.len() as f64 / 2.0) {
            return Err(Error::Domain("branch points are not supported as poles".into()));
        }
    }
    let raw = ThirdKind { p: *p, q: *q, correction: vec![C::new(0.0, 0.0); ctx.genus()] };
    let correction = raw.a_periods(ctx)?;
    Ok(ThirdKind { correction, ..raw })
}

/// Section values built from third-kind differentials.
///
/// `f(P) = exp(int_{P0}^{P} Omega)` with
/// `Omega = sum_j tau_{Q0, P_j} + i w . zeta`, the real vector `w` chosen so
/// every period of `Omega` is imaginary. `f` has simple zeros at the points
/// of `D`, a pole of order `deg D` at `Q0`, and a unitary character. Values
/// are reported in the frame where the reference section `s0` is `1` away
/// from `Q0`.
#[derive(Clone, Debug)]
pub struct BakerAkhiezer {
    pub q0: CurvePoint,
    pub divisor: Vec<CurvePoint>,
    pub differentials: Vec<ThirdKind>,
    pub unitarizer: Vec<f64>,
}

impl BakerAkhiezer {
    pub fn new(ctx: &JacobianContext, d: &Divisor, q0: &CurvePoint) -> Result<Self> {
        if !d.is_effective() {
            return Err(Error::Domain("the divisor must be effective".into()));
        }
        let points = d.support_with_multiplicity();
        let differentials: Vec<ThirdKind> =
            points.iter().map(|p| third_kind_differential(ctx, q0, p)).collect::<Result<_>>()?;
        let g = ctx.genus();
        let mut beta = vec![C::new(0.0, 0.0); g];
        for t in &differentials {
            for (b, v) in beta.iter_mut().zip(t.b_periods(ctx)?) {
                *b += v;
            }
        }
        let y = DMatrix::from_fn(g, g, |i, j| ctx.tau[(i, j)].im);
        let rhs = DVector::from_iterator(g, beta.iter().map(|b| b.re));
        let w = y.lu().solve(&rhs).ok_or_else(|| Error::Conditioning("Im tau is singular".into()))?;
        Ok(Self { q0: *q0, divisor: points, differentials, unitarizer: w.iter().copied().collect() })
    }

    fn omega(&self, ctx: &JacobianContext, x: C, y: C) -> C {
        let z = ctx.zeta(x, y);
        let hol: C = self.unitarizer.iter().zip(&z).map(|(w, z)| C::new(0.0, *w) * z).sum();
        self.differentials.iter().map(|t| t.eval(ctx, x, y)).sum::<C>() + hol
    }

    fn poles(&self) -> Vec<C> {
        let mut v = vec![self.q0.x];
        v.extend(self.divisor.iter().map(|p| p.x));
        v
    }

    /// `log f(P)` along the automatically chosen route from `P0`.
    pub fn log_value(&self, ctx: &JacobianContext, p: &CurvePoint) -> Result<C> {
        let route = paths::choose_route(&ctx.curve, &ctx.base_point, p, &self.poles())?;
        self.log_value_along(ctx, &route)
    }

    /// `log f` along a given route starting at `P0`.
    pub fn log_value_along(&self, ctx: &JacobianContext, route: &paths::Route) -> Result<C> {
        for x in self.poles() {
            if (x - route.end.x).norm() <= 1e-12 * ctx.curve.scale() {
                return Err(Error::Path("sample point coincides with a pole of the integrand".into()));
            }
        }
        let f = |x: C, y: C| vec![self.omega(ctx, x, y)];
        Ok(paths::integrate_route(&ctx.curve, route, 1, &f)?[0])
    }

    pub fn value(&self, ctx: &JacobianContext, p: &CurvePoint) -> Result<C> {
        Ok(self.log_value(ctx, p)?.exp())
    }

    /// Characters `chi(a_j)` and `chi(b_j)`.
    pub fn characters(&self, ctx: &JacobianContext) -> Result<(Vec<C>, Vec<C>)> {
        let g = ctx.genus();
        let mut a = vec![C::new(0.0, 0.0); g];
        let mut b = vec![C::new(0.0, 0.0); g];
        for t in &self.differentials {
            for (acc, v) in a.iter_mut().zip(t.a_periods(ctx)?) {
                *acc += v;
            }
            for (acc, v) in b.iter_mut().zip(t.b_periods(ctx)?) {
                *acc += v;
            }
        }
        for j in 0..g {
            a[j] += C::new(0.0, self.unitarizer[j]);
            b[j] += C::new(0.0, 1.0) * (0..g).map(|k| ctx.tau[(j, k)] * self.unitarizer[k]).sum::<C>();
        }
        Ok((a.into_iter().map(|v| v.exp()).collect(), b.into_iter().map(|v| v.exp()).collect()))
    }
}

/// Values of the section at the sample points.
pub fn baker_akhiezer_values(
    ctx: &JacobianContext,
    d: &Divisor,
    q0: &CurvePoint,
    samples: &[CurvePoint],
) -> Result<Vec<C>> {
    let ba = BakerAkhiezer::new(ctx, d, q0)?;
    samples.iter().map(|p| ba.value(ctx, p)).collect()
}

/// Polynomial helpers, coefficients in increasing degree.
fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[C], x: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn poly_roots(p: &[C]) -> Result<Vec<C>> {
    let mut p = p.to_vec();
    while p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    let n = p.len() - 1;
    let lead = p[n];
    let mut comp = DMatrix::<C>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p[i] / lead;
    }
    let roots = comp
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Conditioning("companion eigenvalues did not converge".into()))?;
    let dp: Vec<C> = (1..=n).map(|k| p[k] * k as f64).collect();
    Ok(roots
        .iter()
        .map(|&r| {
            let mut x = r;
            for _ in 0..4 {
                let d = poly_eval(&dp, x);
                if d.norm() == 0.0 {
                    break;
                }
                x -= poly_eval(&p, x) / d;
            }
            x
        })
        .collect())
}

/// Zeros of `y - p(x)` for a polynomial of degree at most `g`: the points
/// `(r, p(r))` with `p(r)^2 = f(r)`.
pub fn zeros_of_y_minus(curve: &HyperellipticCurve, p: &[C]) -> Result<Vec<CurvePoint>> {
    if p.len() > curve.genus + 1 {
        return Err(Error::Domain("polynomial degree must not exceed the genus".into()));
    }
    let mut f = vec![C::new(1.0, 0.0)];
    for e in &curve.branch_points {
        f = poly_mul(&f, &[-e, C::new(1.0, 0.0)]);
    }
    let p2 = poly_mul(p, p);
    let h: Vec<C> = (0..f.len()).map(|k| p2.get(k).copied().unwrap_or_default() - f[k]).collect();
    Ok(poly_roots(&h)?.into_iter().map(|r| CurvePoint { x: r, y: poly_eval(p, r) }).collect())
}

/// Divisor of `(y - p(x)) / (y - q(x))`. For `deg p, deg q <= g` the points
/// at infinity cancel, so the divisor is finite and of degree zero.
pub fn principal_divisor(curve: &HyperellipticCurve, p: &[C], q: &[C]) -> Result<Divisor> {
    let zeros = zeros_of_y_minus(curve, p)?;
    let poles = zeros_of_y_minus(curve, q)?;
    Ok(Divisor::effective(&zeros).sub(&Divisor::effective(&poles)))
}

/// Divisor of `(x - c) / (x - d)`.
pub fn divisor_of_x_ratio(curve: &HyperellipticCurve, c: C, d: C) -> Divisor {
    let pc = curve.point(c, super::curve::Sheet::One);
    let pd = curve.point(d, super::curve::Sheet::One);
    Divisor::effective(&[pc, pc.involution()]).sub(&Divisor::effective(&[pd, pd.involution()]))
}
