//! Integration of `F(x, y) dx` along polylines on the curve.
//!
//! `y` is carried along each straight segment by analytic continuation,
//! `y(x) = y(A) prod_k sqrt((x - e_k) / (A - e_k))`, which is continuous as
//! long as the segment avoids the branch points. Segments that start or end
//! at a branch point are split in half and the singular half is integrated in
//! the variable `u` with `x = e + (M - e) u^2`, which removes the `1/sqrt`
//! behaviour of `dx / y`.

use num_complex::Complex64 as C;

use super::curve::{CurvePoint, HyperellipticCurve};
use super::quadrature::adaptive_legendre;
use crate::error::{Error, Result};

/// Vector valued integrand `F(x, y)`; the integral is of `F dx`.
pub type Integrand<'a> = dyn Fn(C, C) -> Vec<C> + 'a;

const TOL: f64 = 1e-13;

fn zero(dim: usize) -> Vec<C> {
    vec![C::new(0.0, 0.0); dim]
}

fn distance_to_segment(p: C, a: C, b: C) -> f64 {
    let d = b - a;
    let s = ((p - a) * d.conj()).re / d.norm_sqr();
    (a + d * s.clamp(0.0, 1.0) - p).norm()
}

struct Continuation<'a> {
    curve: &'a HyperellipticCurve,
}

impl Continuation<'_> {
    /// `y` at `x = a + (b - a) s` continued from `(a, ya)`, `ya != 0`.
    fn regular(&self, a: C, ya: C, b: C, s: f64) -> C {
        let delta = b - a;
        let mut y = ya;
        for e in &self.curve.branch_points {
            let c = a - e;
            y *= (C::new(1.0, 0.0) + delta * s / c).sqrt();
        }
        y
    }

    /// `y` at `x = e_m + (m - e_m) u^2`, on the branch with sign `sigma`.
    fn from_branch(&self, k: usize, m: C, u: f64, sigma: f64) -> C {
        let e = self.curve.branch_points[k];
        let delta = m - e;
        let mut y = C::new(sigma * u, 0.0) * delta.sqrt();
        for (j, ej) in self.curve.branch_points.iter().enumerate() {
            if j != k {
                let c = e - ej;
                y *= c.sqrt() * (C::new(1.0, 0.0) + delta * (u * u) / c).sqrt();
            }
        }
        y
    }

    /// `y` at `x = e_m + (m - e_m) u^2` continued from `(m, ym)` towards the
    /// branch point `e_m`.
    fn towards_branch(&self, k: usize, m: C, ym: C, u: f64) -> C {
        let e = self.curve.branch_points[k];
        let delta = m - e;
        let mut y = ym * u;
        for (j, ej) in self.curve.branch_points.iter().enumerate() {
            if j != k {
                let c = e - ej;
                y *= ((c + delta * (u * u)) / (c + delta)).sqrt();
            }
        }
        y
    }
}

/// A route on the curve: start point, intermediate `x` vertices and the end.
#[derive(Clone, Debug)]
pub struct Route {
    pub start: CurvePoint,
    pub vertices: Vec<C>,
    pub end: CurvePoint,
}

impl Route {
    fn xs(&self) -> Vec<C> {
        let mut v = vec![self.start.x];
        v.extend(&self.vertices);
        v.push(self.end.x);
        v
    }
}

/// Checks that the open route avoids branch points (other than at its ends)
/// and the given poles by at least `clearance`.
fn route_is_clear(curve: &HyperellipticCurve, xs: &[C], poles: &[C], clearance: f64) -> bool {
    let n = xs.len();
    for w in 0..n - 1 {
        let (a, b) = (xs[w], xs[w + 1]);
        if (b - a).norm() == 0.0 {
            return false;
        }
        for e in curve.branch_points.iter().chain(poles) {
            let at_start = w == 0 && (e - a).norm() <= 1e-12 * curve.scale();
            let at_end = w == n - 2 && (e - b).norm() <= 1e-12 * curve.scale();
            if at_start || at_end {
                continue;
            }
            if distance_to_segment(*e, a, b) < clearance {
                return false;
            }
        }
    }
    true
}

/// Chooses a route from `start` to `end`: the straight segment if it keeps
/// clear of branch points and poles, otherwise a two-segment detour.
pub fn choose_route(curve: &HyperellipticCurve, start: &CurvePoint, end: &CurvePoint, poles: &[C]) -> Result<Route> {
    let clearance = 1e-6 * curve.scale();
    let (a, b) = (start.x, end.x);
    if (b - a).norm() == 0.0 {
        return Ok(Route { start: *start, vertices: vec![], end: *end });
    }
    let mid = (a + b) / 2.0;
    let normal = C::i() * (b - a);
    let mut candidates = vec![vec![]];
    for f in [0.15, -0.15, 0.35, -0.35, 0.7, -0.7] {
        candidates.push(vec![mid + normal * f]);
    }
    for vertices in candidates {
        let mut xs = vec![a];
        xs.extend(&vertices);
        xs.push(b);
        if route_is_clear(curve, &xs, poles, clearance) {
            return Ok(Route { start: *start, vertices, end: *end });
        }
    }
    Err(Error::Path(format!("no route from {a} to {b} avoids the branch points and poles")))
}

/// Integrates `F dx` along the route. When the route starts at a branch
/// point the sheet is chosen so that the continuation arrives at `end`.
pub fn integrate_route(curve: &HyperellipticCurve, route: &Route, dim: usize, f: &Integrand) -> Result<Vec<C>> {
    let cont = Continuation { curve };
    let xs = route.xs();
    let nseg = xs.len() - 1;
    let start_branch = curve.branch_index(&route.start);
    let end_branch = curve.branch_index(&route.end);
    if nseg == 0 || (xs[0] - xs[nseg]).norm() == 0.0 && route.vertices.is_empty() {
        if (route.start.y - route.end.y).norm() <= 1e-10 * route.end.y.norm().max(1.0) {
            return Ok(zero(dim));
        }
        return Err(Error::Path("start and end lie over the same x on different sheets".into()));
    }

    // Dry run: y at the vertices, to fix the sheet of a branch start.
    let run = |sigma: f64| -> Vec<C> {
        let mut ys = Vec::with_capacity(nseg + 1);
        ys.push(route.start.y);
        for w in 0..nseg {
            let (a, b) = (xs[w], xs[w + 1]);
            let y_next = if let (0, Some(k)) = (w, start_branch) {
                let m = (a + b) / 2.0;
                let ym = cont.from_branch(k, m, 1.0, sigma);
                if w == nseg - 1 && end_branch.is_some() {
                    C::new(0.0, 0.0)
                } else {
                    cont.regular(m, ym, b, 1.0)
                }
            } else if w == nseg - 1 && end_branch.is_some() {
                C::new(0.0, 0.0)
            } else {
                cont.regular(a, ys[w], b, 1.0)
            };
            ys.push(y_next);
        }
        ys
    };
    let mut sigma = 1.0;
    if start_branch.is_some() && end_branch.is_none() {
        let y_end = run(1.0)[nseg];
        if (y_end + route.end.y).norm() < (y_end - route.end.y).norm() {
            sigma = -1.0;
        }
    }
    let ys = run(sigma);
    if end_branch.is_none() {
        let y_end = ys[nseg];
        if (y_end - route.end.y).norm() > 1e-6 * route.end.y.norm().max(1e-300) {
            return Err(Error::Path("route arrives on the other sheet".into()));
        }
    }

    let mut total = zero(dim);
    let mut add = |v: Vec<C>| {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    };
    for w in 0..nseg {
        let (a, b) = (xs[w], xs[w + 1]);
        let sing_start = w == 0 && start_branch.is_some();
        let sing_end = w == nseg - 1 && end_branch.is_some();
        let m = (a + b) / 2.0;
        // Regular portion [ra, rb] with y(ra) = ry.
        let (ra, ry, rb) = match (sing_start, sing_end) {
            (false, false) => (a, ys[w], b),
            (true, _) => (m, cont.from_branch(start_branch.unwrap(), m, 1.0, sigma), if sing_end { m } else { b }),
            (false, true) => (a, ys[w], m),
        };
        if sing_start {
            let k = start_branch.unwrap();
            let delta = m - a;
            let mut g = |u: f64| {
                let x = a + delta * (u * u);
                let y = cont.from_branch(k, m, u, sigma);
                let jac = delta * (2.0 * u);
                f(x, y).into_iter().map(|v| v * jac).collect()
            };
            add(adaptive_legendre(dim, 0.0, 1.0, TOL, &mut g)?);
        }
        if (rb - ra).norm() > 0.0 {
            let delta = rb - ra;
            let mut g = |s: f64| {
                let x = ra + delta * s;
                let y = cont.regular(ra, ry, rb, s);
                f(x, y).into_iter().map(|v| v * delta).collect()
            };
            add(adaptive_legendre(dim, 0.0, 1.0, TOL, &mut g)?);
        }
        if sing_end {
            let k = end_branch.unwrap();
            let ym = if sing_start {
                cont.from_branch(start_branch.unwrap(), m, 1.0, sigma)
            } else {
                cont.regular(ra, ry, rb, 1.0)
            };
            let delta = m - b;
            let mut g = |u: f64| {
                let x = b + delta * (u * u);
                let y = cont.towards_branch(k, m, ym, u);
                let jac = -delta * (2.0 * u);
                f(x, y).into_iter().map(|v| v * jac).collect()
            };
            add(adaptive_legendre(dim, 0.0, 1.0, TOL, &mut g)?);
        }
    }
    Ok(total)
}

/// Integrates along the automatically chosen route.
pub fn integrate(
    curve: &HyperellipticCurve,
    start: &CurvePoint,
    end: &CurvePoint,
    poles: &[C],
    dim: usize,
    f: &Integrand,
) -> Result<Vec<C>> {
    let route = choose_route(curve, start, end, poles)?;
    integrate_route(curve, &route, dim, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_algebra::curve::Sheet;

    fn curve() -> HyperellipticCurve {
        HyperellipticCurve::new(&[C::new(-1.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn exact_differential_integrates_to_difference() {
        // d(y) = f'(x) / (2 y) dx
        let c = curve();
        let cc = c.clone();
        let f = move |x: C, y: C| vec![cc.df(x) / (2.0 * y)];
        let p = c.point(C::new(0.4, 0.9), Sheet::Two);
        let v = integrate(&c, &c.branch_point(0), &p, &[], 1, &f).unwrap();
        assert!((v[0] - p.y).norm() < 1e-11);
        let q = c.point(C::new(-0.7, -0.3), Sheet::One);
        // exactly one sheet over q is reached by continuation
        let mut reached = 0;
        for q in [q, q.involution()] {
            let r = Route { start: p, vertices: vec![C::new(0.0, 1.0)], end: q };
            match integrate_route(&c, &r, 1, &f) {
                Ok(v) => {
                    reached += 1;
                    assert!((v[0] - (q.y - p.y)).norm() < 1e-11);
                }
                Err(e) => assert!(matches!(e, Error::Path(_))),
            }
        }
        assert_eq!(reached, 1);
    }

    #[test]
    fn branch_to_branch_route() {
        let c = curve();
        let cc = c.clone();
        let f = move |x: C, y: C| vec![x * cc.df(x) / (2.0 * y) + y];
        // d(x y) integrates to 0 between branch points
        let v = integrate(&c, &c.branch_point(0), &c.branch_point(2), &[], 1, &f).unwrap();
        assert!(v[0].norm() < 1e-11);
    }

    #[test]
    fn straight_route_through_branch_point_is_deformed() {
        let c = curve();
        let r = choose_route(&c, &c.branch_point(0), &c.point(C::new(0.5, 0.0), Sheet::One), &[]).unwrap();
        assert_eq!(r.vertices.len(), 1);
    }
}
