use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

const PANEL: usize = 20;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL))
}

/// A node of the Chebyshev rule: `t = cos(theta)` together with `1 - t`,
/// `1 + t` and `sqrt(1 - t^2)` computed without cancellation.
#[derive(Clone, Copy, Debug)]
pub struct ChebyshevNode {
    pub t: f64,
    pub one_minus: f64,
    pub one_plus: f64,
    pub sqrt_one_minus_sq: f64,
}

pub fn chebyshev_nodes(n: usize) -> Vec<ChebyshevNode> {
    (1..=n)
        .map(|l| {
            let th = (2 * l - 1) as f64 * PI / (2 * n) as f64;
            ChebyshevNode {
                t: th.cos(),
                one_minus: 2.0 * (th / 2.0).sin().powi(2),
                one_plus: 2.0 * (th / 2.0).cos().powi(2),
                sqrt_one_minus_sq: th.sin(),
            }
        })
        .collect()
}

fn add_to(acc: &mut [C], v: &[C], w: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b * w;
    }
}

fn max_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `int_{-1}^{1} G(t) dt` for `G = sqrt(1 - t^2) * smooth`. The callback
/// receives a node and returns `G(t)`; the rule doubles its order until two
/// successive estimates agree to `tol` relative to `int |G|`.
pub fn chebyshev_integral(dim: usize, tol: f64, mut g: impl FnMut(&ChebyshevNode) -> Vec<C>) -> Result<Vec<C>> {
    let mut prev: Option<Vec<C>> = None;
    let mut n = 32;
    while n <= 16384 {
        let mut acc = vec![C::new(0.0, 0.0); dim];
        let mut l1: f64 = 0.0;
        for node in chebyshev_nodes(n) {
            let v = g(&node);
            let w = PI / n as f64 * node.sqrt_one_minus_sq;
            l1 += max_norm(&v) * w;
            add_to(&mut acc, &v, w);
        }
        if let Some(p) = &prev {
            let diff = max_norm(&acc.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>());
            if diff <= tol * l1.max(1e-300) {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        n *= 2;
    }
    Err(Error::Conditioning("Chebyshev period quadrature did not converge (branch points too close?)".into()))
}

/// Adaptive composite Gauss-Legendre on `[a, b]` for a vector valued
/// integrand. `tol` is relative to `max(1, |first estimate|)`.
pub fn adaptive_legendre(dim: usize, a: f64, b: f64, tol: f64, f: &mut dyn FnMut(f64) -> Vec<C>) -> Result<Vec<C>> {
    let (x, w) = panel_rule();
    let panel = |lo: f64, hi: f64, f: &mut dyn FnMut(f64) -> Vec<C>| {
        let (m, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        let mut acc = vec![C::new(0.0, 0.0); dim];
        for (xi, wi) in x.iter().zip(w) {
            add_to(&mut acc, &f(m + h * xi), h * wi);
        }
        acc
    };
    let mut total = vec![C::new(0.0, 0.0); dim];
    let whole = panel(a, b, f);
    let tol = tol * max_norm(&whole).max(1.0);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut evaluations = 0usize;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = (lo + hi) / 2.0;
        let left = panel(lo, mid, f);
        let right = panel(mid, hi, f);
        evaluations += 1;
        let refined: Vec<C> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let err = max_norm(&refined.iter().zip(&est).map(|(p, q)| p - q).collect::<Vec<_>>());
        let local_tol = tol * ((hi - lo) / (b - a)).max(1e-3);
        if err <= local_tol || depth >= 60 {
            if depth >= 60 && err > 1e3 * local_tol {
                return Err(Error::Conditioning("adaptive quadrature hit its depth limit".into()));
            }
            add_to(&mut total, &refined, 1.0);
        } else {
            if evaluations > 200_000 {
                return Err(Error::Conditioning("adaptive quadrature exceeded its budget".into()));
            }
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_handles_square_root_ends() {
        // int_{-1}^{1} dt / sqrt(1 - t^2) = pi
        let v = chebyshev_integral(1, 1e-14, |n| vec![C::new(1.0 / n.sqrt_one_minus_sq, 0.0)]).unwrap();
        assert!((v[0].re - PI).abs() < 1e-13);
        // int_{-1}^{1} e^t / sqrt(1 - t^2) = pi I_0(1)
        let v = chebyshev_integral(1, 1e-14, |n| vec![C::new(n.t.exp() / n.sqrt_one_minus_sq, 0.0)]).unwrap();
        assert!((v[0].re - PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }

    #[test]
    fn adaptive_resolves_a_near_pole() {
        let eps = 1e-3;
        let mut f = |t: f64| vec![C::new(1.0 / (t * t + eps * eps), 0.0)];
        let v = adaptive_legendre(1, -1.0, 1.0, 1e-12, &mut f).unwrap();
        let exact = 2.0 / eps * (1.0 / eps).atan();
        assert!((v[0].re - exact).abs() < 1e-9 * exact);
    }
}
