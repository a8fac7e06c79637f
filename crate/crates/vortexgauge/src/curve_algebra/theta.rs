use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Squared ellipsoid radius of the default truncation: the terms left out
/// are below `exp(-pi R^2) ~ 1e-18` of the leading one.
pub const DEFAULT_RADIUS_SQ: f64 = 13.0;

/// Arguments of a theta evaluation.
#[derive(Clone, Debug)]
pub struct ThetaParams {
    pub z: Vec<C>,
    pub tau: DMatrix<C>,
    pub radius: f64,
}

impl ThetaParams {
    pub fn new(z: Vec<C>, tau: DMatrix<C>) -> Self {
        Self { z, tau, radius: DEFAULT_RADIUS_SQ.sqrt() }
    }
}

/// Value, gradient in `z`, and the modulus of the largest term of the sum.
#[derive(Clone, Debug)]
pub struct ThetaValue {
    pub value: C,
    pub gradient: Vec<C>,
    pub leading: f64,
}

fn imag_part(tau: &DMatrix<C>) -> DMatrix<f64> {
    tau.map(|z| z.im)
}

/// Fails with a domain error unless `Im tau` is positive definite.
pub fn check_tau(tau: &DMatrix<C>) -> Result<DMatrix<f64>> {
    let y = imag_part(tau);
    let sym = (&y + y.transpose()) * 0.5;
    let min = sym.clone().symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::Domain(format!("Im tau is not positive definite (smallest eigenvalue {min:e})")));
    }
    Ok(sym)
}

/// Visits every integer vector with `(N - c)^T Y (N - c) <= r^2`.
fn for_each_lattice_point(y: &DMatrix<f64>, c: &[f64], r: f64, mut visit: impl FnMut(&[i64])) {
    let g = c.len();
    let yinv = y.clone().try_inverse().expect("positive definite");
    let lo: Vec<i64> = (0..g).map(|i| (c[i] - r * yinv[(i, i)].sqrt()).ceil() as i64).collect();
    let hi: Vec<i64> = (0..g).map(|i| (c[i] + r * yinv[(i, i)].sqrt()).floor() as i64).collect();
    if (0..g).any(|i| lo[i] > hi[i]) {
        return;
    }
    let mut n = lo.clone();
    loop {
        let d = DVector::from_iterator(g, (0..g).map(|i| n[i] as f64 - c[i]));
        if (d.transpose() * y * &d)[(0, 0)] <= r * r {
            visit(&n);
        }
        let mut i = 0;
        loop {
            if i == g {
                return;
            }
            n[i] += 1;
            if n[i] <= hi[i] {
                break;
            }
            n[i] = lo[i];
            i += 1;
        }
    }
}

/// The exponent `2 pi i (N^T tau N / 2 + N^T z)`.
fn exponent(tau: &DMatrix<C>, z: &[C], n: &[i64]) -> C {
    let g = z.len();
    let mut q = C::new(0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            q += tau[(i, j)] * (n[i] * n[j]) as f64;
        }
    }
    let lin: C = (0..g).map(|i| z[i] * n[i] as f64).sum();
    C::new(0.0, 2.0 * PI) * (q * 0.5 + lin)
}

/// Truncated theta sum with gradient.
pub fn theta_full(params: &ThetaParams) -> Result<ThetaValue> {
    let y = check_tau(&params.tau)?;
    let g = params.z.len();
    if params.tau.nrows() != g || params.tau.ncols() != g {
        return Err(Error::Domain("tau and z dimensions differ".into()));
    }
    let yinv = y.clone().try_inverse().expect("positive definite");
    let imz = DVector::from_iterator(g, params.z.iter().map(|z| z.im));
    let centre = -(&yinv * imz);
    let mut terms: Vec<(C, Vec<i64>)> = Vec::new();
    for_each_lattice_point(&y, centre.as_slice(), params.radius, |n| {
        terms.push((exponent(&params.tau, &params.z, n), n.to_vec()))
    });
    if terms.is_empty() {
        // the ellipsoid always contains the rounded centre for r >= sqrt(g)/2 * |Y|
        let n: Vec<i64> = centre.iter().map(|c| c.round() as i64).collect();
        terms.push((exponent(&params.tau, &params.z, &n), n));
    }
    let shift = terms.iter().map(|(e, _)| e.re).fold(f64::NEG_INFINITY, f64::max);
    let mut value = C::new(0.0, 0.0);
    let mut gradient = vec![C::new(0.0, 0.0); g];
    for (e, n) in &terms {
        let t = (e - shift).exp();
        value += t;
        for i in 0..g {
            gradient[i] += t * C::new(0.0, 2.0 * PI * n[i] as f64);
        }
    }
    let scale = shift.exp();
    Ok(ThetaValue { value: value * scale, gradient: gradient.into_iter().map(|v| v * scale).collect(), leading: scale })
}

/// `theta(z, tau)`.
pub fn theta(params: &ThetaParams) -> Result<C> {
    Ok(theta_full(params)?.value)
}

/// Plain sum over the box `|N_i| <= bound`, with its own exponent
/// arithmetic; an independent reference.
pub fn theta_brute_force(z: &[C], tau: &DMatrix<C>, bound: i64) -> C {
    let g = z.len();
    let zv = DVector::from_column_slice(z);
    let mut n = vec![bound; g];
    let mut sum = C::new(0.0, 0.0);
    loop {
        let nv = DVector::from_iterator(g, n.iter().map(|&k| C::new(k as f64, 0.0)));
        let q = (nv.transpose() * tau * &nv)[(0, 0)] * 0.5 + (nv.transpose() * &zv)[(0, 0)];
        sum += (C::new(0.0, 2.0 * PI) * q).exp();
        let mut i = g;
        loop {
            if i == 0 {
                return sum;
            }
            i -= 1;
            n[i] -= 1;
            if n[i] >= -bound {
                break;
            }
            n[i] = bound;
        }
    }
}

/// Relative residual of `theta(z + tau N) = exp(-2 pi i (N^T tau N / 2 + N^T z)) theta(z)`.
pub fn quasiperiod_residual(tau: &DMatrix<C>, z: &[C], n: &[i64]) -> Result<f64> {
    let g = z.len();
    let shifted: Vec<C> = (0..g).map(|i| z[i] + (0..g).map(|j| tau[(i, j)] * n[j] as f64).sum::<C>()).collect();
    let lhs = theta_full(&ThetaParams::new(shifted, tau.clone()))?;
    let rhs = theta(&ThetaParams::new(z.to_vec(), tau.clone()))? * (-exponent(tau, z, n)).exp();
    Ok((lhs.value - rhs).norm() / lhs.leading.max(lhs.value.norm()))
}
