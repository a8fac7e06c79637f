use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat torus `C / (Z w1 + Z w2)` carrying `n_flux` flux quanta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusCell {
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub n_flux: i64,
}

impl TorusCell {
    pub fn new(omega1: Complex64, omega2: Complex64, n_flux: i64) -> Result<Self> {
        if !((omega1.conj() * omega2).im > 0.0) {
            return Err(Error::Domain("torus lattice must satisfy Im(conj(w1) w2) > 0".into()));
        }
        Ok(Self { omega1, omega2, n_flux })
    }

    /// Square torus of the given side length.
    pub fn square(side: f64, n_flux: i64) -> Self {
        Self { omega1: Complex64::new(side, 0.0), omega2: Complex64::new(0.0, side), n_flux }
    }

    pub fn area(&self) -> f64 {
        (self.omega1.conj() * self.omega2).im
    }

    /// Constant magnetic field `2 pi n / |X|`.
    pub fn field(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.n_flux as f64 / self.area()
    }

    pub fn lattice_point(&self, m1: i64, m2: i64) -> Complex64 {
        self.omega1 * m1 as f64 + self.omega2 * m2 as f64
    }

    pub fn tau(&self) -> Complex64 {
        self.omega2 / self.omega1
    }
}
