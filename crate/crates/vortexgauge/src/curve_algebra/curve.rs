use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y^2 = prod_k (x - e_k)` with `2g + 1` or `2g + 2` finite branch points.
///
/// Branch points are stored sorted by real part (then imaginary part). The
/// cuts join consecutive pairs `[e_0, e_1], [e_2, e_3], ...`; for an odd count
/// the last cut runs from the last branch point horizontally to the right.
/// Sorting by real part keeps the cuts and the gaps between them disjoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticCurve {
    pub branch_points: Vec<C>,
    pub genus: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    One,
    Two,
}

/// A finite point `(x, y)` on the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: C,
    pub y: C,
}

impl CurvePoint {
    /// The hyperelliptic involution `(x, y) -> (x, -y)`.
    pub fn involution(&self) -> Self {
        Self { x: self.x, y: -self.y }
    }
}

/// A finite formal sum of curve points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    pub points: Vec<(CurvePoint, i64)>,
}

impl Divisor {
    pub fn effective(points: &[CurvePoint]) -> Self {
        Self { points: points.iter().map(|&p| (p, 1)).collect() }
    }

    pub fn degree(&self) -> i64 {
        self.points.iter().map(|(_, m)| m).sum()
    }

    pub fn is_effective(&self) -> bool {
        self.points.iter().all(|(_, m)| *m > 0)
    }

    /// Points listed with repetition, for effective divisors.
    pub fn support_with_multiplicity(&self) -> Vec<CurvePoint> {
        self.points.iter().flat_map(|&(p, m)| std::iter::repeat_n(p, m.max(0) as usize)).collect()
    }

    pub fn sub(&self, other: &Divisor) -> Divisor {
        let mut points = self.points.clone();
        points.extend(other.points.iter().map(|&(p, m)| (p, -m)));
        Divisor { points }
    }
}

/// Smallest allowed distance between branch points.
pub const MIN_SEPARATION: f64 = 1e-8;

impl HyperellipticCurve {
    pub fn new(points: &[C]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Domain(format!("need at least 3 branch points, got {}", points.len())));
        }
        for (i, a) in points.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::Domain("branch points must be finite".into()));
            }
            for b in &points[i + 1..] {
                if (a - b).norm() <= MIN_SEPARATION {
                    return Err(Error::Domain(format!("branch points {a} and {b} collide")));
                }
            }
        }
        let mut branch_points = points.to_vec();
        branch_points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let genus = (points.len() - 1) / 2;
        Ok(Self { branch_points, genus })
    }

    pub fn odd(&self) -> bool {
        self.branch_points.len() % 2 == 1
    }

    /// `f(x) = prod (x - e_k)`.
    pub fn f(&self, x: C) -> C {
        self.branch_points.iter().map(|e| x - e).product()
    }

    /// `f'(x)`.
    pub fn df(&self, x: C) -> C {
        let n = self.branch_points.len();
        (0..n)
            .map(|skip| {
                self.branch_points.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, e)| x - e).product::<C>()
            })
            .sum()
    }

    /// A length scale of the branch point configuration.
    pub fn scale(&self) -> f64 {
        let c = self.centroid();
        self.branch_points.iter().map(|e| (e - c).norm()).fold(0.0, f64::max).max(1e-300)
    }

    pub fn centroid(&self) -> C {
        self.branch_points.iter().sum::<C>() / self.branch_points.len() as f64
    }

    /// Number of cuts, including the ray to infinity for an odd count.
    pub fn n_cuts(&self) -> usize {
        self.branch_points.len().div_ceil(2)
    }

    /// The sheet-one branch of `y`, evaluated from the differences
    /// `d_k = x - e_k`. Analytic off the cuts.
    pub fn sheet_one_from_differences(&self, d: &[C]) -> C {
        let n = self.branch_points.len();
        let mut y = C::new(1.0, 0.0);
        for j in 0..n / 2 {
            let (da, db) = (d[2 * j], d[2 * j + 1]);
            if db == C::new(0.0, 0.0) {
                return C::new(0.0, 0.0);
            }
            y *= db * (da / db).sqrt();
        }
        if n % 2 == 1 {
            y *= C::i() * (-d[n - 1]).sqrt();
        }
        y
    }

    pub fn sheet_one(&self, x: C) -> C {
        let d: Vec<C> = self.branch_points.iter().map(|e| x - e).collect();
        self.sheet_one_from_differences(&d)
    }

    /// The point over `x` on the given sheet.
    pub fn point(&self, x: C, sheet: Sheet) -> CurvePoint {
        let y = self.sheet_one(x);
        CurvePoint { x, y: if sheet == Sheet::One { y } else { -y } }
    }

    /// Validates a user supplied point.
    pub fn point_xy(&self, x: C, y: C) -> Result<CurvePoint> {
        let f = self.f(x);
        if (y * y - f).norm() > 1e-8 * f.norm().max(1.0) {
            return Err(Error::Domain(format!("({x}, {y}) is not on the curve")));
        }
        Ok(CurvePoint { x, y })
    }

    /// Index of the branch point at `p`, if any.
    pub fn branch_index(&self, p: &CurvePoint) -> Option<usize> {
        self.branch_points.iter().position(|e| (e - p.x).norm() <= 1e-12 * self.scale())
    }

    pub fn branch_point(&self, k: usize) -> CurvePoint {
        CurvePoint { x: self.branch_points[k], y: C::new(0.0, 0.0) }
    }

    /// Residual `|y^2 - f(x)|` relative to `max(|f|, 1)`.
    pub fn residual(&self, p: &CurvePoint) -> f64 {
        let f = self.f(p.x);
        (p.y * p.y - f).norm() / f.norm().max(1.0)
    }
}
