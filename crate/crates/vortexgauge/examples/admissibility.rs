//! Admissibility certificates of divisors and the Baker-Akhiezer section of
//! an admissible one.

use vortexgauge::curve_algebra::{is_admissible, period_matrix, BakerAkhiezer, Divisor, HyperellipticCurve, Sheet};
use vortexgauge::{Complex64 as C, Result};

fn main() -> Result<()> {
    let curve = HyperellipticCurve::new(&[
        C::new(-1.5, 0.1),
        C::new(-0.4, -0.3),
        C::new(0.3, 0.5),
        C::new(1.2, -0.1),
        C::new(2.0, 0.2),
    ])?;
    let ctx = period_matrix(&curve)?;
    let p = curve.point(C::new(0.5, 0.6), Sheet::One);
    let q = curve.point(C::new(-0.9, -0.5), Sheet::Two);
    for (name, d) in [
        ("P", Divisor::effective(&[p])),
        ("P + Q", Divisor::effective(&[p, q])),
        ("P + iota P", Divisor::effective(&[p, p.involution()])),
        ("P + Q + P", Divisor::effective(&[p, q, p])),
    ] {
        println!("{name:>12}: {:?}", is_admissible(&ctx, &d)?);
    }
    let ba = BakerAkhiezer::new(&ctx, &Divisor::effective(&[p, q]), &curve.point(C::new(0.9, 0.8), Sheet::One))?;
    for eps in [1e-2, 1e-3, 1e-4] {
        let v = ba.value(&ctx, &curve.point(p.x + eps, Sheet::One))?;
        println!("|s(P + {eps:.0e})| = {:.3e}", v.norm());
    }
    Ok(())
}
