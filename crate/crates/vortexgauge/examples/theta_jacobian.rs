//! Period matrix, theta function and Abel-Jacobi map of a genus-2 curve.

use vortexgauge::curve_algebra::{divisor_of_x_ratio, period_matrix, HyperellipticCurve, Sheet};
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
    println!("tau =\n{:.6}", ctx.tau);
    println!("symmetry defect {:.1e}, min eig Im tau {:.4}", ctx.symmetry_defect(), ctx.im_tau_min_eigenvalue());
    let p = curve.point(C::new(0.4, 0.3), Sheet::One);
    println!("Phi(P) = {:.6?}", ctx.abel_jacobi_point(&p)?);
    let t = ctx.theta_at(&ctx.riemann_constant)?;
    println!("|theta(kappa)| / leading = {:.2e}", t.value.norm() / t.leading);
    let d = divisor_of_x_ratio(&curve, C::new(0.1, 0.7), C::new(-0.8, -0.4));
    println!(
        "Abel: |Phi(div (x - c)/(x - d))| mod lattice = {:.1e}",
        ctx.lattice_norm(&ctx.abel_jacobi_unreduced(&d)?)
    );
    Ok(())
}
