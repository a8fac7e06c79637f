//! Continues the vortex branch bifurcating from the normal state on a
//! flux-1 torus and prints the scaling of mu(s).

use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::gauge_fields::Connection;
use vortexgauge::gl_solver::{build_reduced_system, continue_branch, scaling_report};
use vortexgauge::hyperbolic::{build_mesh, Geometry, TorusCell};
use vortexgauge::Result;

fn main() -> Result<()> {
    let cell = TorusCell::square(2.0, 1);
    let mesh = build_mesh(&Geometry::Torus(cell.clone()), 16)?;
    let f = AutomorphyFactor::torus(cell, Character::from_turns(&[0.15, 0.4]))?;
    let red = build_reduced_system(&Connection::reference(&f, &mesh)?, &mesh, 1.0)?;
    println!("b = {:.6}, lambda1 = {:.6}, gap {:.4}", red.b, red.lambda1, red.gap);
    let s: Vec<f64> = (0..6).map(|k| 0.0125 * 2f64.powi(k) / 2f64.sqrt().powi(k)).collect();
    let pts = continue_branch(&red, &s)?;
    for p in &pts {
        println!("s {:.4}  mu - lambda1 {:.6e}  residual {:.1e}", p.s, p.state.mu - red.lambda1, p.residual.total());
    }
    let rep = scaling_report(&red, &pts);
    println!("mu exponent {:.4}, |alpha|/s^2 drift {:.2e}", rep.mu_exponent, rep.alpha_ratio_drift);
    Ok(())
}
