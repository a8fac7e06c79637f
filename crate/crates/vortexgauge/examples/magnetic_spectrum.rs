//! Bottom of the magnetic Laplacian on a flux-3 torus and on genus 2, with
//! the d-bar kernel compared against the lowest Landau level count.

use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::gauge_fields::Connection;
use vortexgauge::hyperbolic::{build_fuchsian_group_with, build_mesh, Geometry, PairingScheme, TorusCell};
use vortexgauge::spectral::{assemble_laplacian, dbar_kernel, kernel_window, LandauLevel};
use vortexgauge::Result;

fn main() -> Result<()> {
    let cell = TorusCell::square(2.0, 3);
    let sigma = Character::from_turns(&[0.2, -0.1]);
    let mesh = build_mesh(&Geometry::Torus(cell.clone()), 24)?;
    let a = Connection::reference(&AutomorphyFactor::torus(cell.clone(), sigma.clone())?, &mesh)?;
    let sp = assemble_laplacian(&a, &mesh)?;
    let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h))?;
    println!("torus: b = {:.6}, kernel eigenvalues {:?}", sp.b, k.eigenvalues);
    println!(
        "kernel dimension {}, Landau level count {}",
        k.sections.len(),
        LandauLevel::new(&cell, &sigma)?.dimension()
    );

    let group = build_fuchsian_group_with(2, PairingScheme::Opposite)?;
    let mesh = build_mesh(&Geometry::Hyperbolic(group), 24)?;
    let f = AutomorphyFactor::hyperbolic(1, 2, Character::from_turns(&[0.5, 0.0, 0.0, 0.0]))?;
    let sp = assemble_laplacian(&Connection::reference(&f, &mesh)?, &mesh)?;
    let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h))?;
    println!("genus 2: b = {:.6}, kernel eigenvalues {:?}, next {:.4}", sp.b, k.eigenvalues, k.next_eigenvalue);
    Ok(())
}
