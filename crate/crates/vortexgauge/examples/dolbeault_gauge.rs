//! Solves for the Dolbeault gauge of A^n on genus 2, compares it with y^b and
//! carries the d-bar kernel to holomorphic functions.

use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::gauge_fields::Connection;
use vortexgauge::holomorphization::{ef_bundle_degree_check, kernel_transport, solve_dolbeault};
use vortexgauge::hyperbolic::{build_fuchsian_group, build_mesh, Geometry};
use vortexgauge::spectral::{assemble_laplacian, dbar_kernel, kernel_window};
use vortexgauge::Result;

fn main() -> Result<()> {
    let f = AutomorphyFactor::hyperbolic(3, 2, Character::trivial(4))?;
    for res in [8, 16, 32] {
        let mesh = build_mesh(&Geometry::Hyperbolic(build_fuchsian_group(2)?), res)?;
        let a = Connection::reference(&f, &mesh)?;
        let g = solve_dolbeault(&a, &mesh)?;
        let sp = assemble_laplacian(&a, &mesh)?;
        let k = dbar_kernel(&sp, &mesh, kernel_window(sp.h))?;
        let t = kernel_transport(&g, &mesh, &k.sections);
        println!(
            "res {res:>2}: ratio residual {:.2e} (10h^2 = {:.2e}), kernel {} -> {}, d-bar residual {:.2e}",
            g.ratio_residual(&mesh),
            10.0 * sp.h * sp.h,
            t.dimension_in,
            t.dimension_out,
            t.max_dbar_residual
        );
    }
    for (n, genus) in [(1, 2), (2, 3), (0, 2)] {
        let r = ef_bundle_degree_check(n, genus, 8)?;
        println!(
            "n = {n}, g = {genus}: weight {}, deg(E x F) = {}, deg F = {}, flux {:.6}",
            r.weight, r.degree_ef, r.degree_f, r.flux_ef
        );
    }
    Ok(())
}
