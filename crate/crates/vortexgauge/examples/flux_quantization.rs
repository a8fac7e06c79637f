//! Flux and pointwise curvature of the constant curvature connection under
//! refinement.

use vortexgauge::automorphy::{AutomorphyFactor, Character};
use vortexgauge::gauge_fields::{Connection, EdgeComplex};
use vortexgauge::hyperbolic::{build_fuchsian_group, build_mesh, Geometry};
use vortexgauge::Result;

fn main() -> Result<()> {
    let (n, genus) = (4, 3);
    let f = AutomorphyFactor::hyperbolic(n, genus, Character::trivial(2 * genus))?;
    for res in [4, 8, 16] {
        let mesh = build_mesh(&Geometry::Hyperbolic(build_fuchsian_group(genus)?), res)?;
        let a = Connection::reference(&f, &mesh)?;
        let cx = EdgeComplex::new(&mesh);
        let err = a.curvature_pointwise(&mesh, &cx).iter().map(|c| (c - a.b()).abs()).fold(0.0, f64::max);
        println!(
            "res {res:>2}: flux {:.12}, max |*F - b| = {err:.3e}, equivariance {:.1e}",
            a.total_flux(&mesh),
            a.equivariance_residual(&mesh)
        );
    }
    Ok(())
}
