//! Builds the genus-2 octagon group and a mesh of the quotient surface.

use vortexgauge::hyperbolic::{build_fuchsian_group, build_mesh, Geometry};
use vortexgauge::Result;

fn main() -> Result<()> {
    let group = build_fuchsian_group(2)?;
    println!("relation residual {:.2e}", group.relation_residual());
    println!("inradius {:.6}, circumradius {:.6}", group.inradius(), group.circumradius());
    let mesh = build_mesh(&Geometry::Hyperbolic(group), 16)?;
    println!(
        "{} vertices, {} cells, area {:.6} (4 pi = {:.6}), h = {:.4}",
        mesh.n_vertices(),
        mesh.n_cells(),
        mesh.total_area(),
        4.0 * std::f64::consts::PI,
        mesh.max_edge_length()
    );
    println!("deck residual {:.2e}, pairing residual {:.2e}", mesh.deck_residual(), mesh.pairing_residual());
    Ok(())
}
