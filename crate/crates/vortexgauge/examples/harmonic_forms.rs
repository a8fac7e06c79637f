//! Harmonic one-forms by two routes and a Hodge decomposition.

use rand::{Rng, SeedableRng};
use vortexgauge::hodge::{harmonic_basis, hodge_decomposition, maxwell_kernel_check, HodgeOperators};
use vortexgauge::hyperbolic::{build_fuchsian_group, build_mesh, Geometry};
use vortexgauge::Result;

fn main() -> Result<()> {
    let mesh = build_mesh(&Geometry::Hyperbolic(build_fuchsian_group(2)?), 12)?;
    let ops = HodgeOperators::new(&mesh)?;
    let basis = harmonic_basis(&ops)?;
    println!("harmonic dimension {} (2g = 4), gap {:.3e}", basis.dimension(), basis.gap);
    let mx = maxwell_kernel_check(&ops)?;
    println!("cohomology route dimension {}, max principal angle {:.2e}", mx.dimension, mx.max_angle());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let alpha: Vec<f64> = (0..ops.n_edges()).map(|_| rng.random::<f64>() - 0.5).collect();
    let d = hodge_decomposition(&alpha, &basis, &ops)?;
    println!(
        "|exact| {:.4}, |coexact| {:.4}, |harmonic| {:.4}, orthogonality {:.1e}",
        ops.norm(&d.exact),
        ops.norm(&d.coexact),
        ops.norm(&d.harmonic),
        d.orthogonality_residual(&ops)
    );
    Ok(())
}
