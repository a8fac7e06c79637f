//! Upper half-plane geometry, Fuchsian groups and surface meshes.

mod group;
mod mesh;
mod moebius;
mod torus;

pub use group::{
    build_fuchsian_group, build_fuchsian_group_with, DeckElement, FuchsianGroup, GroupElement, Letter, PairingScheme,
    SidePairing,
};
pub use mesh::{build_mesh, BoundaryPair, Geometry, GeometryKind, SurfaceMesh};
pub use moebius::{
    disk_to_half_plane, geodesic_dx_over_y, geodesic_triangle_area, half_plane_to_disk, hyperbolic_distance,
    moebius_apply, MoebiusTransform,
};
pub use torus::TorusCell;
