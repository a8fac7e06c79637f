//! Sections, connections, curvature and covariant derivatives on a mesh.
//!
//! Sections are stored at quotient vertices and lifted to polygon nodes with
//! the automorphy factor. Connections are the analytic constant curvature
//! connection plus a real edge cochain. Two discretizations of the covariant
//! derivative coexist: edge based quadratic forms ([`FieldOperators`]), which
//! are exactly gauge invariant and feed the solvers, and one-ring least
//! squares derivatives ([`pointwise`]) for pointwise diagnostics.

mod complex;
mod connection;
mod operators;
pub mod pointwise;
mod section;

pub use complex::EdgeComplex;
pub use connection::{hodge_star_one_form, hodge_star_two_form, hodge_star_zero_form, Connection, PerturbationClass};
pub use operators::FieldOperators;
pub use pointwise::{covariant_gradient, dbar_a, dbar_norm, supercurrent, VertexStencils};
pub use section::{node_factors, EquivariantSection, VertexOneForm};
