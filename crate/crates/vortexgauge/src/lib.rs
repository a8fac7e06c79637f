//! Numerical Ginzburg-Landau theory on compact Riemann surfaces.
//!
//! The crate builds surfaces as quotients of the upper half-plane by a
//! Fuchsian group (or flat tori), carries line-bundle data through explicit
//! automorphy factors, and provides the operators needed to find vortex
//! solutions bifurcating from the normal state:
//!
//! * [`hyperbolic`]: Moebius maps, Fuchsian groups of regular 4g-gons, meshes.
//! * [`automorphy`]: automorphy factors, characters and the cocycle relation.
//! * [`gauge_fields`]: connections, curvature, flux, covariant derivatives.
//! * [`spectral`]: the magnetic Laplacian, its low spectrum and the d-bar kernel.
//! * [`hodge`]: discrete exterior calculus and harmonic one-forms.
//! * [`gl_solver`]: Lyapunov-Schmidt reduction and branch continuation.
//! * [`curve_algebra`]: hyperelliptic periods, theta functions, Abel-Jacobi.
//! * [`holomorphization`]: the Dolbeault gauge and tilde automorphy.
//! * [`cli`]: configuration and the subcommands behind the `vortexgauge` binary.
//!
//! Conventions: the covariant derivative is `d - iA`, so a section transforms
//! as `psi -> e^{i chi} psi` together with `A -> A + d chi`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod automorphy;
pub mod cli;
pub mod curve_algebra;
pub mod error;
pub mod gauge_fields;
pub mod gl_solver;
pub mod hodge;
pub mod holomorphization;
pub mod hyperbolic;
pub mod linalg;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
