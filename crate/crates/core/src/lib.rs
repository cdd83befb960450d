//! Numerical laboratory for rigidity of discrete-time overdetermined heat
//! problems.
//!
//! The Dirichlet heat flow with unit initial data is expanded in a P1 finite
//! element eigenbasis; boundary fluxes are recovered as consistent residual
//! functionals and tested for constancy. On top of that sit the torsion
//! (Serrin) reduction, the short-time heat-content fit, the interior-surface
//! check and a one-dimensional reduction for axisymmetric bands on the sphere.
//!
//! The layers, bottom-up:
//!
//! * [`geometry`]: structured and polygonal meshes, refinement, curvature.
//! * [`fem`]: stiffness, mass and boundary-mass matrices; Dirichlet solves.
//! * [`spectral`]: the Dirichlet eigenbasis and truncation control.
//! * [`heatflow`]: heat solution, conormal pairing, flux profiles.
//! * [`rigidity`]: torsion, heat content, curvature and interface checks.
//! * [`sphereband`]: caps and bands on the unit sphere.
//! * [`cli`]: the experiment driver behind the `heat-rigidity` binary.

pub mod cli;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod heatflow;
pub mod linalg;
pub mod rigidity;
pub mod sparse;
pub mod spectral;
pub mod sphereband;

pub use error::{Error, Result};
pub use fem::{assemble, SystemMatrices};
pub use geometry::{make_domain, make_domain_with, refine, DomainSpec, Family, Mesh, MeshOptions};
pub use heatflow::{boundary_flux, heat_solution, FluxProfile, HeatState};
pub use spectral::{eigenbasis, EigenBasis};

/// Crate version, recorded in every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
