//! Numerical laboratory for the aggregation-reaction-diffusion equation
//!
//! ```text
//! ∂t u = Δ[(a − b u) u] + (c − d u) u
//! ```
//!
//! on bounded domains. The crate bundles explicit conservative solvers for the
//! local equation and its mollified nonlocal regularization, exact
//! Barenblatt-type profiles used as oracles, blow-up functionals (Kaplan and
//! concavity), a static classifier for the known sufficient conditions, and a
//! mean-field particle simulator.
//!
//! Module map:
//! - [`model`]: coefficients, flux/reaction algebra, `u ↔ v` shift.
//! - [`grid`]: uniform grids, fields and the conservative face stencil.
//! - [`eigen`]: first Dirichlet eigenpair and the Neumann spectrum.
//! - [`exact`]: Barenblatt bumps and multi-bump configurations.
//! - [`pde`]: time stepping for the local and nonlocal models.
//! - [`diagnostics`]: mass, entropy, Kaplan and concavity functionals.
//! - [`regimes`]: parameter-space certificates.
//! - [`particles`]: interacting particle system and KDE comparison.

pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod grid;
pub mod io;
pub mod model;
pub mod particles;
pub mod pde;
pub mod quad;
pub mod regimes;

pub use error::{Error, Result};
pub use grid::{BoundaryKind, Field, Geometry, Grid, Variable};
pub use model::Params;
