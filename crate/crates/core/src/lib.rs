//! Geometry of quantum state spaces under the quantum divergence.
//!
//! * [`states`]: density matrices, Bloch/generalized/dual coordinates, matrix functions.
//! * [`metrics`]: divergence, Bures, Fubini-Study, Euclidean and geodesic distances,
//!   entropy and the Bregman potentials.
//! * [`channels`]: Kraus channels.
//! * [`mesh`]: deterministic pure-state meshes.
//! * [`seb`]: Welzl smallest enclosing balls for Euclidean points and for the divergence.
//! * [`capacity`]: Holevo capacity as the divergence radius of the channel image.
//! * [`voronoi`]: bisector gaps and sign-agreement audits between distance measures.

pub mod capacity;
pub mod channels;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod seb;
pub mod states;
pub mod tol;
pub mod voronoi;

pub use error::{Error, Result};
