//! Geodesic flows of one-sided invariant metrics on Lie groups.
//!
//! * [`lie_core`]: skew matrices, trace pairing, adjoint and coadjoint actions on `so(n)`.
//! * [`rigid_body`]: the free n-dimensional rigid body and its first integrals.
//! * [`euler_arnold`]: Euler-Arnold and Lie-Poisson machinery on a Lie algebra given by
//!   structure constants.
//! * [`circle_diff`]: `H^k` right-invariant geodesics on `Diff(S¹)` (Burgers for `k = 0`,
//!   Camassa-Holm for `k = 1`).

pub mod circle_diff;
pub mod error;
pub mod euler_arnold;
pub mod lie_core;
pub mod rigid_body;

pub use error::{Error, Result};
