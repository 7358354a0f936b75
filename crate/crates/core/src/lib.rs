//! Sobolev regularity of multivariate refinable functions.
//!
//! A refinable function solves φ(x) = Σ c_k φ(Mx − k) for an integer expanding
//! matrix M. Its L₂ Hölder exponent is read off from spectral radii of the
//! transition operator restricted to invariant subspaces of trigonometric
//! polynomials with prescribed zeros.

pub mod attractor;
pub mod bspline;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod maskdesign;
pub mod subdivision;
pub mod transition;
pub mod trigpoly;

pub use error::{Error, Result};
