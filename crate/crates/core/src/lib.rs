//! Exact finite-field computations behind the closed-point sieve for
//! hypersurface sections containing a fixed subscheme.

pub mod density;
pub mod error;
pub mod geom;
pub mod gf;
pub mod linalg;
pub mod mpoly;

pub use error::{Error, Result};
