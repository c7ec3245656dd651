//! Pseudo-spectral solvers for the one-phase Muskat problem on a periodic
//! strip of finite depth.

pub mod dn;
pub mod error;
pub mod evolution;
pub mod io;
pub mod linear;
pub mod norms;
pub mod spectral;
pub mod util;
pub mod wave;

pub use error::{Error, Result};
pub use spectral::{DomainSpec, Multiplier, StripField, SurfaceField};
