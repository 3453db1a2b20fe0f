#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod conformal;
pub mod curvature;
pub mod error;
pub mod field;
pub mod linalg;
pub mod radial;
pub mod sampling;
pub mod stencil;
pub mod suites;

pub use error::{Error, Result};
