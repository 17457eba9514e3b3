//! Numerical laboratory for `-Δu = λ|u|^{β-1}u - |u|^{α-1}u` on axisymmetric
//! star-shaped domains: radial barriers and flat-hat shooting, a certified
//! dumbbell geometry, weighted P1 finite elements in the meridian plane,
//! regularized Newton continuation toward the extinction threshold, and
//! boundary-flux analysis.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod numerics;
pub mod pipeline;
pub mod radial;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
