//! Numerical toolkit for planar Cauchy-Green and Beurling transforms, the
//! Beltrami-type chart equation, and scale-resolved regularity measurements
//! near an isolated singularity.

pub mod acs;
pub mod beltrami;
pub mod coeff;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod fft;
pub mod field;
pub mod jet;
pub mod quadrature;
pub mod regularity;
pub mod transforms;

pub use error::{Error, Result};
