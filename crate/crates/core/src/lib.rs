//! Numerical laboratory for long-range quasi-periodic operators with
//! singular potentials: circle arithmetic, Cartan-type lower bounds,
//! sublevel-set measures, bounded-entry determinant factorization, Green's
//! function decay, and desk-scale localization experiments.

pub mod cartan;
pub mod functions;
mod fit;
pub mod localization;
pub mod spectral;
pub mod sublevel;
pub mod torus;

pub use fit::LineFit;
