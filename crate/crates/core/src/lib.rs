//! Numerical toolkit for the space of null geodesics of Lorentzian
//! spacetimes: cogeodesic flow, causal relations on product spacetimes over
//! surfaces of revolution, non-Hausdorff limit detection and the quotient
//! Jacobi equation.

pub mod causal;
pub mod config;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod jacobi;
pub mod metrics;
pub mod nullspace;
pub mod ode;
pub mod quad;
pub mod scenario;
pub mod surface;

pub use error::{GeoError, Result};
