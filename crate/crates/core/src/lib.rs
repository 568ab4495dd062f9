//! Core numerics for a fourth-order nonlinear Schroedinger / Hartree solver
//! with time-dependent dispersion coefficients:
//!
//! ```text
//! i du/dt + alpha(t) Lap u + beta(t) Lap^2 u + theta (|x|^{-lambda} * |u|^2) u = 0
//! ```
//!
//! on a periodic box, discretized pseudospectrally. The linear flow is applied
//! exactly as a Fourier multiplier driven by cumulative dispersion integrals;
//! the nonlinear flow is handled by Strang splitting or a Duhamel/Picard
//! stepper. Diagnostics cover conserved quantities, Strichartz-type mixed
//! norms, functional-inequality ratios, and dispersion-averaging studies.

pub mod averaging;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod hartree;
pub mod integrator;
pub mod propagator;
pub mod reference;

pub use error::{Error, Result};
