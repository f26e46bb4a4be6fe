//! Spreading-speed laboratory for the monostable Lotka-Volterra
//! competition-diffusion system
//!
//! ```text
//!   u_t = d1 Δu + r1 u (1 - u - a1 v)
//!   v_t = d2 Δv + r2 v (1 - v - a2 u)      0 < a1 < 1 < a2
//! ```
//!
//! on masked 2D domains with zero-flux boundaries. The crate evolves the
//! system with a comparison-principle-preserving scheme, measures upper and
//! lower spreading speeds of the invader along directional tubes, computes
//! the planar minimal wave speed by shooting, and checks the closed-form
//! speed bounds, supersolution constructions and eigenvalue estimates that
//! govern the front behaviour.
//!
//! Modules mirror the pipeline:
//!
//! * [`params`]    - kinetic parameters, closed-form speeds, determinacy tests
//! * [`kinetics`]  - spatially homogeneous reaction layer and its ODE flow
//! * [`domain`]    - masked-grid domain generators and geometric queries
//! * [`solver`]    - the finite-volume PDE stepper (explicit and IMEX)
//! * [`waves`]     - planar traveling-wave shooting and PDE front speeds
//! * [`speeds`]    - front tracing and spreading-speed regression
//! * [`analysis`]  - supersolution residuals, ball eigenvalues, cusp checks
//! * [`presets`]   - named end-to-end verification experiments
//! * [`config`]    - the experiment configuration file schema

pub mod analysis;
pub mod config;
pub mod domain;
pub mod kinetics;
pub mod numeric;
pub mod params;
pub mod presets;
pub mod solver;
pub mod speeds;
pub mod waves;

pub use domain::{DomainMask, GridGeom};
pub use params::KineticParams;

