//! Numerical laboratory for reaction-diffusion equations
//! `u_t = L u + f(x, u)` with super-linear absorption.
//!
//! * [`nonlinearity`]: catalog of reaction terms, envelopes, growth classifiers
//!   and the improper-integral (Osgood) test.
//! * [`ode_oracle`]: scalar comparison ODE `v' = G(v)`, the solution from
//!   infinity and the largest-root long-time limit.
//! * [`barriers`]: explicit super-solutions, their derivative calculus and
//!   grid residual certificates; closed-form stationary solutions.
//! * [`pde_lab`]: finite-difference solver and truncated/forced problems used
//!   to exhibit universal bounds, uniqueness and nonuniqueness.

pub mod barriers;
pub mod coeff;
pub mod error;
pub mod nonlinearity;
pub mod ode_oracle;
pub mod pde_lab;
pub mod quad;
pub mod rate;
pub mod tridiag;

pub use error::{Error, Result};
