//! Order-(v/c)² classical electrodynamics of charges, magnetic moments,
//! flux lines and line charges: Darwin two-body dynamics, constrained and
//! unconstrained equations of motion, field and hidden momentum, quantum
//! phases and SI order-of-magnitude estimates.

pub mod constrained;
pub mod darwin;
pub mod dims;
pub mod error;
pub mod estimates;
pub mod field_momentum;
pub mod lagrangian;
pub mod model;
pub mod phase;
pub mod quadrature;
pub mod sim;
pub mod unconstrained;
pub mod vector;

pub use error::{Error, Result};
pub use model::{Context, MomentDensity, Units};
pub use vector::Vec3;
