//! Finite-element solver for two-phase incompressible flow with moving
//! contact lines: a linear, decoupled, energy-stable scheme for the coupled
//! Navier-Stokes / Allen-Cahn system with generalized Navier slip boundary
//! conditions.

pub mod experiments;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod stepper;
