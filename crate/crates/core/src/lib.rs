//! Linearized KdV solver with discrete transparent boundary conditions.

pub mod banded;
pub mod config;
pub mod error;
pub mod experiments;
pub mod problem;
pub mod reference;
pub mod kernels;
pub mod roots;
pub mod soe;
pub mod solver;
pub mod ztrans;

pub use error::{Error, Result};
pub use problem::{CharacteristicParams, InitialCondition, ProblemSpec, Scheme};
