//! Finite-element solver for nonlinear small-strain elasticity with constant
//! shear modulus and Orlicz-growth bulk energy.

pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod expr;
pub mod identity;
pub mod mesh;
pub mod nfunction;
pub mod numeric;
pub mod output;
pub mod par;
pub mod sparse;
pub mod solver;
pub mod tensor;
pub mod tensorfield;
pub mod verify;

pub use config::CaseConfig;
pub use energy::{EnergyBreakdown, Problem};
pub use error::{Error, Result};
pub use mesh::{BoundaryTag, DofMap, Mesh, RectangleSides};
pub use nfunction::{Family, NFunction, Params};
pub use solver::{solve, InitialGuess, SolveReport, SolverConfig};
pub use tensorfield::{DisplacementField, LoadTensor};
