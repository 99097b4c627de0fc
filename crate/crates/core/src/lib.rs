//! LP-update policies for finite-horizon weakly coupled MDPs.
//!
//! A population of `N` identical arms evolves under shared per-epoch budgets.
//! The crate solves the relaxed linear program, inspects its degeneracy,
//! rounds fractional decisions to integer ones and evaluates LP-update and
//! benchmark policies by Monte Carlo. All numerical types are generic over
//! `f32` and `f64`; the aliases below fix the precision.

pub mod casestudy;
pub mod degeneracy;
pub mod error;
pub mod model;
pub mod numerics;
pub mod policies;
pub mod relaxation;
pub mod rounding;
pub mod scalar;
pub mod simulator;
pub mod tolerance;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tolerance::Tolerances;

pub type Model = model::WcMdpModel<f64>;
pub type Config = model::ConfigVector<f64>;
pub type Decision = model::DecisionVector<f64>;
pub type Epoch = model::EpochParams<f64>;
pub type Solution = relaxation::RelaxedSolution<f64>;

pub type ModelF32 = model::WcMdpModel<f32>;
pub type ConfigF32 = model::ConfigVector<f32>;
pub type DecisionF32 = model::DecisionVector<f32>;
pub type EpochF32 = model::EpochParams<f32>;
pub type SolutionF32 = relaxation::RelaxedSolution<f32>;
