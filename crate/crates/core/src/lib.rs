//! Stationary analysis, exact simulation, and large-deviation calculus for the
//! symmetric birth–death chain on `{1, …, N}` with rates `λm` up and `λm` down.
//!
//! The analytic modules are generic over [`Real`]; the aliases below pin the
//! common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod ldp;
pub mod markov;
pub mod optimal;
#[allow(clippy::excessive_precision)]
pub mod quadrature;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModelParams = markov::ModelParams<f64>;
pub type ProbabilityVector = markov::ProbabilityVector<f64>;
pub type GridPath = ldp::GridPath<f64>;
pub type ParabolaParams = optimal::ParabolaParams<f64>;
pub type GeneratorMatrix = evolution::GeneratorMatrix<f64>;

pub type ModelParams32 = markov::ModelParams<f32>;
pub type ProbabilityVector32 = markov::ProbabilityVector<f32>;
pub type ParabolaParams32 = optimal::ParabolaParams<f32>;
