//! Numerical laboratory for the critical Adams inequality on hyperbolic space H^{2k}.
//!
//! The Poincaré ball model is discretized radially; on top of it live the GJMS
//! operator P_k, the Adams functional and its sharp constants, the concentrating
//! extremal family, and a variational solver for P_k u + Q₁ = Q₂ e^{2u}.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ball_model;
pub mod banded;
pub mod disk;
pub mod error;
pub mod extremals;
pub mod families;
pub mod inequalities;
pub mod operators;
pub mod pde;
pub mod quadrature;
pub mod special;

pub use ball_model::{DimensionParams, EuclideanRadius, Measure, RadialFunction, RadialGrid};
pub use banded::BandMatrix;
pub use error::{Error, Result};
pub use extremals::{BlowupRecord, MoserProfile};
pub use families::{BumpMixture, PolynomialBump, RadialFamily};
pub use inequalities::SharpConstants;
pub use operators::{DiscreteOperator, EnergyReport};
pub use pde::{PdeMode, PdeProblem, SolveResult};
