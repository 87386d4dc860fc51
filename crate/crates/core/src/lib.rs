//! Expected-visit counts and absorption distributions for lattice random
//! walks with geometric absorption.
//!
//! Three models are supported: the asymmetric walk on the integers, the
//! symmetric walk on the n-dimensional lattice, and a walk on two coupled
//! copies of the integers. Exact values come from [`closed_form`] and
//! [`quadrature`]; [`oracles`] provides Monte Carlo and truncated-lattice
//! references to check them against.

pub mod closed_form;
pub mod error;
pub mod model;
pub mod oracles;
pub mod quadrature;

pub use error::{Error, Result};
pub use model::{
    make_two_level, make_walk_1d, make_walk_nd, recurrence_residual, survival_factor, LatticeState,
    Level, Model, ModelKind, Move, TwoLevelModel, VisitFunction, Walk1DModel, WalkModel,
    WalkNDModel,
};
