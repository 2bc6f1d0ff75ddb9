//! Spectral-gap analysis for finite-state Markov chains in `L²(π)`.
//!
//! The crate computes isoperimetric constants of a transition kernel and its
//! compositions with the time reversal, the reversibility constants that
//! compare `Pⁿ` with `P*ⁿ`, the spectrum restricted to `1⊥`, and the
//! conductance-based bounds that certify `‖P‖_{L²₀(π)} < 1`.

pub mod bounds;
pub mod chain;
pub mod error;
pub mod isoperimetry;
pub mod reversibility;
pub mod search;
pub mod spectral;
pub mod verify;
pub mod zoo;

pub use chain::{
    adjoint, adjoint_pair, stationary, Chain, KernelMatrix, OperatorKernel, StationaryWeights,
    TransitionKernel,
};
pub use error::{GapError, Result};
pub use isoperimetry::{ConductanceResult, Extremum, StateSet, Strategy};
pub use search::SearchConfig;
