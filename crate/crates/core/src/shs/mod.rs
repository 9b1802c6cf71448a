//! Generic stochastic-hybrid-system engine.
//!
//! A model is a finite continuous-time Markov chain whose transitions apply
//! binary reset maps to an age vector that otherwise grows at unit rate.
//! Stationary probabilities, first-order correlation vectors, MGF correlation
//! vectors and higher moments all come from dense linear systems with
//! `state_count * age_dim` unknowns.

mod model;
mod solve;

pub use model::{compute_a_hat, validate_model, ResetMap, ShsModel, Transition};
pub use solve::{
    aoi_moments, first_moment_vectors, mgf, mgf_domain_bound, mgf_vectors, solve_report,
    stationary_distribution, CorrelationVectors, MgfSample, SolveReport, StationaryDistribution,
    MAX_MOMENT_ORDER,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShsError {
    #[error("reset map entry ({row}, {col}) is {value}; entries must be 0/1 with at most one 1 per column")]
    NonBinaryReset { row: usize, col: usize, value: i64 },
    #[error("transition {id} has rate {rate}; rates must be positive and finite")]
    RateNotPositive { id: u32, rate: f64 },
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("reset map dimension {found} does not match age dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model has no states")]
    EmptyModel,
    #[error("chain has {closed_classes} closed communicating classes; exactly one is required")]
    ReducibleChain { closed_classes: usize },
    #[error("singular linear system ({system})")]
    SingularSystem { system: &'static str },
    #[error("first-moment solution has negative component {value:e} at state {state}, index {component}")]
    NegativeSolution {
        state: usize,
        component: usize,
        value: f64,
    },
    #[error("s = {s} lies outside the MGF domain")]
    DomainExceeded { s: f64 },
    #[error("moment order {0} exceeds the supported maximum {MAX_MOMENT_ORDER}")]
    MomentOrderTooHigh(usize),
}
