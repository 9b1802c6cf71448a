//! Age-of-information analysis for a two-source status-update system whose
//! updates pass through a transmitter server and then a sink (computation)
//! server, both bufferless.
//!
//! * [`shs`] solves any stochastic hybrid system with binary resets for its
//!   stationary distribution, AoI moments and AoI moment generating function.
//! * [`tandem`] builds the preemptive and blocking models.
//! * [`closed_form`] evaluates the closed-form MGFs and related expressions.
//! * [`sim`] is a discrete-event simulator used as an independent check.
//! * [`document`] is the JSON model format.

pub mod closed_form;
pub mod document;
mod linalg;
pub mod shs;
pub mod sim;
pub mod tandem;

pub use tandem::{Policy, SinkHandoff, SystemParams};
