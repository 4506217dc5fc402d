//! Neuromechanical simulation of human walking with a hip exoskeleton.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod muscle;
pub mod optimizer;
pub mod plant;
pub mod reflex;

pub use error::{Result, SimError};
