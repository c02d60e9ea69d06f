//! Norms of CM values of the Hauptmodul on the genus-0 Shimura curves
//! X*_6 and X*_10.
//!
//! The computation runs entirely in exact arithmetic:
//!
//! * [`quaternion`] builds the algebra B = (a, b / Q) and its standard maximal order,
//! * [`lattice`] extracts the trace-zero lattice L, its discriminant form and the
//!   splitting L_+ ⊕ L_- attached to a CM vector,
//! * [`etaforms`] finds weakly holomorphic eta quotients with prescribed principal
//!   part,
//! * [`weilrep`] lifts them to vector-valued forms for the Weil representation,
//! * [`whittaker`] evaluates the derivative coefficients of the incoherent
//!   Eisenstein series through local representation densities,
//! * [`pipeline`] assembles Schofer's sum and turns it into factored norms.

#![allow(clippy::needless_range_loop)]

pub mod arith;
pub mod cyclo;
pub mod error;
pub mod etaforms;
pub mod lattice;
mod linalg;
pub mod pipeline;
pub mod quaternion;
pub mod weilrep;
pub mod whittaker;

pub use error::{Error, Result};
