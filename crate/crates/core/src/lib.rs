//! Articulated rigid-body dynamics for a roadheader: spatial algebra, robot
//! model parsing, recursive dynamics, fixed-step integrators and an
//! interactive simulation loop.

// `!(x > 0.0)` is how inputs reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// SimError carries the last good snapshot on purpose.
#![allow(clippy::result_large_err)]

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod integrate;
pub mod model;
pub mod scenarios;
pub mod service;
pub mod sim;
pub mod spatial;

pub use error::{Error, Result};
