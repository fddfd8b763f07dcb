//! Singular stationary solutions of −Δu = f(u) on a disc and the two mild
//! solutions of the heat flow they seed.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod commands;
pub mod config;
pub mod demo;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod nonlinearity;
pub mod ode;
pub mod quad;
pub mod semigroup;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
