//! Design, certification and simulation of sampled-data observers for the linear
//! Kuramoto-Sivashinsky equation `u_t = -u_xxxx - q u_xx + f` on (0, 1) with
//! Neumann-type boundary conditions and a non-local output `y = <c, u> + xi`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod commands;
pub mod config;
pub mod design;
pub mod envelope;
pub mod error;
pub mod exec;
pub mod fd;
pub mod linalg;
pub mod masp;
pub mod output;
pub mod profile;
pub mod quadrature;
pub mod simulator;
pub mod spectral;
#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};
