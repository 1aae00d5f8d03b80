//! q-fractional Askey-Wilson integral semigroups and the q-Hermite machinery
//! behind them.

pub mod awop;
pub mod cli;
pub mod awpoly;
pub mod dualeq;
pub mod error;
pub mod qcore;
pub mod qhermite;
pub mod quadrature;
pub mod semigroups;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use qcore::QContext;
