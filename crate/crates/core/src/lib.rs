//! Distributed threshold scheduling for the MIMO multiple-access uplink.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: special functions and small complex linear algebra, the
//! extreme-value constants used to design thresholds, channel sampling from
//! counter-based streams, ZF / MMSE / ZF-SIC rate computation, the two
//! channel-access procedures and the closed-form capacity bounds.
//!
//! The companion `macdiv` crate drives these pieces from a parallel Monte
//! Carlo engine and exposes them on the command line.
//!
//! Rates are in nats throughout.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod channel;
pub mod error;
pub mod evt;
pub mod math;
pub mod receivers;
pub mod scheduler;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
