//! Age-dependent random access (ADRA) for slotted-ALOHA IoT networks.
//!
//! Devices hold back while their Age-of-Information is below a threshold and
//! contend with a fixed probability once it is reached. This crate packages:
//!
//! - [`analytic`] — the decoupled Markov-chain model: the fixed-point success
//!   probability, the stationary age law, closed-form average AoI, the
//!   age-independent baseline, and an exact coupled-chain oracle for tiny
//!   networks;
//! - [`sim`] — an exact slot-by-slot simulator for arbitrary age-indexed
//!   access policies with seeded, reproducible replications;
//! - [`opt`] — exhaustive (p, delta) search minimizing the analytic average
//!   AoI;
//! - [`cli`] — the `adra` command-line front end emitting CSV results and
//!   reproducible run manifests.
//!
//! All library types are immutable after construction and safe to share
//! across threads.

pub mod analytic;
pub mod cli;
mod error;
pub mod opt;
pub mod sim;

pub use error::{Error, Result};
