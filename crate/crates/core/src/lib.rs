//! Finite-blocklength laboratory for symmetric random-access channels.
//!
//! A random-access channel (RAC) is a family of multiple-access channels
//! indexed by the number of active transmitters `k = 0..=K`, permutation
//! invariant in its inputs and reducible via a designated silence symbol.
//! This crate computes the information-theoretic quantities of such
//! families exactly (mutual informations, dispersions, third moments,
//! cross expectations), solves the second-order achievability equations
//! for blocklengths and rate regions, evaluates every term of the
//! rateless-code error bound, simulates the single-threshold coding
//! protocol end to end, and implements the zero-transmitter composite
//! hypothesis tests together with their exponents and minimax quantiles.
//!
//! Modules mirror the pipeline:
//!
//! * [`channel`] — channel families, builders, structural assumption checks
//! * [`infodensity`] — exact densities, statistics, ordering verification
//! * [`adder`] — closed-form and series statistics for the adder-erasure RAC
//! * [`design`] — blocklength/message-size solvers, rate regions, code parameters
//! * [`bound`] — term-by-term error-bound evaluation (Monte Carlo and exact)
//! * [`detect`] — zero-transmitter hypothesis tests
//! * [`sim`] — epoch-level protocol simulation

pub mod adder;
pub mod bound;
pub mod channel;
pub mod design;
pub mod detect;
mod error;
pub mod infodensity;
pub mod seeding;
pub mod sim;

pub use channel::{AssumptionReport, ChannelFamily, InputDistribution, OutputSymbol};
pub use design::{CodeDesign, RatePoint, ThresholdMode, ZeroTestKind};
pub use error::{Error, Result};
pub use infodensity::{ChannelStatistics, OrderingReport};
