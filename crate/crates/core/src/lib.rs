//! Voltage collapse margin monitoring for multi-line transmission corridors.
//!
//! Two-ended synchrophasor measurements on every corridor line are combined
//! into one equivalent line (the area voltage across the corridor), and
//! single-line stability indices are computed on that equivalent. A small AC
//! power-flow and maximum-loadability solver provides synthetic measurements
//! and ground truth for the reduction error.

// Checks are written `!(x > eps)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod ingest;
pub mod margin;
pub mod network;
pub mod phasor;
pub mod powerflow;
pub mod reduction;

pub use phasor::Phasor;
