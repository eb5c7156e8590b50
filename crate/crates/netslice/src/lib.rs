//! Network-slice resource allocation: Jackson-network analysis, SLA-driven
//! capacity sizing, virtual network embedding with admission control, a
//! provider/tenant pricing game, and a two-time-scale simulator that
//! cross-validates the analytics against packet-level discrete-event
//! simulation.
//!
//! The [`scenario`] module defines the on-disk description format consumed
//! by the `netslice` CLI; everything else is a plain library layered as
//!
//! * [`model`] — substrate, slice requests, traffic statistics, prices
//! * [`queueing`] — traffic equations, stability, mean delay
//! * [`capacity`] — cost-minimal service rates under a delay bound
//! * [`embedding`] — slice placement, admission control, release
//! * [`pricing`] — leader price selection against best-responding slices
//! * [`simulator`] — packet-level and epoch-level simulation

// Negated float comparisons like `!(x > 0.0)` are deliberate: NaN must fail
// validation the same way out-of-range values do.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Matrix code indexes rows and columns; iterator rewrites obscure the math.
#![allow(clippy::needless_range_loop)]

pub mod capacity;
pub mod embedding;
pub mod error;
pub mod model;
pub mod pricing;
pub mod queueing;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
