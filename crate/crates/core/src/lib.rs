//! Throughput and latency analysis of multihop integrated access and
//! backhaul (IAB) networks with half- or full-duplex relays.
//!
//! The crate models an IAB deployment as a Jackson network of M/M/1 queues
//! and provides:
//!
//! * [`topology`]: routing trees and their routing/scheduling matrices,
//! * [`channel`]: mmWave link generation and per-edge capacities,
//! * [`queueing`]: analytic delay distributions and a discrete-event simulator,
//! * [`optimizer`]: the minimum-feasible-delay LP and latency-constrained
//!   utility maximization,
//! * [`analysis`]: closed-form line-network results,
//! * [`experiments`]: seeded Monte Carlo sweeps that tie it all together.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod queueing;
pub mod topology;

pub use error::{Error, Result};
pub use topology::{DuplexMode, NetworkMatrices, RoutingTree, VertexKind};
