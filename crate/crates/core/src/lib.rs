//! Simulator for distributed channel and power allocation in cellular
//! networks with underlaid D2D multicast groups.
//!
//! A cell holds cellular users (CUs), each owning one orthogonal uplink
//! channel, and multicast groups (MGs), each a transmitter with a cluster of
//! receivers that may reuse one CU channel. Channels are assigned by
//! distributed list coloring of an interference graph under an adaptive
//! threshold; transmit powers are then chosen per channel by a sliding dBm
//! window that keeps aggregate interference at the base station within the
//! CU's SINR budget.

pub mod baselines;
pub mod channel;
pub mod coloring;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod power;
pub mod rng;
pub mod rounds;
pub mod scenario;
pub mod schemes;
pub mod units;

pub use channel::{build_gain_table, GainTable};
pub use config::{ColorChoice, SimConfig};
pub use error::{Error, Result};
pub use harness::{run_sweep, sample_instance, Instance, ResultRow, SweepAxis, SweepSpec};
pub use metrics::{objective_and_constraints, Allocation, RateReport};
pub use scenario::{generate_scenario, CellScenario};
pub use schemes::{evaluate_schemes, ChannelScheme, PowerScheme, SchemeId};
