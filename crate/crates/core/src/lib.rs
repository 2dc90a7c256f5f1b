//! Mean application-packet delay for single-cell IEEE 802.11 DCF WLANs.
//!
//! The crate models the cell as a 1-limited random polling system served at
//! the channel's saturated rate and provides three ways to get at the same
//! quantity:
//!
//! * closed-form per-node mean delays ([`appdelay`]), split into the
//!   sub-MTU and super-MTU (fragmented) regimes,
//! * the underlying polling-system machinery ([`rps`]) including the
//!   general nonzero-switchover solution and its zero-switchover limit,
//! * discrete-event validation engines ([`sim`]): a slot-level CSMA/CA
//!   simulator and an abstract random-polling-server oracle.
//!
//! [`mac`] supplies the Bianchi-style fixed point and renewal-reward channel
//! capacity; [`dist`] the packet-length distributions and their normalized
//! moments.

pub mod appdelay;
pub mod dist;
pub mod error;
pub mod mac;
mod numeric;
pub mod rps;
pub mod sim;

pub use appdelay::{
    analytic_delays, fragment_delay, mean_delay_sub_mtu, mean_delay_super_mtu,
    mean_delay_super_mtu_with, AnalyticDelays, NodeSpec, OmegaConvention, Regime, Scenario,
};
pub use dist::{next_interarrival, NormalizedMoments, PacketLengthDist};
pub use error::{Error, Result};
pub use mac::{
    aggregate_capacity, slot_probabilities, solve_fixed_point, Capacity, FixedPointResult,
    MacParams, SlotProbabilities,
};
pub use rps::{
    batch_poisson_moments, mean_delay_zero_switchover, mean_wait_nonzero_switchover, offered_load,
    rps_intermediates, switchover_limit_check, ConvergenceReport, QueueMoments, RpsIntermediates,
    RpsParams, RpsQueue, RpsSolution, ServiceMoments, Switchover,
};
pub use sim::{
    dcf::{estimate_capacity, run_dcf, run_dcf_replicated, CapacityEstimate},
    oracle::{run_rps_oracle, run_rps_oracle_replicated},
    replication_seeds, DelayStats, NodeDelayStats, RunBudget, RunStats, SimConfig, TraceRecord,
};
