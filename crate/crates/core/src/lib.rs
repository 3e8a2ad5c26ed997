//! Joint long-term power control and receive beamforming for multi-antenna
//! networks, via fixed-point iterations of standard interference mappings.
//!
//! * [`fixed_point`]: the iteration engines and an SI-axiom sampler;
//! * [`network`]: drops, channel batches and masked CSI;
//! * [`beamforming`]: centralized, local and team MMSE designs, MRC, LSFD;
//! * [`metrics`]: UatF statistics, MSE, UatF and coherent-decoding rates;
//! * [`solvers`]: joint solves and baselines;
//! * [`experiments`]: the Monte Carlo sweeps behind the CLI.

pub mod beamforming;
pub mod error;
pub mod experiments;
pub mod fixed_point;
mod linalg;
pub mod metrics;
pub mod network;
pub mod solvers;

pub use error::{Error, Result};
pub use fixed_point::{FixedPointOptions, InterferenceMapping, IterationTrace, PowerVector, Status};
pub use network::{NetworkConfig, NetworkInstance, Scenario};
