//! Uplink simulator for cell-free massive MIMO with capacity-limited
//! fronthaul links and residual transceiver hardware impairments.
//!
//! A set of `M` single-antenna access points serves `K` single-antenna
//! users on shared resources. Each access point forwards what it hears to
//! a central unit over an error-free fronthaul link of `C_m` bits/s/Hz,
//! so everything that crosses the link has to be quantized. Three
//! forwarding strategies are implemented:
//!
//! * **CFE** (compress-forward-estimate): the access point quantizes the
//!   raw pilot and data signals; the central unit estimates channels and
//!   combines.
//! * **ECF** (estimate-compress-forward): the access point estimates the
//!   channels itself, then quantizes the estimates and the data signal
//!   separately.
//! * **EMCF** (estimate-multiply-compress-forward): the access point
//!   multiplies the data signal by its conjugated channel estimates and
//!   quantizes the products; the central unit applies an MMSE combiner.
//!
//! Closed-form per-user SINR expressions (exact for CFE and EMCF, upper
//! and lower bounds for ECF) live in [`rates`]; every term they contain
//! can be cross-checked against a signal-level Monte-Carlo simulation in
//! [`oracle`]. Fronthaul capacity allocation (CSI/data split search,
//! per-user water-filling) is in [`allocation`], and sum-SE power control
//! via geometric programming in [`poweropt`]. The [`experiment`] module
//! drives sweeps, CDFs and validation runs end to end.
//!
//! All randomness flows through labeled, seeded sub-streams ([`rng`]), so
//! any run is reproducible bit-for-bit regardless of thread count.

pub mod allocation;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod netmodel;
pub mod oracle;
pub mod poweropt;
pub mod quant;
pub mod rates;
pub mod report;
pub mod rng;
pub mod signal;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use netmodel::Scenario;
