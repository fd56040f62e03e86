//! Heterogeneous massive MIMO (HmMIMO) network simulator.
//!
//! A cell hosts a central base station (cBS) with a co-located array plus a
//! set of edge access points (eAPs) on its boundary. The cBS combines its own
//! antennas with the eAP antennas into one composite vector per user and runs
//! maximum-ratio combining on the uplink and conjugate beamforming on the
//! downlink. Cellular (`L_c = 0`) and cell-free (`N_b = 0`, one logical cell)
//! massive MIMO fall out as special cases.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`]: deployment parameters, the flat `key = value` file format,
//!   scenario presets and noise power.
//! - [`topology`]: random drop geometry.
//! - [`propagation`]: three-slope path loss, shadowing and small-scale fading.
//! - [`estimation`]: pilot book and MMSE channel estimates.
//! - [`uplink`]: MRC interference matrix, closed-form SINR and a symbol-level
//!   oracle for the interference decomposition.
//! - [`downlink`]: conjugate beamforming power control, closed-form SINR in
//!   two variants and a block-level oracle.
//! - [`campaign`]: seeded Monte Carlo drops, CDF summaries and result files.
//! - [`validation`]: built-in analytic-vs-empirical suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod downlink;
pub mod error;
pub mod estimation;
pub mod propagation;
pub mod rng;
pub mod topology;
pub mod uplink;
pub mod validation;

pub use campaign::{check_equal_budget, percentile, run_campaign, run_drop, CampaignResult, CdfSummary, SeSample};
pub use config::{noise_power, Dims, FadingMode, NetworkConfig, PathLossModel, Scenario, UserId};
pub use downlink::{dl_power_control, dl_se, dl_sinr_analytic, dl_sinr_empirical, DlMode, PowerControl};
pub use error::{ConfigError, Error, Result};
pub use estimation::{assign_pilots, estimate_channels, mmse_alpha, EstimateSet, PilotBook};
pub use propagation::{draw_channels, large_scale, BetaTable, ChannelRealization};
pub use rng::{RandomStream, Stage};
pub use topology::{place_topology, Point, Topology};
pub use uplink::{build_xi, ul_se, ul_sinr_analytic, ul_sinr_empirical, CovarianceSet, UplinkPower};

/// Complex baseband sample type used throughout.
pub type Complex = num_complex::Complex64;
