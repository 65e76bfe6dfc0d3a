//! Rate allocation for decentralized binary detection.
//!
//! `N` sensors observe `±m` in unit Gaussian noise, quantize to `r_n` bits
//! and share a sum-rate budget `Σ r_n ≤ R` towards a fusion center. This
//! crate designs the sensor quantizers, measures their Chernoff information,
//! checks that it is discrete concave in rate (the condition under which a
//! uniform allocation is optimal), searches allocations exhaustively, and
//! computes fusion-center error probabilities exactly or by simulation.
//!
//! | module | contents |
//! |--------|----------|
//! | [`numerics`] | normal cdf / inverse cdf, golden-section maximizer |
//! | [`model`] | antipodal-Gaussian observation model, SNR conversion |
//! | [`quantizer`] | monotone quantizers and their message pmfs |
//! | [`design`] | compander and coordinate-ascent designers |
//! | [`chernoff`] | Chernoff information of sensors and networks |
//! | [`allocation`] | allocations, rebalancing, exhaustive search |
//! | [`detection`] | exact and Monte-Carlo MAP error, error exponents |
//! | [`experiments`] | data for the figure commands |

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod chernoff;
pub mod design;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numerics;
pub mod quantizer;
pub mod rng;

pub use allocation::{
    best_allocation, enumerate_allocations, rebalance_step, rebalance_to_uniform, score_allocation,
    AllocationScore, DesignCache, RateAllocation,
};
pub use chernoff::{
    chernoff_at_alpha, chernoff_information, chernoff_raw, is_discrete_concave, network_chernoff,
    ChernoffCurve, ChernoffResult, ConcavityReport,
};
pub use design::{bb_asymptotic_chernoff, design_bb, design_numerical, Designer, DesignerConfig};
pub use detection::{
    exact_map_error, exponent_estimate, monte_carlo_error, McConfig, NetworkConfig,
};
pub use error::{Error, Result};
pub use model::{conditional_cdf, model_from_snr_db, Hypothesis, ObservationModel, Snr};
pub use numerics::{
    maximize_concave_1d, q_function, std_normal_cdf, std_normal_inv_cdf, Tolerance,
};
pub use quantizer::{conditional_pmf, Quantizer, SensorPmfPair};
