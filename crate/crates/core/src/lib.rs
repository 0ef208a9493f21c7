//! Exact age of information analysis for a generate-at-will source feeding
//! two heterogeneous servers, under the zero-wait (ZW) and freeze/preempt
//! (F/P) policies.
//!
//! The age laws are phase-type: both policies are encoded as absorbing
//! Markov chains ([`AmcSpec`]) whose absorption times give the peak AoI and,
//! through a masked reward column, the AoI itself. A discrete-event
//! simulator and a freeze-rate optimizer sit on top.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod fp;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optimize;
pub mod phtype;
pub mod sim;
pub mod zw;

pub use error::{Error, Result};
pub use format::sig12;
pub use fp::{build_fp_amc, fp_amc, FpAmc, FpParams, FpState, FpStateIndex};
pub use metrics::{
    aoi_cdf, aoi_mean, aoi_pdf, paoi_cdf, paoi_mean, paoi_pdf, summarize, summarize_model,
    AmcAnalysis, AoiSummary, DistributionTable, GridSpec, Metric,
};
pub use model::ModelParams;
pub use optimize::{golden_section_min, optimize_freeze, OptConfig, OptResult};
pub use phtype::{erlang_ph, AmcSpec, PhaseType};
pub use sim::{empirical_vs_analytic, ks_distance, simulate, SimConfig, SimPolicy, SimResult};
pub use zw::{build_zw_amc, zw_closed_form_means, zw_explicit_inverse, ZwParams};
