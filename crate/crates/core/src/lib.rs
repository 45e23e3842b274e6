//! Simulation and verification of tail and extremal indices for weighted
//! maxima and sums of random-length arrays of heavy-tailed series.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod columns;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod lengths;
pub mod regvar;
pub mod seeds;

pub use aggregate::{running_maxima, signed_aggregates, weighted_max, weighted_sum, WeightVector};
pub use columns::{
    sample_array, sample_column, ArrayModel, ColumnDynamics, ColumnModel, Coupling, MarginFamily,
};
pub use error::{Error, Result};
pub use harness::{
    run_scenario, verify_theorem, ExperimentConfig, RunOptions, TheoremId, VerificationReport,
};
pub use lengths::{sample_d, sample_lengths, LengthLaw, RandomD};
pub use regvar::{
    chi_upper, classify_regime, length_scale, theta_weighted, threshold_u, Regime, SeriesProfile,
    SlowlyVarying, TailSpec, ThresholdRule,
};
