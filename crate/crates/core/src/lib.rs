//! Iterated leaf-cutting on simply generated trees.
//!
//! Cutting all leaves of a rooted plane tree `r` times removes `a_r(T)`
//! vertices. For a weight sequence `(w_k)` the crate computes the exact law
//! of `a_r` on trees of size `n` from generating functions, the constants of
//! its mean and variance as `n` grows, and checks both against exhaustive
//! enumeration and random sampling.

pub mod asymptotics;
pub mod cli;
pub mod enumeration;
pub mod error;
pub mod sampler;
pub mod series;
pub mod tree;
pub mod weights;

pub use asymptotics::{
    constants_report, cr_dr, fundamental_constants, large_r_limits, mu_sigma, ConstantsReport,
    FundamentalConstants, LevelConstants,
};
pub use enumeration::{enumerate_trees, oracle_distribution, Distribution, Provenance};
pub use error::{Error, Result};
pub use sampler::{build_sampler_tables, ks_normal, monte_carlo, SampleStats, SamplerTables};
pub use series::{
    compute_ar, compute_f, compute_fr, exact_distribution, exact_moments, BivarTruncSeries,
    ExactMoments, MomentSeries, TruncSeries,
};
pub use tree::{height, removed_additive, removed_operational, TreeShape};
pub use weights::WeightFamily;
