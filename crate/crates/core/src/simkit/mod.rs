//! Channel generation, Monte-Carlo evaluation and reporting.

pub mod channel;
pub mod engine;
pub mod report;
pub mod stats;

pub use channel::{derive_seed, generate_channels, make_href, PerturbationModel};
pub use engine::{gap_study, run_montecarlo, GapStudy, MonteCarloConfig, MonteCarloReport, RhoBlock, Scenario, ThetaPoint};
pub use report::{emit, OutputFormat};
pub use stats::{percentiles, PercentileMethod, Summary};
