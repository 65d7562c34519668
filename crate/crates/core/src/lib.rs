//! Kernel density estimation, critical bandwidths and multimodality tests.

pub mod benchmark;
pub mod decompose;
mod error;
pub mod io;
pub mod kde;
pub mod modes;
pub mod rng;
mod sample;
pub mod solver;
pub mod stattests;

pub use error::{Error, Result};
pub use kde::{
    auto_method, default_grid, kde_auto, kde_default, kde_direct, kde_fft, silverman_bandwidth, Bandwidth,
    DensityCurve, Grid, KdeMethod,
};
pub use modes::{count_modes, find_modes, find_trough, ModeFilter, ModeSet, Trough};
pub use rng::{
    resample_with_replacement, sample_mixture, Allocation, Component, MixtureSpec, Purpose, Seed,
    SeededRng,
};
pub use sample::Sample;
pub use solver::{
    critical_bandwidth, critical_bandwidth_brent, critical_bandwidth_ci, verify_transition,
    BootstrapInterval, CritBandResult, SolverMethod, SolverOptions, SolverPath,
};
pub use stattests::{dip_statistic, dip_test, excess_mass, silverman_test, ExcessMassCurve, TestMethod, TestResult};
pub use decompose::{
    bimodality_strength, detect_components, Decomposition, StrengthCutoffs, StrengthLabel,
    StrengthReport,
};
pub use io::{parse_markdown_table, read_data, DataSet, NumericColumn, ReadRequest, Table};
