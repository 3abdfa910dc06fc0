//! Monte Carlo verification harness: mergeable accumulators, empirical
//! characteristic functions on shared frequency grids, and the pass/fail
//! statistical tests behind the `verify` command.

pub mod accum;
pub mod grid;
pub mod report;
pub mod suite;

pub use accum::{ecf, BatchMeans, EcfGrid, StatAccumulator, Welford};
pub use grid::FrequencyGrid;
pub use report::{CheckLine, TestReport, Verdict};
pub use suite::{
    exact_identity_reports, probe_exchangeability, run_suite, suite_failed,
    test_ergodic_average, test_gaussian_marginals, test_nongaussian_window,
    test_stationarity, test_step_independence, Inject, Observable, SourceKind, SuiteConfig,
};
