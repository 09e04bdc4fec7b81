//! Scenario configuration, the trial runner, suites, and their artifacts.

pub mod config;
pub mod output;
pub mod reduce;
pub mod suite;
pub mod trial;

pub use config::{AlgorithmId, AlgorithmParams, CommsParams, PParams, ScenarioConfig, ARTIFACT_VERSION};
pub use output::{emit_csv, grouped_bar_svg, scaling_svg, ChartSeries, CSV_HEADER};
pub use reduce::{descriptor, run_reduction, ReductionScenario};
pub use suite::{run_protocol, run_suite, Aggregates, Protocol, ProtocolRun, Stat, SuiteResult, Verdict};
pub use trial::{run_trial, run_trial_with_telemetry, Telemetry, TrialResult};
