//! Scenario loading, verification suites and report emission for the
//! `labgauge` command.

pub mod report;
pub mod scenario;
pub mod suite;

pub use report::{emit_report, Format};
pub use scenario::{load_scenario, LoadError, ScenarioFile};
pub use suite::{run_checks, run_suite, Report, Suite, SuiteSpec};

/// Environment variable multiplying every tolerance.
pub const TOLERANCE_SCALE_VAR: &str = "LABGAUGE_TOLERANCE_SCALE";

pub fn tolerance_scale_from_env() -> Result<f64, String> {
    match std::env::var(TOLERANCE_SCALE_VAR) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| format!("{TOLERANCE_SCALE_VAR}={v:?} is not a positive number")),
        Err(_) => Ok(1.0),
    }
}
