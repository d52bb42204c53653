use nlhv_core::estimators::calibration::run_calibration;
pub use nlhv_core::estimators::calibration::CalibrationReport;
use nlhv_core::rng::derive_seed;

use super::RunContext;
use crate::error::{CliError, CliResult};
use crate::io::write_json;
use crate::manifest::ReplicaSeeds;

const TAG: &str = "calibration";

/// Runs the synthetic estimator suite and writes `calibration.json`. A failed
/// check is a numeric failure, reported after the file is written.
pub fn cmd_calibrate(ctx: &RunContext) -> CliResult<CalibrationReport> {
    let seed = derive_seed(ctx.master_seed(), 0, TAG);
    let report = ctx
        .install(|| run_calibration(seed))?
        .map_err(|e| CliError::from_core("calibration", e))?;
    write_json(&ctx.path("calibration.json"), &report)?;
    ctx.write_manifest(
        "calibrate",
        vec![ReplicaSeeds {
            replica: 0,
            streams: vec![(TAG.into(), seed)],
        }],
        &["calibration.json"],
    )?;
    if !report.passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::Numeric(format!("calibration failed: {}", failed.join(", "))));
    }
    Ok(report)
}
