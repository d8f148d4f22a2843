//! Dataset-level protocol: indexing, per-image scoring against the best of
//! several masks, resolution sweeps, regimes, aggregates and report files.

mod dataset;
mod eval;
pub mod plot;
mod report;
mod summary;

pub use dataset::{load_dataset, DatasetEntry, DatasetIndex, DatasetLayout};
pub use eval::{
    evaluate_image, evaluate_prepared, run_protocol, score_partition, sweep_gamma, sweep_prepared,
    ErrorRecord, EvalOptions, EvalRecord, GtScore, ImageSource, Outcome, PreparedImage,
    ResolutionSpec, Scored, DEFAULT_C_GRID,
};
pub use report::{
    errors_csv, per_gt_csv, read_records, records_to_csv, summary_text, write_records,
    RECORD_HEADER,
};
pub use summary::{
    aggregate, average_ranks, classify, classify_regime, mean, median, spearman, sweep_curve,
    CurvePoint, RegimeLabel, RegimeThresholds, Summary,
};

use std::path::Path;

use crate::error::{Error, Result};

/// Splits outcomes into records and error records, preserving order.
pub fn partition_outcomes(outcomes: Vec<Outcome>) -> (Vec<EvalRecord>, Vec<ErrorRecord>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    (records, errors)
}

/// Writes `report.csv`, `per_gt.csv`, `errors.csv`, `summary.txt` and the
/// SVG plots into `dir`.
pub fn write_run_artifacts(
    dir: &Path,
    records: &[EvalRecord],
    errors: &[ErrorRecord],
    thresholds: &RegimeThresholds,
) -> Result<Summary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write("report.csv", records_to_csv(records))?;
    write("per_gt.csv", per_gt_csv(records))?;
    write("errors.csv", errors_csv(errors))?;
    let summary = aggregate(records, thresholds)?;
    let curve = sweep_curve(records);
    write("summary.txt", summary_text(&summary, &curve))?;
    plot::write_all(dir, records, &curve)?;
    Ok(summary)
}
