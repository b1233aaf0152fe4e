//! Label distributions and the distance/similarity measures used to compare them.

mod distribution;
mod measures;
mod report;

pub use distribution::{normalize_to_distribution, LabelDistribution, SUM_TOLERANCE};
pub use measures::{measure, measure_with, MeasureKind, MeasureMode, KL_FLOOR};
pub use report::{aggregate_report, aggregate_report_with, MeasureReport, MeasureSummary};
