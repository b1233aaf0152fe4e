use std::fmt;

use crate::error::{Error, Result};
use crate::ldl::{measure_with, LabelDistribution, MeasureKind, MeasureMode};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSummary {
    pub kind: MeasureKind,
    /// Mean over the pairs where the measure was defined; `None` when no pair was.
    pub mean: Option<f64>,
    pub undefined: usize,
}

/// Per-measure averages over a test set, in [`MeasureKind::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub samples: usize,
    pub summaries: Vec<MeasureSummary>,
}

impl MeasureReport {
    pub fn get(&self, kind: MeasureKind) -> &MeasureSummary {
        self.summaries
            .iter()
            .find(|s| s.kind == kind)
            .expect("report covers every measure")
    }

    pub fn mean(&self, kind: MeasureKind) -> Option<f64> {
        self.get(kind).mean
    }

    /// Tab-separated header line naming each measure with its polarity arrow.
    pub fn header() -> String {
        MeasureKind::ALL
            .iter()
            .map(|k| format!("{}{}", k.name(), if k.is_distance() { "↓" } else { "↑" }))
            .collect::<Vec<_>>()
            .join("\t")
    }

    /// Tab-separated value row; undefined means print as `\`.
    pub fn row(&self) -> String {
        self.summaries
            .iter()
            .map(|s| match s.mean {
                Some(m) => format!("{m:.4}"),
                None => "\\".to_string(),
            })
            .collect::<Vec<_>>()
            .join("\t")
    }
}

impl fmt::Display for MeasureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::header())?;
        write!(f, "{}", self.row())
    }
}

pub fn aggregate_report(
    predictions: &[LabelDistribution],
    truths: &[LabelDistribution],
) -> Result<MeasureReport> {
    aggregate_report_with(predictions, truths, MeasureMode::Lenient)
}

/// Averages every measure over `(prediction, truth)` pairs.
///
/// In strict mode a pair whose measure hits an undefined term is left out of that
/// measure's mean and counted in `undefined` instead.
pub fn aggregate_report_with(
    predictions: &[LabelDistribution],
    truths: &[LabelDistribution],
    mode: MeasureMode,
) -> Result<MeasureReport> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    let first = truths.first().ok_or(Error::EmptyInput)?;
    for (p, t) in predictions.iter().zip(truths) {
        if p.len() != first.len() || t.len() != first.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: t.len().max(first.len()),
            });
        }
    }

    let mut summaries = Vec::with_capacity(MeasureKind::ALL.len());
    for kind in MeasureKind::ALL {
        let mut sum = 0.0;
        let mut defined = 0usize;
        let mut undefined = 0usize;
        for (p, t) in predictions.iter().zip(truths) {
            // Measures take the ground truth first and the prediction second.
            match measure_with(kind, t, p, mode) {
                Ok(v) => {
                    sum += v;
                    defined += 1;
                }
                Err(Error::UndefinedTerm(_)) => undefined += 1,
                Err(e) => return Err(e),
            }
        }
        summaries.push(MeasureSummary {
            kind,
            mean: (defined > 0).then(|| sum / defined as f64),
            undefined,
        });
    }
    Ok(MeasureReport {
        samples: truths.len(),
        summaries,
    })
}
