use crate::error::{Error, Result};
use crate::io::DatasetManifest;
use crate::ldl::{normalize_to_distribution, LabelDistribution};
use crate::synth::{SemanticVector, SEMANTIC_DIM};

/// `n` feature vectors of width `m` paired with `n` distributions over `c` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    targets: Vec<LabelDistribution>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<LabelDistribution>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyInput);
        }
        if features.len() != targets.len() {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: targets.len(),
            });
        }
        let m = features[0].len();
        let c = targets[0].len();
        if m == 0 {
            return Err(Error::Config("feature vectors are empty".into()));
        }
        for f in &features {
            if f.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: f.len() });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("training features"));
            }
        }
        if let Some(t) = targets.iter().find(|t| t.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: t.len() });
        }
        Ok(Self { features, targets })
    }

    /// Builds a set from a manifest with features. 94-dim semantic rows are
    /// converted with [`SemanticVector::to_distribution`]; other widths are normalized
    /// directly.
    pub fn from_manifest(manifest: &DatasetManifest) -> Result<Self> {
        if manifest.feature_dim() == 0 {
            return Err(Error::Config("manifest has no feature columns".into()));
        }
        let mut features = Vec::with_capacity(manifest.len());
        let mut targets = Vec::with_capacity(manifest.len());
        for row in &manifest.rows {
            features.push(row.features.clone());
            targets.push(if manifest.semantic_dim == SEMANTIC_DIM {
                SemanticVector::new(row.semantics.clone())?.to_distribution()?
            } else {
                normalize_to_distribution(&row.semantics)?
            });
        }
        Self::new(features, targets)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn label_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[LabelDistribution] {
        &self.targets
    }

    /// Rows `range` as a new set.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(self.features[range.clone()].to_vec(), self.targets[range].to_vec())
    }
}
