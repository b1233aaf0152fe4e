use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ldl::LabelDistribution;

/// One-hot distribution for a single-label instance.
pub fn target_from_single_label(label_index: usize, c: usize) -> Result<LabelDistribution> {
    if label_index >= c {
        return Err(Error::IndexOutOfRange {
            index: label_index,
            len: c,
        });
    }
    let mut v = vec![0.0; c];
    v[label_index] = 1.0;
    LabelDistribution::new(v)
}

/// Uniform mass `1/|set|` over the members of a multi-label set.
pub fn target_from_label_set(label_set: &BTreeSet<usize>, c: usize) -> Result<LabelDistribution> {
    if label_set.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(&bad) = label_set.iter().find(|&&i| i >= c) {
        return Err(Error::IndexOutOfRange { index: bad, len: c });
    }
    let w = 1.0 / label_set.len() as f64;
    let v = (0..c).map(|j| if label_set.contains(&j) { w } else { 0.0 }).collect();
    LabelDistribution::new(v)
}
