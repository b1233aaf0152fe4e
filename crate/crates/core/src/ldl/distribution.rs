use crate::error::{Error, Result};

/// Allowed deviation of the entry sum from 1 before a vector is rejected.
pub const SUM_TOLERANCE: f64 = 1e-6;
const ENTRY_TOLERANCE: f64 = 1e-9;

/// A nonnegative vector of description degrees over `c >= 2` labels that sums to one.
///
/// Construction renormalizes inputs whose sum is within [`SUM_TOLERANCE`] of 1, so
/// softmax outputs with rounding error are accepted as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    values: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let sum = Self::check(&values)?;
        let values = values.into_iter().map(|v| v.max(0.0) / sum).collect();
        Ok(Self { values })
    }

    /// Validates like [`LabelDistribution::new`] but keeps the values bit for bit,
    /// so stored distributions reload unchanged.
    pub(crate) fn new_exact(values: Vec<f64>) -> Result<Self> {
        Self::check(&values)?;
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeEntry { index: i, value: values[i] });
        }
        Ok(Self { values })
    }

    fn check(values: &[f64]) -> Result<f64> {
        if values.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 labels, got {}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(-ENTRY_TOLERANCE..=1.0 + ENTRY_TOLERANCE).contains(&v) {
                return Err(Error::InvalidDistribution(format!("entry {i} = {v} outside [0, 1]")));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(sum)
    }

    /// Uniform distribution `1/c` over `c` labels.
    pub fn uniform(c: usize) -> Result<Self> {
        Self::new(vec![1.0 / c as f64; c])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for LabelDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Scales a nonnegative vector so its entries sum to one.
pub fn normalize_to_distribution(v: &[f64]) -> Result<LabelDistribution> {
    if v.len() < 2 {
        return Err(Error::InvalidDistribution(format!(
            "need at least 2 labels, got {}",
            v.len()
        )));
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| x.is_nan() || **x < 0.0) {
        return Err(Error::NegativeEntry { index, value });
    }
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(LabelDistribution {
        values: v.iter().map(|x| x / sum).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_examples() {
        assert_eq!(normalize_to_distribution(&[2.0, 2.0]).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(
            normalize_to_distribution(&[1.0, 0.0, 3.0]).unwrap().values(),
            &[0.25, 0.0, 0.75]
        );
    }

    #[test]
    fn rejects_degenerate_vectors() {
        assert!(matches!(normalize_to_distribution(&[0.0, 0.0]), Err(Error::AllZero)));
        assert!(matches!(
            normalize_to_distribution(&[1.0, -0.5]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(normalize_to_distribution(&[1.0]).is_err());
    }

    #[test]
    fn construction_renormalizes_within_tolerance() {
        let d = LabelDistribution::new(vec![0.5 + 4e-7, 0.5]).unwrap();
        assert!((d.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(LabelDistribution::new(vec![0.6, 0.6]).is_err());
        assert!(LabelDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(LabelDistribution::new(vec![1.0]).is_err());
    }
}
