use crate::error::{Error, Result};
use crate::ldl::LabelDistribution;
use crate::learn::training::TrainingSet;

pub const DEFAULT_K: usize = 5;

/// Predicts the mean distribution of the `k` nearest stored instances under
/// Euclidean distance. Equal distances are resolved toward the lower stored index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    features: Vec<Vec<f64>>,
    targets: Vec<LabelDistribution>,
    k: usize,
}

impl KnnModel {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<LabelDistribution>, k: usize) -> Result<Self> {
        let set = TrainingSet::new(features, targets)?;
        Self::fit(&set, k)
    }

    pub fn fit(train: &TrainingSet, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::Config(format!("k = {k} must be in 1..={}", train.len())));
        }
        Ok(Self {
            features: train.features().to_vec(),
            targets: train.targets().to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
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

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[LabelDistribution] {
        &self.targets
    }

    /// Indices of the `k` nearest stored instances, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        let mut dist: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<LabelDistribution> {
        let idx = self.neighbors(x)?;
        if let [only] = idx[..] {
            return Ok(self.targets[only].clone());
        }
        let c = self.targets[0].len();
        let mut mean = vec![0.0; c];
        for &i in &idx {
            mean.iter_mut().zip(self.targets[i].values()).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= idx.len() as f64);
        LabelDistribution::new(mean)
    }
}

pub fn knn_predict(model: &KnnModel, x: &[f64]) -> Result<LabelDistribution> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn one_neighbor_is_exact() {
        let m = KnnModel::new(vec![vec![0.0], vec![1.0]], vec![d(&[0.3, 0.7]), d(&[0.9, 0.1])], 1).unwrap();
        assert_eq!(m.predict(&[1.0]).unwrap(), d(&[0.9, 0.1]));
    }

    #[test]
    fn mean_of_two() {
        let m = KnnModel::new(vec![vec![0.0], vec![5.0]], vec![d(&[1.0, 0.0]), d(&[0.0, 1.0])], 2).unwrap();
        assert_eq!(m.predict(&[-100.0]).unwrap().values(), &[0.5, 0.5]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let m = KnnModel::new(
            vec![vec![1.0], vec![-1.0], vec![1.0]],
            vec![d(&[1.0, 0.0]), d(&[0.0, 1.0]), d(&[0.5, 0.5])],
            1,
        )
        .unwrap();
        assert_eq!(m.neighbors(&[0.0]).unwrap(), vec![0]);
        assert_eq!(m.predict(&[0.0]).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn invalid_k() {
        let set = TrainingSet::new(vec![vec![0.0]], vec![d(&[0.5, 0.5])]).unwrap();
        assert!(KnnModel::fit(&set, 0).is_err());
        assert!(KnnModel::fit(&set, 2).is_err());
    }
}
