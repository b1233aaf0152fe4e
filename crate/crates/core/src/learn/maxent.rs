use crate::error::{Error, Result};
use crate::ldl::LabelDistribution;
use crate::learn::optim::{minimize, Method, OptimOptions, OptimReport};
use crate::learn::training::TrainingSet;

/// Softmax-of-linear-logits model `p(y_j | x) ∝ exp(θ_j · x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    /// Row-major `label_dim x feature_dim`.
    theta: Vec<f64>,
    label_dim: usize,
    feature_dim: usize,
}

/// Softmax with the max subtracted; returns probabilities and log-probabilities.
fn log_softmax(logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let log_z = max + z.ln();
    let logp: Vec<f64> = logits.iter().map(|l| l - log_z).collect();
    (logp.iter().map(|l| l.exp()).collect(), logp)
}

impl MaxEntModel {
    pub fn new(theta: Vec<f64>, label_dim: usize, feature_dim: usize) -> Result<Self> {
        if theta.len() != label_dim * feature_dim {
            return Err(Error::DimensionMismatch {
                expected: label_dim * feature_dim,
                got: theta.len(),
            });
        }
        if label_dim < 2 || feature_dim == 0 {
            return Err(Error::Config(format!("invalid model shape {label_dim}x{feature_dim}")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("maxent theta"));
        }
        Ok(Self {
            theta,
            label_dim,
            feature_dim,
        })
    }

    pub fn zeros(label_dim: usize, feature_dim: usize) -> Result<Self> {
        Self::new(vec![0.0; label_dim * feature_dim], label_dim, feature_dim)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn label_dim(&self) -> usize {
        self.label_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.theta.chunks(self.feature_dim).map(|row| row.iter().zip(x).map(|(t, v)| t * v).sum()).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<LabelDistribution> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("maxent input"));
        }
        LabelDistribution::new(log_softmax(&self.logits(x)).0)
    }

    /// `Σ_i Σ_j d_ij ln p(y_j | x_i)`, the quantity fitting maximizes.
    pub fn log_likelihood(&self, train: &TrainingSet) -> f64 {
        -objective(&self.theta, train, self.label_dim, self.feature_dim).0
    }
}

/// Negative log-likelihood and its gradient with respect to `theta`.
fn objective(theta: &[f64], train: &TrainingSet, c: usize, m: usize) -> (f64, Vec<f64>) {
    let model = MaxEntModel {
        theta: theta.to_vec(),
        label_dim: c,
        feature_dim: m,
    };
    let mut value = 0.0;
    let mut grad = vec![0.0; c * m];
    for (x, d) in train.features().iter().zip(train.targets()) {
        let (p, logp) = log_softmax(&model.logits(x));
        for j in 0..c {
            let dj = d.values()[j];
            if dj > 0.0 {
                value -= dj * logp[j];
            }
            let r = p[j] - dj;
            if r != 0.0 {
                grad[j * m..(j + 1) * m].iter_mut().zip(x).for_each(|(gj, xi)| *gj += r * xi);
            }
        }
    }
    (value, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntConfig {
    pub optimizer: OptimOptions,
}

impl MaxEntConfig {
    /// Quasi-Newton fitting (SA-BFGS).
    pub fn sa_bfgs() -> Self {
        Self {
            optimizer: OptimOptions::default(),
        }
    }

    /// Plain gradient ascent with line search (SA-IIS).
    pub fn sa_iis() -> Self {
        Self {
            optimizer: OptimOptions {
                method: Method::GradientDescent,
                ..OptimOptions::default()
            },
        }
    }
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        Self::sa_bfgs()
    }
}

/// Fits θ from zero and returns the model with the optimizer report.
pub fn maxent_fit_traced(train: &TrainingSet, config: &MaxEntConfig) -> Result<(MaxEntModel, OptimReport)> {
    let (c, m) = (train.label_dim(), train.feature_dim());
    let report = minimize(|th| objective(th, train, c, m), vec![0.0; c * m], &config.optimizer)?;
    if !report.value.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let model = MaxEntModel::new(report.x.clone(), c, m).map_err(|_| Error::NonFiniteObjective)?;
    Ok((model, report))
}

pub fn maxent_fit(train: &TrainingSet, config: &MaxEntConfig) -> Result<MaxEntModel> {
    maxent_fit_traced(train, config).map(|(m, _)| m)
}

pub fn maxent_predict(model: &MaxEntModel, x: &[f64]) -> Result<LabelDistribution> {
    model.predict(x)
}
