use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{adam_step, Activation, AdamConfig, AdamState, Graph, Mlp, ParamSet, Tensor, Var};
use crate::error::{Error, Result};
use crate::ldl::LabelDistribution;
use crate::learn::training::TrainingSet;

/// Probabilities below this are clamped before the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// One-hidden-layer network with tanh hidden units and a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct BpNetModel {
    pub net: Mlp<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpConfig {
    pub hidden: usize,
    pub steps: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            steps: 2000,
            adam: AdamConfig::default().with_learning_rate(1e-2),
            seed: 0,
        }
    }
}

impl BpNetModel {
    pub fn new(feature_dim: usize, label_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::new(&[feature_dim, hidden, label_dim], Activation::Tanh, Activation::Softmax, &mut rng)?;
        Ok(Self { net })
    }

    pub fn from_params(feature_dim: usize, hidden: usize, label_dim: usize, params: ParamSet<f64>) -> Result<Self> {
        let net = Mlp::from_params(&[feature_dim, hidden, label_dim], Activation::Tanh, Activation::Softmax, params)?;
        Ok(Self { net })
    }

    pub fn feature_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.net.sizes()[1]
    }

    pub fn label_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<LabelDistribution> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        let out = self.net.predict(&Tensor::new(vec![1, x.len()], x.to_vec())?)?;
        LabelDistribution::new(out.into_data())
    }
}

/// Mean `KL(target ‖ prediction)` over the batch, appended to `g`.
pub fn kl_loss(g: &mut Graph<f64>, net: &Mlp<f64>, x: &Tensor<f64>, targets: &Tensor<f64>, trainable: bool) -> Result<Var> {
    let n = x.rows() as f64;
    let entropy: f64 = targets
        .data()
        .iter()
        .filter(|&&d| d > 0.0)
        .map(|&d| d * d.ln())
        .sum::<f64>()
        / n;
    let xv = g.input(x.clone())?;
    let dv = g.input(targets.clone())?;
    let p = net.forward(g, xv, trainable)?;
    let p = g.clamp(p, PROB_FLOOR, 1.0)?;
    let logp = g.ln(p)?;
    let cross = g.mul(dv, logp)?;
    let cross = g.sum(cross)?;
    let neg = g.scale(cross, -1.0 / n)?;
    g.add_scalar(neg, entropy)
}

fn batch(train: &TrainingSet) -> Result<(Tensor<f64>, Tensor<f64>)> {
    let x = Tensor::from_rows(train.features())?;
    let d = Tensor::from_rows(train.targets())?;
    Ok((x, d))
}

/// Full-batch Adam on the KL loss; returns the model and the loss before each step.
pub fn bp_fit_traced(train: &TrainingSet, config: &BpConfig) -> Result<(BpNetModel, Vec<f64>)> {
    config.adam.validate()?;
    let mut model = BpNetModel::new(train.feature_dim(), train.label_dim(), config.hidden, config.seed)?;
    let (x, d) = batch(train)?;
    let mut state = AdamState::new(config.adam, &model.net.params);
    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let mut g = Graph::new();
        let loss = kl_loss(&mut g, &model.net, &x, &d, true)?;
        let value = g.value(loss).item().unwrap_or(f64::NAN);
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        losses.push(value);
        let grads = g.param_grads(&g.backward(loss)?);
        adam_step(&mut model.net.params, &grads, &mut state)?;
    }
    Ok((model, losses))
}

pub fn bp_fit(train: &TrainingSet, config: &BpConfig) -> Result<BpNetModel> {
    bp_fit_traced(train, config).map(|(m, _)| m)
}

pub fn bp_predict(model: &BpNetModel, x: &[f64]) -> Result<LabelDistribution> {
    model.predict(x)
}

/// Mean KL of the model on a set, evaluated without a tape.
pub fn bp_mean_kl(model: &BpNetModel, train: &TrainingSet) -> Result<f64> {
    let (x, d) = batch(train)?;
    let mut g = Graph::new();
    let loss = kl_loss(&mut g, &model.net, &x, &d, false)?;
    Ok(g.value(loss).item().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hidden_width_is_rejected() {
        assert!(matches!(BpNetModel::new(3, 2, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn memorizes_one_instance() {
        let train = TrainingSet::new(
            vec![vec![0.4, -0.3, 1.1]],
            vec![LabelDistribution::new(vec![0.1, 0.6, 0.0, 0.3]).unwrap()],
        )
        .unwrap();
        let (model, losses) = bp_fit_traced(&train, &BpConfig::default()).unwrap();
        assert_eq!(losses.len(), 2000);
        let kl = bp_mean_kl(&model, &train).unwrap();
        assert!(kl <= 1e-3, "{kl}");
        let s: f64 = model.predict(&[0.4, -0.3, 1.1]).unwrap().values().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
