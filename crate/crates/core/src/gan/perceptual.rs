use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{adam_step, AdamConfig, AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::gan::data::{epoch_batches, GanDataset};
use crate::gan::losses::{perceptual_loss_graph, CosineMode};
use crate::gan::nets::{Capacity, PerceptualNet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptualConfig {
    pub capacity: Capacity,
    pub steps: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Weight of the cosine term; 0 trains on the quadratic loss alone.
    pub beta: f64,
    pub cosine_mode: CosineMode,
    pub seed: u64,
}

impl Default for PerceptualConfig {
    fn default() -> Self {
        Self {
            capacity: Capacity::Small,
            steps: 2000,
            batch_size: 64,
            adam: AdamConfig::default(),
            beta: 1.0,
            cosine_mode: CosineMode::PerSample,
            seed: 0,
        }
    }
}

impl PerceptualConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.steps == 0 || self.batch_size == 0 || self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::Config(format!("invalid pretraining settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
    pub train_quadratic: f64,
    pub validation_quadratic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PretrainLog {
    /// Training loss of every step's batch.
    pub step_losses: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
}

/// `(1/2n) Σ ‖F(x_i) - y_i‖²` over a whole dataset.
pub fn perceptual_error(net: &PerceptualNet<f32>, data: &GanDataset) -> Result<f64> {
    const CHUNK: usize = 256;
    let mut total = 0.0;
    for start in (0..data.len()).step_by(CHUNK) {
        let idx: Vec<usize> = (start..(start + CHUNK).min(data.len())).collect();
        let (x, y) = data.batch(&idx);
        let pred = net.predict(&x)?;
        total += pred
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &t)| {
                let d = p as f64 - t as f64;
                d * d
            })
            .sum::<f64>();
    }
    Ok(total / (2.0 * data.len() as f64))
}

/// Pretrains a fresh perceptual regressor with Adam on shuffled mini-batches.
///
/// After every pass over the data the quadratic error on the training set (and on
/// `validation`, when given) is appended to the log's epoch records.
pub fn pretrain_perceptual(
    data: &GanDataset,
    validation: Option<&GanDataset>,
    config: &PerceptualConfig,
) -> Result<(PerceptualNet<f32>, PretrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = PerceptualNet::new(config.capacity, data.image_size(), &mut rng)?;
    let mut opt = AdamState::new(config.adam, &net.mlp.params);
    let mut log = PretrainLog::default();
    let mut epoch = 0;
    let mut batches = Vec::new().into_iter();
    for step in 1..=config.steps {
        let idx = match batches.next() {
            Some(b) => b,
            None => {
                batches = epoch_batches(&mut rng, data.len(), config.batch_size).into_iter();
                batches.next().expect("dataset is nonempty")
            }
        };
        let (x, y) = data.batch(&idx);
        let loss = perceptual_step(&mut net, &mut opt, &x, &y, config)?;
        log.step_losses.push(loss);
        if batches.len() == 0 {
            epoch += 1;
            log.epochs.push(EpochRecord {
                epoch,
                step,
                train_quadratic: perceptual_error(&net, data)?,
                validation_quadratic: validation.map(|v| perceptual_error(&net, v)).transpose()?,
            });
        }
    }
    Ok((net, log))
}

fn perceptual_step(
    net: &mut PerceptualNet<f32>,
    opt: &mut AdamState<f32>,
    x: &Tensor<f32>,
    y: &Tensor<f32>,
    config: &PerceptualConfig,
) -> Result<f64> {
    let mut g = Graph::new();
    let xv = g.input(x.clone())?;
    let yv = g.input(y.clone())?;
    let pred = net.forward(&mut g, xv, true)?;
    let loss = perceptual_loss_graph(&mut g, pred, yv, config.beta, config.cosine_mode)?;
    let value = g.value(loss).item().expect("scalar loss") as f64;
    let grads = g.param_grads(&g.backward(loss)?);
    adam_step(&mut net.mlp.params, &grads, opt)?;
    Ok(value)
}
