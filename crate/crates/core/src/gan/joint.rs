//! Adversarial training: the conditional generator with a frozen perceptual
//! regressor, and the unconditional baseline that shares the same machinery.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{adam_step, AdamConfig, AdamState, Graph, Tensor};
use crate::error::{Error, Result};
use crate::gan::data::{normal_noise, sample_indices, GanDataset};
use crate::gan::losses::{adversarial_loss_graph, bce_loss_graph, quadratic_loss_graph, GeneratorLoss};
use crate::gan::nets::{DiscriminatorNet, GeneratorNet, PerceptualNet, DEFAULT_NOISE_DIM};
use crate::io::{save_checkpoint, write_atomic, Checkpoint, ModelKind, OptimizerEntry};

/// GAN optimizer defaults: learning rate 2e-4, first-moment decay 0.5.
pub fn gan_adam() -> AdamConfig {
    AdamConfig {
        learning_rate: 2e-4,
        beta1: 0.5,
        ..AdamConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConfig {
    /// Weight of the perceptual term in the generator loss.
    pub alpha: f64,
    pub d_steps: usize,
    pub g_steps: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub noise_dim: usize,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            d_steps: 1,
            g_steps: 2,
            batch_size: 32,
            iterations: 3000,
            seed: 0,
            adam: gan_adam(),
            noise_dim: DEFAULT_NOISE_DIM,
        }
    }
}

impl JointConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        let ok = self.alpha > 0.0
            && self.alpha.is_finite()
            && self.d_steps >= 1
            && self.g_steps >= 1
            && self.batch_size >= 1
            && self.noise_dim >= 1;
        if !ok {
            return Err(Error::Config(format!("invalid joint training settings {self:?}")));
        }
        Ok(())
    }
}

/// Unconditional baseline settings; one discriminator and one generator update per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcganConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub noise_dim: usize,
}

impl Default for DcganConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            iterations: 3000,
            seed: 0,
            adam: gan_adam(),
            noise_dim: DEFAULT_NOISE_DIM,
        }
    }
}

/// Losses of one training iteration. Generator values are averaged over that
/// iteration's generator updates; `g_loss == g_loss_d + alpha * g_loss_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub g_loss_d: f64,
    pub g_loss_f: f64,
}

pub const TRACE_HEADER: &str = "step\tD_loss\tG_loss\tG_loss_d\tG_loss_f";

/// Tab-separated loss trace with a header row; floats use shortest round-trip form.
pub fn format_trace(records: &[LossRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.step, r.d_loss, r.g_loss, r.g_loss_d, r.g_loss_f);
    }
    s
}

pub fn write_trace(records: &[LossRecord], path: &Path) -> Result<()> {
    write_atomic(path, format_trace(records).as_bytes())
}

/// Everything needed to continue adversarial training.
#[derive(Debug, Clone, PartialEq)]
pub struct GanState {
    pub generator: GeneratorNet<f32>,
    pub discriminator: DiscriminatorNet<f32>,
    /// Frozen regressor; `None` for the unconditional baseline.
    pub perceptual: Option<PerceptualNet<f32>>,
    pub g_opt: AdamState<f32>,
    pub d_opt: AdamState<f32>,
    pub alpha: f64,
    pub d_steps: usize,
    pub g_steps: usize,
    pub batch_size: usize,
    pub iteration: u64,
    pub d_updates: u64,
    pub g_updates: u64,
    rng: ChaCha8Rng,
}

impl GanState {
    /// Fresh conditional generator and discriminator around a pretrained regressor.
    pub fn joint(config: &JointConfig, perceptual: PerceptualNet<f32>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let size = perceptual.image_size;
        let generator = GeneratorNet::new(true, config.noise_dim, size, &mut rng)?;
        let discriminator = DiscriminatorNet::new(true, size, &mut rng)?;
        Ok(Self::assemble(
            generator,
            discriminator,
            Some(perceptual),
            config.adam,
            config.alpha,
            (config.d_steps, config.g_steps),
            config.batch_size,
            rng,
        ))
    }

    /// Fresh unconditional generator and discriminator.
    pub fn dcgan(config: &DcganConfig, image_size: usize) -> Result<Self> {
        config.adam.validate()?;
        if config.batch_size == 0 || config.noise_dim == 0 {
            return Err(Error::Config(format!("invalid baseline settings {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let generator = GeneratorNet::new(false, config.noise_dim, image_size, &mut rng)?;
        let discriminator = DiscriminatorNet::new(false, image_size, &mut rng)?;
        Ok(Self::assemble(
            generator,
            discriminator,
            None,
            config.adam,
            0.0,
            (1, 1),
            config.batch_size,
            rng,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        generator: GeneratorNet<f32>,
        discriminator: DiscriminatorNet<f32>,
        perceptual: Option<PerceptualNet<f32>>,
        adam: AdamConfig,
        alpha: f64,
        (d_steps, g_steps): (usize, usize),
        batch_size: usize,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            g_opt: AdamState::new(adam, &generator.mlp.params),
            d_opt: AdamState::new(adam, &discriminator.mlp.params),
            generator,
            discriminator,
            perceptual,
            alpha,
            d_steps,
            g_steps,
            batch_size,
            iteration: 0,
            d_updates: 0,
            g_updates: 0,
            rng,
        }
    }

    pub fn is_conditional(&self) -> bool {
        self.generator.is_conditional()
    }

    /// One iteration: `d_steps` discriminator updates, then `g_steps` generator updates.
    pub fn train_step(&mut self, data: &GanDataset) -> Result<LossRecord> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if data.image_size() != self.generator.image_size {
            return Err(Error::DimensionMismatch {
                expected: self.generator.image_size,
                got: data.image_size(),
            });
        }
        let mut d_loss = 0.0;
        for _ in 0..self.d_steps {
            d_loss = self.discriminator_update(data)?;
        }
        let (mut adv, mut perc) = (0.0, 0.0);
        for _ in 0..self.g_steps {
            let (a, p) = self.generator_update(data)?;
            adv += a;
            perc += p;
        }
        adv /= self.g_steps as f64;
        perc /= self.g_steps as f64;
        let g = GeneratorLoss::from_parts(adv, perc, self.alpha);
        self.iteration += 1;
        Ok(LossRecord {
            step: self.iteration,
            d_loss,
            g_loss: g.total,
            g_loss_d: g.adversarial,
            g_loss_f: g.perceptual,
        })
    }

    /// Real pairs labeled 1 and generated pairs labeled 0 in one stacked batch.
    fn discriminator_update(&mut self, data: &GanDataset) -> Result<f64> {
        let n = self.batch_size;
        let idx = sample_indices(&mut self.rng, data.len(), n);
        let (real, y) = data.batch(&idx);
        let z = normal_noise(&mut self.rng, n, self.generator.noise_dim);
        let cond = self.is_conditional();
        let fake = self.generator.generate_batch(cond.then_some(&y), &z)?;

        let mut x = real.into_data();
        x.extend_from_slice(fake.data());
        let x = Tensor::new(vec![2 * n, data.image_dim()], x)?;
        let q = Tensor::from_fn(&[2 * n, 1], |i| if i < n { 1.0 } else { 0.0 });

        let mut g = Graph::new();
        let xv = g.input(x)?;
        let yv = if cond {
            let mut yy = y.data().to_vec();
            yy.extend_from_slice(y.data());
            Some(g.input(Tensor::new(vec![2 * n, y.last_dim()], yy)?)?)
        } else {
            None
        };
        let d = self.discriminator.forward(&mut g, xv, yv, true)?;
        let loss = bce_loss_graph(&mut g, d, &q)?;
        let value = g.value(loss).item().expect("scalar loss") as f64;
        let grads = g.param_grads(&g.backward(loss)?);
        adam_step(&mut self.discriminator.mlp.params, &grads, &mut self.d_opt)?;
        self.d_updates += 1;
        Ok(value)
    }

    /// Returns the adversarial and perceptual parts of the generator loss.
    fn generator_update(&mut self, data: &GanDataset) -> Result<(f64, f64)> {
        let n = self.batch_size;
        let cond = self.is_conditional();
        let y = cond.then(|| {
            let idx = sample_indices(&mut self.rng, data.len(), n);
            data.semantics_batch(&idx)
        });
        let z = normal_noise(&mut self.rng, n, self.generator.noise_dim);

        let mut g = Graph::new();
        let zv = g.input(z)?;
        let yv = y.map(|y| g.input(y)).transpose()?;
        let fake = self.generator.forward(&mut g, yv, zv, true)?;
        let d = self.discriminator.forward(&mut g, fake, yv, false)?;
        let adv = adversarial_loss_graph(&mut g, d)?;
        let (total, perc) = match (&self.perceptual, yv) {
            (Some(f), Some(yv)) => {
                let pred = f.forward(&mut g, fake, false)?;
                let perc = quadratic_loss_graph(&mut g, pred, yv)?;
                let weighted = g.scale(perc, self.alpha)?;
                (g.add(adv, weighted)?, Some(perc))
            }
            _ => (adv, None),
        };
        let adv_value = g.value(adv).item().expect("scalar loss") as f64;
        let perc_value = perc.map_or(0.0, |p| g.value(p).item().expect("scalar loss") as f64);
        let grads = g.param_grads(&g.backward(total)?);
        adam_step(&mut self.generator.mlp.params, &grads, &mut self.g_opt)?;
        self.g_updates += 1;
        Ok((adv_value, perc_value))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let g = self.generator.to_checkpoint();
        let mut c = Checkpoint::new(ModelKind::GanState)
            .with_meta("alpha", self.alpha)
            .with_meta("d_steps", self.d_steps)
            .with_meta("g_steps", self.g_steps)
            .with_meta("batch_size", self.batch_size)
            .with_meta("iteration", self.iteration)
            .with_meta("d_updates", self.d_updates)
            .with_meta("g_updates", self.g_updates)
            .with_meta("rng_seed", hex(&self.rng.get_seed()))
            .with_meta("rng_word_pos", self.rng.get_word_pos());
        for (k, v) in &g.metadata {
            c.metadata.insert(k.clone(), v.clone());
        }
        c.tensors = self.generator.mlp.params.prefixed("g");
        c.tensors.extend(self.discriminator.mlp.params.prefixed("d"));
        if let Some(f) = &self.perceptual {
            c.metadata.insert("capacity".into(), f.capacity.to_string());
            c.tensors.extend(f.mlp.params.prefixed("f"));
        }
        c.optimizers = vec![
            OptimizerEntry {
                name: "g".into(),
                state: self.g_opt.clone(),
            },
            OptimizerEntry {
                name: "d".into(),
                state: self.d_opt.clone(),
            },
        ];
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::GanState)?;
        let part = |kind: ModelKind, prefix: &str| {
            let mut p = Checkpoint::new(kind);
            p.metadata = c.metadata.clone();
            p.tensors = c.tensors.strip_prefix(prefix);
            p
        };
        let generator = GeneratorNet::from_checkpoint(&part(ModelKind::Generator, "g"))?;
        let discriminator = DiscriminatorNet::from_checkpoint(&part(ModelKind::Discriminator, "d"))?;
        let perceptual = if c.metadata.contains_key("capacity") {
            Some(PerceptualNet::from_checkpoint(&part(ModelKind::Perceptual, "f"))?)
        } else {
            None
        };
        let g_opt = c.optimizer("g")?.clone();
        let d_opt = c.optimizer("d")?.clone();
        generator.mlp.params.check_compatible(&g_opt.m, "gan checkpoint")?;
        discriminator.mlp.params.check_compatible(&d_opt.m, "gan checkpoint")?;
        let mut rng = ChaCha8Rng::from_seed(unhex(c.meta("rng_seed")?)?);
        rng.set_word_pos(c.meta_parse("rng_word_pos")?);
        Ok(Self {
            generator,
            discriminator,
            perceptual,
            g_opt,
            d_opt,
            alpha: c.meta_parse("alpha")?,
            d_steps: c.meta_parse("d_steps")?,
            g_steps: c.meta_parse("g_steps")?,
            batch_size: c.meta_parse("batch_size")?,
            iteration: c.meta_parse("iteration")?,
            d_updates: c.meta_parse("d_updates")?,
            g_updates: c.meta_parse("g_updates")?,
            rng,
        })
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<[u8; 32]> {
    let bad = || Error::CorruptCheckpoint(format!("bad rng seed {s:?}"));
    if s.len() != 64 || !s.is_ascii() {
        return Err(bad());
    }
    let mut out = [0u8; 32];
    for (i, b) in out.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
    }
    Ok(out)
}

/// Periodic checkpointing during [`train`].
#[derive(Debug, Clone, Copy)]
pub struct CheckpointPlan<'a> {
    pub path: &'a Path,
    pub every: u64,
}

/// Runs `iterations` training iterations and returns their loss records.
///
/// With a plan, the state is saved atomically every `every` iterations and at the
/// end. A failing iteration returns its error and leaves the last saved file intact.
pub fn train(
    state: &mut GanState,
    data: &GanDataset,
    iterations: usize,
    plan: Option<CheckpointPlan<'_>>,
) -> Result<Vec<LossRecord>> {
    let mut records = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        records.push(state.train_step(data)?);
        if let Some(p) = plan {
            if p.every > 0 && state.iteration.is_multiple_of(p.every) {
                save_checkpoint(&state.to_checkpoint(), p.path)?;
            }
        }
    }
    if let Some(p) = plan {
        save_checkpoint(&state.to_checkpoint(), p.path)?;
    }
    Ok(records)
}

/// Joint training from a fresh state around `perceptual`.
pub fn train_joint(
    data: &GanDataset,
    perceptual: PerceptualNet<f32>,
    config: &JointConfig,
) -> Result<(GanState, Vec<LossRecord>)> {
    let mut state = GanState::joint(config, perceptual)?;
    let records = train(&mut state, data, config.iterations, None)?;
    Ok((state, records))
}

/// Unconditional baseline trained on the images of `data` only.
pub fn dcgan_train(data: &GanDataset, config: &DcganConfig) -> Result<(GanState, Vec<LossRecord>)> {
    let mut state = GanState::dcgan(config, data.image_size())?;
    let records = train(&mut state, data, config.iterations, None)?;
    Ok((state, records))
}
