use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::autodiff::{Activation, Graph, Mlp, Scalar, Tensor, Var};
use crate::error::{Error, Result};
use crate::io::{Checkpoint, ModelKind};
use crate::synth::image::CHANNELS;
use crate::synth::{SemanticVector, TextureImage, SEMANTIC_DIM};

pub const DEFAULT_NOISE_DIM: usize = 64;
pub const DEFAULT_IMAGE_SIZE: usize = 32;

pub fn image_dim(size: usize) -> usize {
    size * size * CHANNELS
}

fn check_width<T: Scalar>(g: &Graph<T>, v: Var, expected: usize) -> Result<()> {
    let got = g.value(v).last_dim();
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn meta_usize(c: &Checkpoint, key: &str) -> Result<usize> {
    c.meta_parse(key)
}

/// Width preset of the perceptual regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    /// One hidden layer of 256 units.
    Small,
    /// One hidden layer of 512 units.
    Large,
}

impl Capacity {
    pub fn hidden(self) -> usize {
        match self {
            Capacity::Small => 256,
            Capacity::Large => 512,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Capacity::Small => "small",
            Capacity::Large => "large",
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Capacity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Capacity::Small),
            "large" => Ok(Capacity::Large),
            _ => Err(Error::Config(format!("unknown capacity {s:?}"))),
        }
    }
}

/// Regressor `F`: image → semantic vector, tanh output.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptualNet<T = f32> {
    pub mlp: Mlp<T>,
    pub capacity: Capacity,
    pub image_size: usize,
}

impl<T: Scalar> PerceptualNet<T> {
    pub fn new<R: Rng + ?Sized>(capacity: Capacity, image_size: usize, rng: &mut R) -> Result<Self> {
        let sizes = [image_dim(image_size), capacity.hidden(), SEMANTIC_DIM];
        Ok(Self {
            mlp: Mlp::new(&sizes, Activation::LeakyRelu, Activation::Tanh, rng)?,
            capacity,
            image_size,
        })
    }

    pub fn forward(&self, g: &mut Graph<T>, images: Var, trainable: bool) -> Result<Var> {
        check_width(g, images, image_dim(self.image_size))?;
        self.mlp.forward(g, images, trainable)
    }

    /// `n x 94` predictions for `n x (h*w*3)` images.
    pub fn predict(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        self.mlp.predict(images)
    }

    pub fn cast<U: Scalar>(&self) -> PerceptualNet<U> {
        PerceptualNet {
            mlp: self.mlp.cast(),
            capacity: self.capacity,
            image_size: self.image_size,
        }
    }
}

impl PerceptualNet<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::Perceptual)
            .with_meta("capacity", self.capacity)
            .with_meta("image_size", self.image_size);
        c.tensors = self.mlp.params.clone();
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::Perceptual)?;
        let capacity: Capacity = c.meta("capacity")?.parse()?;
        let image_size = meta_usize(c, "image_size")?;
        let sizes = [image_dim(image_size), capacity.hidden(), SEMANTIC_DIM];
        let mlp = Mlp::from_params(&sizes, Activation::LeakyRelu, Activation::Tanh, c.tensors.clone())?;
        Ok(Self {
            mlp,
            capacity,
            image_size,
        })
    }
}

/// Generator `G`: (semantic vector, noise) → image, tanh output.
///
/// An unconditional generator (`semantic_dim == 0`) reads noise only.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNet<T = f32> {
    pub mlp: Mlp<T>,
    pub semantic_dim: usize,
    pub noise_dim: usize,
    pub image_size: usize,
}

impl<T: Scalar> GeneratorNet<T> {
    pub const HIDDEN: [usize; 2] = [256, 512];

    pub fn new<R: Rng + ?Sized>(conditional: bool, noise_dim: usize, image_size: usize, rng: &mut R) -> Result<Self> {
        let semantic_dim = if conditional { SEMANTIC_DIM } else { 0 };
        let sizes = Self::sizes(semantic_dim, noise_dim, image_size);
        Ok(Self {
            mlp: Mlp::new(&sizes, Activation::LeakyRelu, Activation::Tanh, rng)?,
            semantic_dim,
            noise_dim,
            image_size,
        })
    }

    fn sizes(semantic_dim: usize, noise_dim: usize, image_size: usize) -> [usize; 4] {
        [
            semantic_dim + noise_dim,
            Self::HIDDEN[0],
            Self::HIDDEN[1],
            image_dim(image_size),
        ]
    }

    pub fn is_conditional(&self) -> bool {
        self.semantic_dim > 0
    }

    /// Appends `G(y, z)`; `y` must be given exactly when the generator is conditional.
    pub fn forward(&self, g: &mut Graph<T>, y: Option<Var>, z: Var, trainable: bool) -> Result<Var> {
        check_width(g, z, self.noise_dim)?;
        let input = match (y, self.is_conditional()) {
            (Some(y), true) => {
                check_width(g, y, self.semantic_dim)?;
                g.concat(y, z)?
            }
            (None, false) => z,
            _ => return Err(Error::Config("conditioning input does not match generator".into())),
        };
        self.mlp.forward(g, input, trainable)
    }

    /// Batch generation without a tape. `y` is ignored by unconditional generators.
    pub fn generate_batch(&self, y: Option<&Tensor<T>>, z: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let zv = g.input(z.clone())?;
        let yv = match (y, self.is_conditional()) {
            (Some(y), true) => Some(g.input(y.clone())?),
            (_, true) => return Err(Error::Config("conditional generator needs semantics".into())),
            _ => None,
        };
        let out = self.forward(&mut g, yv, zv, false)?;
        Ok(g.value(out).clone())
    }

    /// One image for semantics `y` and noise `z`.
    pub fn generate(&self, y: &SemanticVector, z: &[f64]) -> Result<TextureImage> {
        if z.len() != self.noise_dim {
            return Err(Error::DimensionMismatch {
                expected: self.noise_dim,
                got: z.len(),
            });
        }
        let zt = Tensor::from_fn(&[1, z.len()], |i| T::from_real(z[i]));
        let yt = Tensor::from_fn(&[1, SEMANTIC_DIM], |i| T::from_real(y.values()[i]));
        let out = self.generate_batch(Some(&yt), &zt)?;
        TextureImage::from_flat(self.image_size, self.image_size, out.data())
    }

    pub fn cast<U: Scalar>(&self) -> GeneratorNet<U> {
        GeneratorNet {
            mlp: self.mlp.cast(),
            semantic_dim: self.semantic_dim,
            noise_dim: self.noise_dim,
            image_size: self.image_size,
        }
    }
}

impl GeneratorNet<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::Generator)
            .with_meta("semantic_dim", self.semantic_dim)
            .with_meta("noise_dim", self.noise_dim)
            .with_meta("image_size", self.image_size);
        c.tensors = self.mlp.params.clone();
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::Generator)?;
        let semantic_dim = meta_usize(c, "semantic_dim")?;
        let noise_dim = meta_usize(c, "noise_dim")?;
        let image_size = meta_usize(c, "image_size")?;
        let sizes = Self::sizes(semantic_dim, noise_dim, image_size);
        Ok(Self {
            mlp: Mlp::from_params(&sizes, Activation::LeakyRelu, Activation::Tanh, c.tensors.clone())?,
            semantic_dim,
            noise_dim,
            image_size,
        })
    }
}

/// Discriminator `D`: (image, semantic vector) → probability the pair is real.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet<T = f32> {
    pub mlp: Mlp<T>,
    pub semantic_dim: usize,
    pub image_size: usize,
}

impl<T: Scalar> DiscriminatorNet<T> {
    pub const HIDDEN: [usize; 2] = [512, 256];

    pub fn new<R: Rng + ?Sized>(conditional: bool, image_size: usize, rng: &mut R) -> Result<Self> {
        let semantic_dim = if conditional { SEMANTIC_DIM } else { 0 };
        Ok(Self {
            mlp: Mlp::new(
                &Self::sizes(semantic_dim, image_size),
                Activation::LeakyRelu,
                Activation::Sigmoid,
                rng,
            )?,
            semantic_dim,
            image_size,
        })
    }

    fn sizes(semantic_dim: usize, image_size: usize) -> [usize; 4] {
        [image_dim(image_size) + semantic_dim, Self::HIDDEN[0], Self::HIDDEN[1], 1]
    }

    pub fn is_conditional(&self) -> bool {
        self.semantic_dim > 0
    }

    /// Appends `D(x, y)` as an `n x 1` column.
    pub fn forward(&self, g: &mut Graph<T>, x: Var, y: Option<Var>, trainable: bool) -> Result<Var> {
        check_width(g, x, image_dim(self.image_size))?;
        let input = match (y, self.is_conditional()) {
            (Some(y), true) => {
                check_width(g, y, self.semantic_dim)?;
                g.concat(x, y)?
            }
            (None, false) => x,
            _ => return Err(Error::Config("conditioning input does not match discriminator".into())),
        };
        self.mlp.forward(g, input, trainable)
    }

    pub fn cast<U: Scalar>(&self) -> DiscriminatorNet<U> {
        DiscriminatorNet {
            mlp: self.mlp.cast(),
            semantic_dim: self.semantic_dim,
            image_size: self.image_size,
        }
    }
}

impl DiscriminatorNet<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::Discriminator)
            .with_meta("semantic_dim", self.semantic_dim)
            .with_meta("image_size", self.image_size);
        c.tensors = self.mlp.params.clone();
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::Discriminator)?;
        let semantic_dim = meta_usize(c, "semantic_dim")?;
        let image_size = meta_usize(c, "image_size")?;
        Ok(Self {
            mlp: Mlp::from_params(
                &Self::sizes(semantic_dim, image_size),
                Activation::LeakyRelu,
                Activation::Sigmoid,
                c.tensors.clone(),
            )?,
            semantic_dim,
            image_size,
        })
    }
}
