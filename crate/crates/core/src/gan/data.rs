use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io::DatasetManifest;
use crate::synth::image::CHANNELS;
use crate::synth::{images_to_tensor, Sample, SemanticVector, TextureImage};

/// Square images paired with their semantic vectors, stored as `f32` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GanDataset {
    image_size: usize,
    images: Tensor<f32>,
    semantics: Tensor<f32>,
}

impl GanDataset {
    pub fn new(images: &[TextureImage], semantics: &[SemanticVector]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyInput);
        }
        if images.len() != semantics.len() {
            return Err(Error::LengthMismatch {
                left: images.len(),
                right: semantics.len(),
            });
        }
        let size = images[0].height();
        if let Some(im) = images.iter().find(|im| im.height() != size || im.width() != size) {
            return Err(Error::Config(format!(
                "images must be square and equal-sized; got {}x{} next to {size}x{size}",
                im.height(),
                im.width()
            )));
        }
        let refs: Vec<&TextureImage> = images.iter().collect();
        let rows: Vec<&[f64]> = semantics.iter().map(|s| s.values()).collect();
        Ok(Self {
            image_size: size,
            images: images_to_tensor(&refs)?,
            semantics: Tensor::from_rows(&rows)?,
        })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let images: Vec<TextureImage> = samples.iter().map(|s| s.image.clone()).collect();
        let semantics: Vec<SemanticVector> = samples.iter().map(|s| s.semantics.clone()).collect();
        Self::new(&images, &semantics)
    }

    /// Loads a manifest's images from `dir` with their semantic rows.
    pub fn from_manifest(manifest: &DatasetManifest, dir: &Path) -> Result<Self> {
        let images = manifest.load_images(dir)?;
        let semantics = manifest
            .rows
            .iter()
            .map(|r| SemanticVector::new(r.semantics.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&images, &semantics)
    }

    pub fn len(&self) -> usize {
        self.images.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn image_dim(&self) -> usize {
        self.image_size * self.image_size * CHANNELS
    }

    pub fn images(&self) -> &Tensor<f32> {
        &self.images
    }

    pub fn semantics(&self) -> &Tensor<f32> {
        &self.semantics
    }

    /// Rows `indices` of the images and of the semantics.
    pub fn batch(&self, indices: &[usize]) -> (Tensor<f32>, Tensor<f32>) {
        (gather(&self.images, indices), gather(&self.semantics, indices))
    }

    /// Semantics rows only.
    pub fn semantics_batch(&self, indices: &[usize]) -> Tensor<f32> {
        gather(&self.semantics, indices)
    }

    /// The first `n` rows and the rest.
    pub fn split(&self, n: usize) -> Result<(GanDataset, GanDataset)> {
        if n == 0 || n >= self.len() {
            return Err(Error::Config(format!("cannot split {} rows at {n}", self.len())));
        }
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        let part = |idx: &[usize]| {
            let (images, semantics) = self.batch(idx);
            GanDataset {
                image_size: self.image_size,
                images,
                semantics,
            }
        };
        Ok((part(&head), part(&tail)))
    }
}

pub(crate) fn gather(t: &Tensor<f32>, indices: &[usize]) -> Tensor<f32> {
    let w = t.last_dim();
    let mut data = Vec::with_capacity(indices.len() * w);
    for &i in indices {
        data.extend_from_slice(t.row(i));
    }
    Tensor::new(vec![indices.len(), w], data).expect("rows have the source width")
}

/// `batch` indices drawn uniformly with replacement.
pub(crate) fn sample_indices<R: Rng + ?Sized>(rng: &mut R, len: usize, batch: usize) -> Vec<usize> {
    (0..batch).map(|_| rng.random_range(0..len)).collect()
}

/// A shuffled pass over `0..len`, cut into batches of at most `batch`.
pub(crate) fn epoch_batches<R: Rng + ?Sized>(rng: &mut R, len: usize, batch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    order.chunks(batch).map(|c| c.to_vec()).collect()
}

/// `n x dim` standard normal noise.
pub(crate) fn normal_noise<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Tensor<f32> {
    Tensor::from_fn(&[n, dim], |_| rng.sample::<f32, _>(rand_distr::StandardNormal))
}
