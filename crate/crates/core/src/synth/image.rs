use crate::autodiff::{Scalar, Tensor};
use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;
/// Luminance weights for R, G, B.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// An `height x width x 3` image, row-major with interleaved channels, values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl TextureImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * CHANNELS || height == 0 || width == 0 {
            return Err(Error::ShapeMismatch {
                op: "image",
                detail: format!("{height}x{width}x{CHANNELS} needs {} values, got {}", height * width * CHANNELS, data.len()),
            });
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && (-1.0..=1.0).contains(*v))) {
            return Err(Error::Config(format!("pixel value {v} outside [-1, 1]")));
        }
        Ok(Self { height, width, data })
    }

    /// Builds an image from a flat `h*w*3` row, clamping into `[-1, 1]`.
    pub fn from_flat<T: Scalar>(height: usize, width: usize, flat: &[T]) -> Result<Self> {
        let data = flat.iter().map(|v| v.as_f64().clamp(-1.0, 1.0)).collect();
        Self::new(height, width, data)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Number of values, `h * w * 3`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Per-pixel luminance, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.data
            .chunks(CHANNELS)
            .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
            .collect()
    }

    pub fn mean_luminance(&self) -> f64 {
        let l = self.luminance();
        l.iter().sum::<f64>() / l.len() as f64
    }

    /// Mean absolute deviation of each channel from the pixel's luminance.
    pub fn mean_chroma(&self) -> f64 {
        let total: f64 = self
            .data
            .chunks(CHANNELS)
            .map(|p| {
                let l = LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2];
                p.iter().map(|c| (c - l).abs()).sum::<f64>()
            })
            .sum();
        total / self.data.len() as f64
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_fn(&[1, self.data.len()], |i| T::from_real(self.data[i]))
    }
}

/// Stacks images into an `n x (h*w*3)` matrix.
pub fn images_to_tensor<T: Scalar>(images: &[&TextureImage]) -> Result<Tensor<T>> {
    let width = images.first().map_or(0, |im| im.len());
    let mut data = Vec::with_capacity(images.len() * width);
    for im in images {
        if im.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: im.len(),
            });
        }
        data.extend(im.data().iter().map(|&v| T::from_real(v)));
    }
    Tensor::new(vec![images.len(), width], data)
}
