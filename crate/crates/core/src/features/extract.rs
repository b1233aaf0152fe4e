use crate::error::{Error, Result};
use crate::features::bank::{GaborBank, GaborFilter};
use crate::synth::TextureImage;

/// Per-filter `[mean |response|, std(response)]` pairs, concatenated in bank order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(Error::Config(format!("feature vector has odd length {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        if values.iter().skip(1).step_by(2).any(|&s| s < 0.0) {
            return Err(Error::Config("negative standard deviation".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_magnitude(&self, filter: usize) -> f64 {
        self.values[2 * filter]
    }

    pub fn std_dev(&self, filter: usize) -> f64 {
        self.values[2 * filter + 1]
    }

    /// Index of the filter with the largest mean magnitude (lowest index on ties).
    pub fn argmax_filter(&self) -> usize {
        let n = self.values.len() / 2;
        (0..n).fold(0, |best, i| if self.mean_magnitude(i) > self.mean_magnitude(best) { i } else { best })
    }
}

/// Mirror index without repeating the edge sample; valid for `-n < i < 2n - 1`.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    r as usize
}

/// Luminance plane padded by `pad` pixels on each side with reflection.
struct Padded {
    width: usize,
    pad: usize,
    data: Vec<f64>,
}

impl Padded {
    fn new(luma: &[f64], height: usize, width: usize, pad: usize) -> Self {
        let pw = width + 2 * pad;
        let ph = height + 2 * pad;
        let mut data = Vec::with_capacity(pw * ph);
        for y in 0..ph {
            let sy = reflect(y as isize - pad as isize, height);
            for x in 0..pw {
                let sx = reflect(x as isize - pad as isize, width);
                data.push(luma[sy * width + sx]);
            }
        }
        Self {
            width: pw,
            pad,
            data,
        }
    }
}

fn check_size(height: usize, width: usize, kernel: usize) -> Result<()> {
    if height < kernel || width < kernel {
        return Err(Error::ImageTooSmall { height, width, kernel });
    }
    Ok(())
}

fn response_padded(padded: &Padded, height: usize, width: usize, filter: &GaborFilter) -> Vec<f64> {
    let half = filter.half();
    let offset = padded.pad - half;
    let mut out = vec![0.0; height * width];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for ky in 0..filter.size {
                let row = (y + offset + ky) * padded.width + x + offset;
                let src = &padded.data[row..row + filter.size];
                let k = &filter.kernel[ky * filter.size..(ky + 1) * filter.size];
                acc += src.iter().zip(k).map(|(a, b)| a * b).sum::<f64>();
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Same-size filter response of a luminance plane with reflect padding.
pub fn filter_response(luma: &[f64], height: usize, width: usize, filter: &GaborFilter) -> Result<Vec<f64>> {
    if luma.len() != height * width {
        return Err(Error::LengthMismatch {
            left: luma.len(),
            right: height * width,
        });
    }
    check_size(height, width, filter.size)?;
    let padded = Padded::new(luma, height, width, filter.half());
    Ok(response_padded(&padded, height, width, filter))
}

fn mean_abs_and_std(r: &[f64]) -> [f64; 2] {
    let n = r.len() as f64;
    let mean_abs = r.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    [mean_abs, var.sqrt()]
}

/// Gabor statistics of an image's luminance.
pub fn extract_gabor_features(image: &TextureImage, bank: &GaborBank) -> Result<FeatureVector> {
    let (h, w) = (image.height(), image.width());
    check_size(h, w, bank.max_kernel_size())?;
    let padded = Padded::new(&image.luminance(), h, w, bank.max_kernel_size() / 2);
    let mut values = Vec::with_capacity(bank.feature_dim());
    for filter in bank.filters() {
        values.extend(mean_abs_and_std(&response_padded(&padded, h, w, filter)));
    }
    FeatureVector::new(values)
}

/// Features for many images as plain rows.
pub fn extract_all(images: &[&TextureImage], bank: &GaborBank) -> Result<Vec<Vec<f64>>> {
    images
        .iter()
        .map(|im| extract_gabor_features(im, bank).map(FeatureVector::into_vec))
        .collect()
}
