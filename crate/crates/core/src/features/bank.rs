use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Shortest wavelength in the bank, in pixels.
pub const BASE_WAVELENGTH: f64 = 4.0;
pub const WAVELENGTH_RATIO: f64 = 2.0;
pub const ASPECT_RATIO: f64 = 0.5;
/// Gaussian width as a multiple of wavelength.
pub const SIGMA_PER_WAVELENGTH: f64 = 0.56;
/// Kernel half-width as a multiple of sigma.
pub const SUPPORT_SIGMAS: f64 = 2.5;

/// One real (even-phase) Gabor kernel, zero-mean and L1-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFilter {
    pub wavelength: f64,
    pub orientation: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Odd side length.
    pub size: usize,
    /// Row-major `size x size` weights; rows follow the image's y axis.
    pub kernel: Vec<f64>,
}

impl GaborFilter {
    pub fn new(wavelength: f64, orientation: f64) -> Self {
        let sigma = SIGMA_PER_WAVELENGTH * wavelength;
        let half = (SUPPORT_SIGMAS * sigma).ceil().max(1.0) as i64;
        let size = (2 * half + 1) as usize;
        let (c, s) = (orientation.cos(), orientation.sin());
        let g2 = ASPECT_RATIO * ASPECT_RATIO;
        let mut kernel = Vec::with_capacity(size * size);
        for y in -half..=half {
            for x in -half..=half {
                let (x, y) = (x as f64, y as f64);
                let xr = x * c + y * s;
                let yr = -x * s + y * c;
                let envelope = (-(xr * xr + g2 * yr * yr) / (2.0 * sigma * sigma)).exp();
                kernel.push(envelope * (2.0 * PI * xr / wavelength).cos());
            }
        }
        let mean = kernel.iter().sum::<f64>() / kernel.len() as f64;
        kernel.iter_mut().for_each(|k| *k -= mean);
        let l1: f64 = kernel.iter().map(|k| k.abs()).sum();
        kernel.iter_mut().for_each(|k| *k /= l1);
        Self {
            wavelength,
            orientation,
            gamma: ASPECT_RATIO,
            sigma,
            size,
            kernel,
        }
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn mean(&self) -> f64 {
        self.kernel.iter().sum::<f64>() / self.kernel.len() as f64
    }
}

/// `scales x orientations` filters, scale-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborBank {
    scales: usize,
    orientations: usize,
    filters: Vec<GaborFilter>,
}

/// Wavelengths `4 * 2^s` for `s < scales`, orientations `k * π / orientations`.
pub fn make_gabor_bank(scales: usize, orientations: usize) -> Result<GaborBank> {
    if scales == 0 || orientations == 0 {
        return Err(Error::Config(format!(
            "Gabor bank needs at least one scale and orientation, got {scales}x{orientations}"
        )));
    }
    let mut filters = Vec::with_capacity(scales * orientations);
    for s in 0..scales {
        let wavelength = BASE_WAVELENGTH * WAVELENGTH_RATIO.powi(s as i32);
        for o in 0..orientations {
            filters.push(GaborFilter::new(wavelength, o as f64 * PI / orientations as f64));
        }
    }
    Ok(GaborBank {
        scales,
        orientations,
        filters,
    })
}

impl GaborBank {
    /// The bank used for 32 px corpora: 2 scales (λ = 4, 8) by 6 orientations.
    pub fn default_for_corpus() -> Self {
        make_gabor_bank(2, 6).expect("nonzero counts")
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    pub fn filters(&self) -> &[GaborFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn index(&self, scale: usize, orientation: usize) -> usize {
        scale * self.orientations + orientation
    }

    /// `(scale, orientation)` of filter `i`.
    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.orientations, i % self.orientations)
    }

    pub fn max_kernel_size(&self) -> usize {
        self.filters.iter().map(|f| f.size).max().unwrap_or(0)
    }

    /// Length of the feature vectors this bank produces.
    pub fn feature_dim(&self) -> usize {
        2 * self.filters.len()
    }

    /// Column names matching the feature layout.
    pub fn feature_names(&self) -> Vec<String> {
        (0..self.len())
            .flat_map(|i| {
                let (s, o) = self.position(i);
                [format!("gabor_s{s}_o{o}_mean"), format!("gabor_s{s}_o{o}_std")]
            })
            .collect()
    }
}
