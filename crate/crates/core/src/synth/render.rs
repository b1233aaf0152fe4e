use std::f64::consts::{FRAC_PI_4, TAU};

use crate::error::{Error, Result};
use crate::synth::image::{TextureImage, CHANNELS, LUMA};
use crate::synth::spec::{Family, TextureSpec};

pub const SUPPORTED_SIZES: [usize; 3] = [16, 32, 64];
pub const DEFAULT_SIZE: usize = 32;
/// Luminance amplitude of the pattern term.
pub const CONTRAST: f64 = 0.45;
/// Mean luminance shift per unit of brightness.
pub const BRIGHTNESS_SCALE: f64 = 0.3;
/// Chroma amplitude at full colorfulness.
pub const CHROMA_SCALE: f64 = 0.25;

/// Jitter amplitude at zero repetitiveness, in wavelengths.
const JITTER_WAVELENGTHS: f64 = 0.35;
/// Correlation length of the jitter field, in pixels.
const JITTER_SCALE: f64 = 10.0;
/// Turbulence strength for marble, in radians of phase.
const MARBLE_TURBULENCE: f64 = 3.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a lattice point to `[-1, 1]`.
fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(seed ^ splitmix64((ix as u64).wrapping_mul(0x1F1F_1F1F) ^ splitmix64(iy as u64)));
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Smooth value noise in `[-1, 1]` with unit lattice spacing.
pub fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (tx, ty) = (smoothstep(x - x0), smoothstep(y - y0));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

/// Fractal sum of `octaves` noise layers, normalized to `[-1, 1]`.
pub fn fbm(seed: u64, x: f64, y: f64, octaves: u32) -> f64 {
    let (mut sum, mut norm, mut amp, mut freq) = (0.0, 0.0, 1.0, 1.0);
    for o in 0..octaves {
        sum += amp * value_noise(seed.wrapping_add(o as u64), x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

fn hsv_to_rgb(hue: f64) -> [f64; 3] {
    let h = hue.rem_euclid(1.0) * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    match h as u32 {
        0 => [1.0, x, 0.0],
        1 => [x, 1.0, 0.0],
        2 => [0.0, 1.0, x],
        3 => [0.0, x, 1.0],
        4 => [x, 0.0, 1.0],
        _ => [1.0, 0.0, x],
    }
}

/// Luminance-neutral tint direction for a hue.
pub fn chroma_direction(hue: f64) -> [f64; 3] {
    let rgb = hsv_to_rgb(hue);
    let l = LUMA[0] * rgb[0] + LUMA[1] * rgb[1] + LUMA[2] * rgb[2];
    [rgb[0] - l, rgb[1] - l, rgb[2] - l]
}

struct Frame {
    cos: f64,
    sin: f64,
}

impl Frame {
    fn new(angle: f64) -> Self {
        Self {
            cos: angle.cos(),
            sin: angle.sin(),
        }
    }

    /// Coordinates along and across the frame direction.
    fn project(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.cos + y * self.sin, -x * self.sin + y * self.cos)
    }
}

/// Pattern value in `[-1, 1]` at pixel `(x, y)` = (column, row).
fn pattern(spec: &TextureSpec, x: f64, y: f64, phases: [f64; 2]) -> f64 {
    let f = spec.frequency;
    let jitter = (1.0 - spec.repetitiveness) * JITTER_WAVELENGTHS / f;
    let ju = jitter * value_noise(spec.seed ^ 0xA5A5, x / JITTER_SCALE, y / JITTER_SCALE);
    let jv = jitter * value_noise(spec.seed ^ 0x5A5A, x / JITTER_SCALE, y / JITTER_SCALE);
    match spec.family {
        Family::Striped => {
            let (u, _) = Frame::new(spec.orientation).project(x, y);
            (TAU * f * (u + ju) + phases[0]).sin()
        }
        Family::Wavy => {
            let (u, v) = Frame::new(spec.orientation).project(x, y);
            let bend = spec.wave_amplitude * (TAU * 0.5 * f * (v + jv) + phases[1]).sin();
            (TAU * f * (u + ju + bend) + phases[0]).sin()
        }
        Family::Rhombus => {
            let (u, v) = Frame::new(spec.orientation + FRAC_PI_4).project(x, y);
            let a = (TAU * f * (u + ju) + phases[0]).sin();
            let b = (TAU * f * (v + jv) + phases[1]).sin();
            (4.0 * a * b).tanh() / 4f64.tanh()
        }
        Family::Marble => {
            let (u, _) = Frame::new(spec.orientation).project(x, y);
            let turbulence = fbm(spec.seed ^ 0x3C3C, x / 8.0, y / 8.0, spec.octaves);
            (TAU * f * (u + ju) + MARBLE_TURBULENCE * turbulence + phases[0]).sin()
        }
        Family::Spotted => spots(spec, x, y, phases),
    }
}

fn spots(spec: &TextureSpec, x: f64, y: f64, phases: [f64; 2]) -> f64 {
    let spacing = 1.0 / spec.spot_density.sqrt();
    let sigma = 0.2 * spacing;
    let scatter = (1.0 - spec.repetitiveness) * 0.35 * spacing;
    let (u, v) = Frame::new(spec.orientation).project(x, y);
    let (u, v) = (u + phases[0] / TAU * spacing, v + phases[1] / TAU * spacing);
    let (cu, cv) = ((u / spacing).floor() as i64, (v / spacing).floor() as i64);
    let mut best: f64 = 0.0;
    for du in -1..=1 {
        for dv in -1..=1 {
            let (iu, iv) = (cu + du, cv + dv);
            let pu = (iu as f64 + 0.5) * spacing + scatter * lattice(spec.seed ^ 0x1111, iu, iv);
            let pv = (iv as f64 + 0.5) * spacing + scatter * lattice(spec.seed ^ 0x2222, iu, iv);
            let d2 = (u - pu).powi(2) + (v - pv).powi(2);
            best = best.max((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    2.0 * best - 1.0
}

/// Renders `spec` to a `size x size` RGB image.
///
/// Each pixel's luminance is `CONTRAST * p + BRIGHTNESS_SCALE * brightness`, where
/// `p` in `[-1, 1]` is the family pattern. A luminance-neutral tint of the `TextureSpec` hue,
/// scaled by `colorfulness * CHROMA_SCALE`, is added where the pattern is high, so
/// color never moves the luminance. Values stay inside `[-1, 1]` without clipping.
pub fn render_texture(spec: &TextureSpec, size: usize) -> Result<TextureImage> {
    if !SUPPORTED_SIZES.contains(&size) {
        return Err(Error::Config(format!("unsupported image size {size}; expected one of {SUPPORTED_SIZES:?}")));
    }
    spec.validate()?;
    let phase_seed = splitmix64(spec.seed);
    let phases = [
        (phase_seed >> 11) as f64 / (1u64 << 53) as f64 * TAU,
        (splitmix64(phase_seed) >> 11) as f64 / (1u64 << 53) as f64 * TAU,
    ];
    let tint = chroma_direction(spec.hue);
    let tint_scale = spec.colorfulness * CHROMA_SCALE;
    let offset = BRIGHTNESS_SCALE * spec.brightness;
    let mut data = Vec::with_capacity(size * size * CHANNELS);
    for row in 0..size {
        for col in 0..size {
            let p = pattern(spec, col as f64, row as f64, phases);
            let lum = CONTRAST * p + offset;
            let weight = tint_scale * (1.0 + p) / 2.0;
            for t in tint {
                data.push((lum + weight * t).clamp(-1.0, 1.0));
            }
        }
    }
    TextureImage::new(size, size, data)
}
